// oracles.hpp - independent reference computations shared by the test binaries
//
// Deliberately written without the library's own algorithms: 2×2 unitary
// products instead of Bloch rotations, Gauss–Legendre double integrals
// instead of the closed-form χ recursion, explicit Kraus sums for channels.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "decoupler/bath.hpp"
#include "decoupler/dynamics.hpp"
#include "decoupler/sequences.hpp"

namespace oracle {

using Mat = Eigen::Matrix2cd;
using cd = std::complex<double>;

inline const std::array<Mat, 4>& paulis()
{
    static const std::array<Mat, 4> s = [] {
        std::array<Mat, 4> m;
        m[0] << 1, 0, 0, 1;
        m[1] << 0, 1, 1, 0;
        m[2] << 0, cd(0, -1), cd(0, 1), 0;
        m[3] << 1, 0, 0, -1;
        return m;
    }();
    return s;
}

// exp(−i θ n·σ / 2)
inline Mat rotation(double nx, double ny, double nz, double theta)
{
    const auto& s = paulis();
    return std::cos(theta / 2) * s[0] - cd(0, std::sin(theta / 2)) * (nx * s[1] + ny * s[2] + nz * s[3]);
}

// Product of free-precession and pulse unitaries; `phases[k]` is the field
// phase ∫B dt of free interval k. Pulse axes must be exactly X or Y.
inline Mat sequence_unitary(const decoupler::sequences::PulseSequence& seq, const std::vector<double>& phases,
                            const decoupler::dynamics::PulseErrorModel& err)
{
    Mat u = rotation(0, 0, 1, phases.at(0));
    for (std::size_t k = 0; k < seq.pulses.size(); ++k) {
        const auto& p = seq.pulses[k];
        const bool is_x = p.axis == decoupler::sequences::kAxisX;
        const double az = p.axis + (is_x ? err.tilt_x : err.tilt_y);
        const double angle = p.nominal_angle * (1.0 + (is_x ? err.eps_x : err.eps_y));
        u = rotation(std::cos(az), std::sin(az), 0, angle) * u;
        u = rotation(0, 0, 1, phases.at(k + 1)) * u;
    }
    return u;
}

inline Mat rho_from_bloch(double rx, double ry, double rz)
{
    const auto& s = paulis();
    return 0.5 * (s[0] + rx * s[1] + ry * s[2] + rz * s[3]);
}

inline std::array<double, 3> bloch(const Mat& rho)
{
    const auto& s = paulis();
    return {(rho * s[1]).trace().real(), (rho * s[2]).trace().real(), (rho * s[3]).trace().real()};
}

inline std::array<double, 3> evolve(const Mat& u, const std::array<double, 3>& r)
{
    return bloch(u * rho_from_bloch(r[0], r[1], r[2]) * u.adjoint());
}

inline Mat apply_kraus(std::span<const Mat> kraus, const Mat& rho)
{
    Mat out = Mat::Zero();
    for (const auto& k : kraus) out += k * rho * k.adjoint();
    return out;
}

// χ = ½ ∫∫ s(u) s(v) C(u − v) du dv by Gauss–Legendre on every interval pair.
// Diagonal blocks use the folded form 2∫_0^h (h − r) C(r) dr to avoid the kink.
inline double chi_double_integral(const decoupler::sequences::PulseSequence& seq, const decoupler::bath::BathParams& p)
{
    using GL = boost::math::quadrature::gauss<double, 30>;
    const auto e = decoupler::sequences::interval_edges(seq);
    const std::size_t m = e.size() - 1;
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double h = e[i + 1] - e[i];
        total += GL::integrate([&](double r) { return 2.0 * (h - r) * decoupler::bath::correlation(p, r); }, 0.0, h);
        for (std::size_t j = i + 1; j < m; ++j) {
            const double sign = ((i + j) % 2) ? -1.0 : 1.0;
            const double inner = GL::integrate(
                [&](double u) {
                    return GL::integrate([&](double v) { return decoupler::bath::correlation(p, u - v); }, e[i], e[i + 1]);
                },
                e[j], e[j + 1]);
            total += 2.0 * sign * inner;
        }
    }
    return 0.5 * total;
}

} // namespace oracle
