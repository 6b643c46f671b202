#include "decoupler/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "decoupler/parallel.hpp"
#include "decoupler/rng.hpp"

namespace decoupler::tomography {

using C = std::complex<double>;

const std::array<Eigen::Matrix2cd, 4>& pauli_basis()
{
    static const std::array<Eigen::Matrix2cd, 4> basis = [] {
        std::array<Eigen::Matrix2cd, 4> s;
        s[0] << 1, 0, 0, 1;
        s[1] << 0, 1, 1, 0;
        s[2] << 0, C(0, -1), C(0, 1), 0;
        s[3] << 1, 0, 0, -1;
        return s;
    }();
    return basis;
}

namespace {

// Maps vec(χ) (index 4m+n) to the Pauli transfer matrix vec(R) (index 4i+j),
// R_ij = ½ Tr(σ_i E(σ_j)). Inverted once.
const Eigen::Matrix<C, 16, 16>& ptm_to_chi()
{
    static const Eigen::Matrix<C, 16, 16> inverse = [] {
        const auto& s = pauli_basis();
        Eigen::Matrix<C, 16, 16> forward;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int m = 0; m < 4; ++m)
                    for (int n = 0; n < 4; ++n)
                        forward(4 * i + j, 4 * m + n) = 0.5 * (s[i] * s[m] * s[j] * s[n]).trace();
        Eigen::FullPivLU<Eigen::Matrix<C, 16, 16>> lu(forward);
        if (!lu.isInvertible()) throw std::logic_error("Pauli superoperator basis is singular");
        return Eigen::Matrix<C, 16, 16>(lu.inverse());
    }();
    return inverse;
}

} // namespace

ProcessMatrix chi_from_outputs(const std::array<BlochVector, 4>& out)
{
    const auto& r0 = out[0];
    const auto& r1 = out[1];
    const auto& rx = out[2];
    const auto& ry = out[3];
    // Columns j of R: images of I, σx, σy, σz; rows i: Pauli components.
    Eigen::Matrix4d R = Eigen::Matrix4d::Zero();
    const Eigen::Vector3d v0(r0.rx, r0.ry, r0.rz);
    const Eigen::Vector3d v1(r1.rx, r1.ry, r1.rz);
    const Eigen::Vector3d vx(rx.rx, rx.ry, rx.rz);
    const Eigen::Vector3d vy(ry.rx, ry.ry, ry.rz);
    const Eigen::Vector3d mid = 0.5 * (v0 + v1);
    R(0, 0) = 1.0;
    R.block<3, 1>(1, 0) = mid;
    R.block<3, 1>(1, 1) = vx - mid;
    R.block<3, 1>(1, 2) = vy - mid;
    R.block<3, 1>(1, 3) = 0.5 * (v0 - v1);

    Eigen::Matrix<C, 16, 1> rvec;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) rvec(4 * i + j) = R(i, j);
    const Eigen::Matrix<C, 16, 1> cvec = ptm_to_chi() * rvec;

    ProcessMatrix p;
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) p.chi(m, n) = cvec(4 * m + n);
    // Hermitian in exact arithmetic; remove rounding asymmetry.
    p.chi = 0.5 * (p.chi + p.chi.adjoint()).eval();
    return p;
}

double ProcessMatrix::trace_preservation_residual() const
{
    const auto& s = pauli_basis();
    Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) acc += chi(m, n) * s[n] * s[m];
    return (acc - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

double ProcessMatrix::min_eigenvalue() const
{
    const Eigen::Matrix4cd h = 0.5 * (chi + chi.adjoint());
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd>(h, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double ProcessMatrix::hermiticity_residual() const { return (chi - chi.adjoint()).cwiseAbs().maxCoeff(); }

ReconstructedState state_from_bloch(double rx, double ry, double rz)
{
    ReconstructedState out;
    BlochVector r{rx, ry, rz};
    out.raw_norm = r.norm();
    if (out.raw_norm > 1.0) {
        out.clamped = true;
        r = {rx / out.raw_norm, ry / out.raw_norm, rz / out.raw_norm};
    }
    out.bloch = r;
    out.rho = DensityMatrix::from_bloch(r);
    return out;
}

void TomographyRecord::check() const
{
    const double se = std::sqrt(std_error[0] * std_error[0] + std_error[1] * std_error[1] + std_error[2] * std_error[2]);
    if (output.norm() > 1.0 + 3.0 * se + 1e-12)
        throw std::invalid_argument(fmt::format("tomography record for |{}>: |r| = {} exceeds 1 + 3 s.e.",
                                                dynamics::label_of(input), output.norm()));
}

ProcessMatrix process_tomography(std::span<const TomographyRecord> records)
{
    if (records.size() != 4)
        throw std::invalid_argument(fmt::format("process_tomography needs 4 records, got {}", records.size()));
    std::array<BlochVector, 4> outputs;
    std::array<bool, 4> seen{};
    for (const auto& rec : records) {
        rec.check();
        const auto it = std::find(kCanonicalInputs.begin(), kCanonicalInputs.end(), rec.input);
        const auto k = static_cast<std::size_t>(it - kCanonicalInputs.begin());
        if (seen[k])
            throw std::invalid_argument(fmt::format("duplicate tomography input |{}>", dynamics::label_of(rec.input)));
        seen[k] = true;
        outputs[k] = rec.output;
    }
    return chi_from_outputs(outputs);
}

FidelityResult process_fidelity(const ProcessMatrix& meas, const ProcessMatrix& ideal)
{
    const auto& x = ideal.chi;
    constexpr double tol = 1e-9;
    if ((x - x.adjoint()).cwiseAbs().maxCoeff() > tol || std::abs(x.trace() - 1.0) > tol
        || (x * x - x).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("process_fidelity: ideal process is not rank one");
    Eigen::Index k = 0;
    x.diagonal().real().maxCoeff(&k);
    const Eigen::Vector4cd u = x.col(k) / std::sqrt(x(k, k).real());
    Eigen::Matrix2cd U = Eigen::Matrix2cd::Zero();
    for (int m = 0; m < 4; ++m) U += u(m) * pauli_basis()[static_cast<std::size_t>(m)];
    if ((U.adjoint() * U - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() > 1e-7)
        throw std::invalid_argument("process_fidelity: ideal process is not unitary");

    FidelityResult out;
    out.raw = (x * meas.chi).trace().real();
    out.value = std::clamp(out.raw, 0.0, 1.0);
    out.clipped = out.value != out.raw;
    return out;
}

ProcessMatrix dephasing_channel(double w)
{
    if (!(std::abs(w) <= 1.0)) throw std::invalid_argument(fmt::format("dephasing_channel: |w| = {} > 1", std::abs(w)));
    ProcessMatrix p;
    p.chi(0, 0) = 0.5 * (1.0 + w);
    p.chi(3, 3) = 0.5 * (1.0 - w);
    return p;
}

ProcessMatrix identity_process() { return dephasing_channel(1.0); }

ProcessMatrix unitary_process(const Eigen::Matrix2cd& u)
{
    return kraus_process(std::span<const Eigen::Matrix2cd>(&u, 1));
}

ProcessMatrix kraus_process(std::span<const Eigen::Matrix2cd> kraus)
{
    ProcessMatrix p;
    for (const auto& k : kraus) {
        Eigen::Vector4cd a;
        for (int m = 0; m < 4; ++m) a(m) = 0.5 * (pauli_basis()[static_cast<std::size_t>(m)] * k).trace();
        p.chi += a * a.adjoint();
    }
    return p;
}

Eigen::Matrix2cd apply_process(const ProcessMatrix& p, const Eigen::Matrix2cd& rho)
{
    const auto& s = pauli_basis();
    Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) out += p.chi(m, n) * s[m] * rho * s[n];
    return out;
}

ProcessEstimate qpt_experiment(const bath::BathParams& p, const sequences::PulseSequence& seq,
                               const dynamics::PulseErrorModel& err, const dynamics::McOptions& opts)
{
    p.check();
    err.check();
    sequences::require_valid(seq);
    if (opts.trajectories < 2) throw std::invalid_argument("qpt_experiment needs at least 2 trajectories");
    const double dt = opts.fine_dt > 0.0 ? opts.fine_dt : p.tau_c / 1000.0;
    const auto grid = dynamics::trajectory_grid(seq, opts.exact_integrals, dt);

    const auto m = ensemble_moments<32>(opts.trajectories, opts.threads, [&](std::size_t i) {
        const auto traj = bath::sample_trajectory(p, grid, substream_seed(opts.seed, i), opts.exact_integrals);
        std::array<BlochVector, 4> outputs;
        for (std::size_t k = 0; k < 4; ++k)
            outputs[k] = dynamics::propagate(traj, seq, err, dynamics::bloch_of(kCanonicalInputs[k]));
        const auto chi = chi_from_outputs(outputs).chi;
        std::array<double, 32> flat;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                flat[static_cast<std::size_t>(2 * (4 * a + b))] = chi(a, b).real();
                flat[static_cast<std::size_t>(2 * (4 * a + b) + 1)] = chi(a, b).imag();
            }
        return flat;
    });

    ProcessEstimate out;
    out.n_trajectories = m.count;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const auto k = static_cast<std::size_t>(2 * (4 * a + b));
            out.chi.chi(a, b) = C(m.mean[k], m.mean[k + 1]);
            out.std_error_re(a, b) = m.std_error[k];
            out.std_error_im(a, b) = m.std_error[k + 1];
        }
    return out;
}

} // namespace decoupler::tomography
