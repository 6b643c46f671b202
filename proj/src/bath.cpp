#include "decoupler/bath.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "decoupler/rng.hpp"

namespace decoupler::bath {

void BathParams::check() const
{
    if (!(b > 0.0) || !std::isfinite(b))
        throw std::invalid_argument("bath: b must be positive, got " + std::to_string(b));
    if (!(tau_c > 0.0) || !std::isfinite(tau_c))
        throw std::invalid_argument("bath: tau_c must be positive, got " + std::to_string(tau_c));
}

double correlation(const BathParams& p, double t)
{
    return p.b * p.b * std::exp(-std::abs(t) / p.tau_c);
}

double spectrum(const BathParams& p, double omega)
{
    const double wt = omega * p.tau_c;
    return 2.0 * p.b * p.b * p.tau_c / (1.0 + wt * wt);
}

double ou_step(double current, double dt, const BathParams& p, double xi)
{
    if (!(dt > 0.0)) throw std::invalid_argument("ou_step: dt must be positive");
    const double x = dt / p.tau_c;
    return current * std::exp(-x) + p.b * std::sqrt(-std::expm1(-2.0 * x)) * xi;
}

namespace {

// 2x − 4 tanh(x/2): variance of the integral given both endpoints, in units of b²τ².
double bridge_variance_factor(double x)
{
    if (x < 1e-2) {
        const double x2 = x * x;
        return x * x2 * (1.0 / 6.0 - x2 / 60.0 + 17.0 * x2 * x2 / 5040.0);
    }
    return 2.0 * x - 4.0 * std::tanh(0.5 * x);
}

// x − 1 + e^{−x}
double integral_variance_factor(double x)
{
    if (x < 1e-3) {
        return x * x * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0);
    }
    return x + std::expm1(-x);
}

} // namespace

IntervalMoments interval_moments(const BathParams& p, double h)
{
    const double x = h / p.tau_c;
    IntervalMoments m{};
    m.decay = std::exp(-x);
    m.endpoint_sd = p.b * std::sqrt(-std::expm1(-2.0 * x));
    m.bridge_gain = p.tau_c * std::tanh(0.5 * x);
    m.bridge_sd = p.b * p.tau_c * std::sqrt(bridge_variance_factor(x));
    return m;
}

double integral_variance(const BathParams& p, double t)
{
    return 2.0 * p.b * p.b * p.tau_c * p.tau_c * integral_variance_factor(std::abs(t) / p.tau_c);
}

BathTrajectory sample_trajectory(const BathParams& p, std::span<const double> grid,
                                 std::uint64_t seed, bool with_integrals)
{
    p.check();
    if (grid.empty()) throw std::invalid_argument("sample_trajectory: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("sample_trajectory: grid must be strictly increasing");

    Engine engine{seed};
    std::normal_distribution<double> normal;

    BathTrajectory traj;
    traj.times.assign(grid.begin(), grid.end());
    traj.values.resize(grid.size());
    traj.values[0] = p.b * normal(engine);
    if (with_integrals) traj.integrals.emplace(grid.size() - 1);

    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double b0 = traj.values[i - 1];
        const double h = grid[i] - grid[i - 1];
        if (with_integrals) {
            const auto m = interval_moments(p, h);
            const double b1 = b0 * m.decay + m.endpoint_sd * normal(engine);
            traj.values[i] = b1;
            (*traj.integrals)[i - 1] = m.bridge_gain * (b0 + b1) + m.bridge_sd * normal(engine);
        } else {
            traj.values[i] = ou_step(b0, h, p, normal(engine));
        }
    }
    return traj;
}

} // namespace decoupler::bath
