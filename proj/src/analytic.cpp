#include "decoupler/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "decoupler/errors.hpp"

namespace decoupler::analytic {

double fid_envelope(const BathParams& p, double t) { return std::exp(-0.5 * p.b * p.b * t * t); }

double t2_from_bath(const BathParams& p)
{
    p.check();
    return std::cbrt(12.0 * p.tau_c / (p.b * p.b));
}

bool slow_bath(const BathParams& p) { return p.b * p.tau_c >= 10.0; }

double echo_decay(const BathParams& p, double t)
{
    const double u = t / t2_from_bath(p);
    return std::exp(-u * u * u);
}

double scaling_prefactor(const BathParams& p) { return 2.0 / 3.0 * p.b * p.b * p.tau_c * p.tau_c; }

double scaling_decay(const BathParams& p, int n, double t)
{
    if (n < 1) throw std::invalid_argument("scaling_decay: n must be >= 1");
    const double denom = 2.0 * n * p.tau_c;
    return std::exp(-scaling_prefactor(p) * n * t * t * t / (denom * denom * denom));
}

double t_coh(const BathParams& p, int n)
{
    if (n < 1) throw std::invalid_argument("t_coh: n must be >= 1");
    return t2_from_bath(p) * std::pow(static_cast<double>(n), 2.0 / 3.0);
}

namespace {

// x − 1 + e^{−x}
double self_term(double x)
{
    if (x < 1e-3) return x * x * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0);
    return x + std::expm1(-x);
}

} // namespace

double chi_gaussian(const PulseSequence& seq, const BathParams& p)
{
    p.check();
    sequences::require_valid(seq);
    const auto edges = sequences::interval_edges(seq);

    // Interval i contributes b²τ²·self_term(x_i); pairs i < j contribute
    // s_i s_j b²τ² (1−e^{−x_i})(1−e^{−x_j}) e^{−gap_ij/τ}. `carry` holds the
    // decayed sum over earlier intervals so the pair sum is linear in n.
    double total = 0.0;
    double carry = 0.0;
    double sign = 1.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double x = (edges[i + 1] - edges[i]) / p.tau_c;
        const double em = -std::expm1(-x);
        total += self_term(x) + sign * em * carry;
        carry = carry * std::exp(-x) + sign * em;
        sign = -sign;
    }
    return std::max(0.0, p.b * p.b * p.tau_c * p.tau_c * total);
}

double filter_function(const PulseSequence& seq, double omega)
{
    const auto edges = sequences::interval_edges(seq);
    std::complex<double> f{0.0, 0.0};
    double sign = 1.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double h = edges[i + 1] - edges[i];
        const double mid = 0.5 * (edges[i + 1] + edges[i]);
        const double arg = 0.5 * omega * h;
        const double sinc = std::abs(arg) < 1e-8 ? 1.0 - arg * arg / 6.0 : std::sin(arg) / arg;
        f += sign * h * sinc * std::polar(1.0, omega * mid);
        sign = -sign;
    }
    return std::norm(f);
}

namespace {

// ∫_{ωm}^∞ S(ω)/ω² dω / (2 b² τ²) = 1/y − atan(1/y), y = ωm τ
double lorentz_tail(double y)
{
    const double u = 1.0 / y;
    if (y > 10.0) {
        const double u2 = u * u;
        return u * u2 * (1.0 / 3.0 - u2 / 5.0 + u2 * u2 / 7.0 - u2 * u2 * u2 / 9.0);
    }
    return u - std::atan(u);
}

} // namespace

FilterResult filter_exponent(const PulseSequence& seq, const BathParams& p, const QuadratureOptions& opts)
{
    p.check();
    sequences::require_valid(seq);
    const double T = seq.total_time;
    const auto n = static_cast<double>(std::max<std::size_t>(seq.pulses.size(), 1));

    FilterResult out;
    out.omega_max = opts.omega_max > 0.0 ? opts.omega_max : std::max(100.0 / p.tau_c, 100.0 * n / T);

    // Panel edges: geometric near the Lorentzian knee at 1/τ_C, then uniform at
    // a width spanning two periods of the slowest filter oscillation.
    const double width = 4.0 * std::numbers::pi / T;
    std::vector<double> cuts{0.0};
    for (double w = 0.125 / p.tau_c; w < std::min(width, out.omega_max); w *= 2.0) cuts.push_back(w);
    for (double w = cuts.back() + width; w < out.omega_max; w += width) cuts.push_back(w);
    cuts.push_back(out.omega_max);

    const auto integrand = [&](double w) {
        return bath::spectrum(p, w) * filter_function(seq, w) / (2.0 * std::numbers::pi);
    };
    // A single Gauss–Kronrod pass estimates every panel; panels whose error
    // exceeds their share of the absolute budget are then refined adaptively.
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const std::size_t panels = cuts.size() - 1;
    std::vector<double> value(panels), error(panels);
    double sum = 0.0;
    for (std::size_t k = 0; k < panels; ++k) {
        value[k] = GK::integrate(integrand, cuts[k], cuts[k + 1], 0, 0.0, &error[k]);
        sum += value[k];
    }
    const double budget = 0.1 * opts.rel_tol * std::abs(sum) / static_cast<double>(panels);
    double err = 0.0;
    sum = 0.0;
    for (std::size_t k = 0; k < panels; ++k) {
        if (error[k] > budget) {
            const double tol = std::max(budget / std::max(std::abs(value[k]), 1e-300), 1e-15);
            value[k] = GK::integrate(integrand, cuts[k], cuts[k + 1], 15, tol, &error[k]);
        }
        sum += value[k];
        err += error[k];
    }

    // Beyond ω_max, |f|² averages to Σ c_k²/ω² with c_k the sign jumps at the
    // interval edges; the oscillating cross terms are dropped.
    double jumps = 2.0;  // endpoints
    for (std::size_t k = 0; k < seq.pulses.size(); ++k) jumps += 4.0;
    const double tail = jumps * 2.0 * p.b * p.b * p.tau_c * p.tau_c * lorentz_tail(out.omega_max * p.tau_c)
                        / (2.0 * std::numbers::pi);

    out.chi = sum + tail;
    out.abs_error = err;
    out.converged = err <= std::max(opts.rel_tol * std::abs(out.chi), 1e-300);
    return out;
}

double DecayLaw::value(double t) const
{
    switch (kind) {
    case DecayKind::GaussianFid: return fid_envelope(bath, t);
    case DecayKind::CubicEcho: return echo_decay(bath, t);
    case DecayKind::Scaling: return scaling_decay(bath, n, t);
    }
    return 0.0;
}

double DecayLaw::one_over_e_time() const
{
    switch (kind) {
    case DecayKind::GaussianFid: return std::sqrt(2.0) / bath.b;
    case DecayKind::CubicEcho: return t2_from_bath(bath);
    case DecayKind::Scaling: return t_coh(bath, n);
    }
    return 0.0;
}

double decay_time(const std::function<PulseSequence(double)>& make, const BathParams& p, double level,
                  double t_limit)
{
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("decay_time: level must be in (0, 1)");
    const double target = -std::log(level);
    const auto excess = [&](double t) { return chi_gaussian(make(t), p) - target; };

    double lo = 1e-6;
    double hi = 1e-3;
    while (excess(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > t_limit) throw NumericalError(fmt::format("decay_time: no crossing of {} below t={}", level, t_limit));
    }
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(excess, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (r.first + r.second);
}

} // namespace decoupler::analytic
