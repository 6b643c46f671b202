#include <doctest.h>

#include <cmath>
#include <random>

#include "decoupler/analytic.hpp"
#include "decoupler/dynamics.hpp"
#include "decoupler/errors.hpp"
#include "decoupler/fitting.hpp"

using namespace decoupler;
using namespace decoupler::fitting;

namespace {

const bath::BathParams nv1{3.6, 25.0};

template <class F>
DecayCurve sample(F f, double t0, double t1, int points, double se = 0.0)
{
    DecayCurve c;
    for (int i = 0; i < points; ++i) {
        const double t = t0 + (t1 - t0) * i / (points - 1);
        c.points.push_back({t, f(t), se});
    }
    return c;
}

DecayCurve scaled(const DecayCurve& c, double k)
{
    DecayCurve out = c;
    for (auto& p : out.points) p.t *= k;
    return out;
}

} // namespace

TEST_SUITE("fitting") {

TEST_CASE("curve invariants")
{
    DecayCurve c{{{0.0, 1.0, 0.0}, {1.0, 0.5, 0.1}}};
    CHECK_NOTHROW(c.check());
    c.points[1].t = 0.0;
    CHECK_THROWS_AS(c.check(), std::invalid_argument);
    c.points[1] = {1.0, 0.5, -0.1};
    CHECK_THROWS_AS(c.check(), std::invalid_argument);
}

TEST_CASE("exact synthetic curves recover their parameters")
{
    const auto g = sample([](double t) { return analytic::fid_envelope(nv1, t); }, 0.0, 1.0, 20);
    const auto rg = fit_gaussian_decay(g);
    CHECK(rg.converged);
    CHECK(rg.params.at("b") == doctest::Approx(3.6).epsilon(1e-6));

    const double t2 = analytic::t2_from_bath(nv1);
    const auto e = sample([](double t) { return analytic::echo_decay(nv1, t); }, 0.1, 6.0, 30);
    const auto re = fit_cubic_exp(e);
    CHECK(re.converged);
    CHECK(re.params.at("T_coh") == doctest::Approx(t2).epsilon(1e-6));
    CHECK(re.params.at("T_coh") == doctest::Approx(2.85).epsilon(0.002));

    const auto s8 = sample([](double t) { return analytic::scaling_decay(nv1, 8, t); }, 0.5, 25.0, 30);
    CHECK(fit_cubic_exp(s8).params.at("T_coh") == doctest::Approx(4.0 * t2).epsilon(1e-6));
}

TEST_CASE("free amplitude and baseline")
{
    const double a = 0.8, c = 0.1;
    const auto curve = sample([&](double t) { return a * std::exp(-std::pow(t / 3.0, 3)) + c; }, 0.1, 8.0, 40);
    FitOptions fo;
    fo.free_amplitude = true;
    const auto r = fit_cubic_exp(curve, fo);
    CHECK(r.converged);
    CHECK(r.params.at("T_coh") == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(r.params.at("A") == doctest::Approx(a).epsilon(1e-6));
    CHECK(r.params.at("c") == doctest::Approx(c).epsilon(1e-6));

    const auto gc = sample([&](double t) { return a * std::exp(-0.5 * 4.0 * t * t) + c; }, 0.0, 2.0, 30);
    const auto rg = fit_gaussian_decay(gc, fo);
    CHECK(rg.params.at("b") == doctest::Approx(2.0).epsilon(1e-6));

    // Frozen at the true non-default values.
    FitOptions frozen;
    frozen.amplitude = a;
    frozen.baseline = c;
    CHECK(fit_cubic_exp(curve, frozen).params.at("T_coh") == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(fitting::one_over_e_time(curve, a, c) == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("noisy data: weighted fit is consistent with its uncertainty")
{
    std::mt19937_64 eng(4);
    std::normal_distribution<double> noise(0.0, 0.01);
    int within = 0;
    const int trials = 200;
    for (int k = 0; k < trials; ++k) {
        auto c = sample([](double t) { return std::exp(-std::pow(t / 2.0, 3)); }, 0.1, 4.0, 25, 0.01);
        for (auto& p : c.points) p.value += noise(eng);
        const auto r = fit_cubic_exp(c);
        REQUIRE(r.converged);
        CHECK(r.std_errors.at("T_coh") > 0.0);
        if (std::abs(r.params.at("T_coh") - 2.0) < r.std_errors.at("T_coh")) ++within;
    }
    // About 68% of fits land within one standard error.
    CHECK(within > 0.58 * trials);
    CHECK(within < 0.78 * trials);
}

TEST_CASE("fits are scale equivariant")
{
    const auto e = sample([](double t) { return std::exp(-std::pow(t / 1.7, 3)); }, 0.1, 4.0, 25);
    const auto g = sample([](double t) { return std::exp(-0.5 * 9.0 * t * t); }, 0.0, 1.0, 25);
    for (double k : {0.25, 3.0, 100.0}) {
        CHECK(fit_cubic_exp(scaled(e, k)).params.at("T_coh") == doctest::Approx(1.7 * k).epsilon(1e-6));
        CHECK(fit_gaussian_decay(scaled(g, k)).params.at("b") == doctest::Approx(3.0 / k).epsilon(1e-6));
        CHECK(one_over_e_time(scaled(e, k)) == doctest::Approx(k * one_over_e_time(e)).epsilon(1e-12));
    }
}

TEST_CASE("1/e interpolation")
{
    const double t2 = analytic::t2_from_bath(nv1);
    const auto e = sample([](double t) { return analytic::echo_decay(nv1, t); }, 0.0, 6.0, 50);
    CHECK(one_over_e_time(e) == doctest::Approx(t2).epsilon(0.005));
    CHECK(one_over_e_time(e) == doctest::Approx(fit_cubic_exp(e).params.at("T_coh")).epsilon(0.02));

    const auto slow = sample([](double t) { return std::exp(-t / 100.0); }, 0.0, 10.0, 20);
    CHECK_THROWS_AS(one_over_e_time(slow), NumericalError);
    const auto flat = sample([](double) { return 1.0; }, 0.0, 10.0, 20);
    CHECK_THROWS_AS(one_over_e_time(flat), NumericalError);
}

TEST_CASE("insufficient data is rejected")
{
    const auto few = sample([](double t) { return std::exp(-std::pow(t, 3)); }, 0.5, 1.2, 3);
    CHECK_THROWS_AS(fit_cubic_exp(few), std::invalid_argument);
    // All points saturated outside (0.05, 0.95).
    const auto saturated = sample([](double t) { return std::exp(-std::pow(t, 3)); }, 2.0, 3.0, 10);
    CHECK_THROWS_AS(fit_cubic_exp(saturated), std::invalid_argument);
    CHECK_THROWS_AS(fit_gaussian_decay(saturated), std::invalid_argument);
}

TEST_CASE("scaling fits")
{
    const double t2 = analytic::t2_from_bath(nv1);
    std::vector<ScalingPoint> pts;
    for (int n : {1, 4, 16, 64}) pts.push_back({static_cast<double>(n), analytic::t_coh(nv1, n), 0.0});
    const auto fixed = fit_scaling(pts, false);
    CHECK(fixed.params.at("T2") == doctest::Approx(t2).epsilon(1e-9));
    CHECK(fixed.params.at("p") == 2.0 / 3.0);
    CHECK(fixed.std_errors.at("p") == 0.0);
    const auto free = fit_scaling(pts, true);
    CHECK(free.params.at("T2") == doctest::Approx(t2).epsilon(1e-9));
    CHECK(free.params.at("p") == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(free.params.at("T2") * std::pow(136.0, free.params.at("p")) / t2 == doctest::Approx(26.0).epsilon(0.02));

    // Noisy points with errors: p carries a standard error.
    std::vector<ScalingPoint> noisy{{1, 2.9, 0.05}, {2, 4.5, 0.08}, {4, 7.3, 0.1}, {8, 11.2, 0.2}, {16, 18.3, 0.3}};
    const auto r = fit_scaling(noisy, true);
    CHECK(r.std_errors.at("p") > 0.0);
    CHECK(r.params.at("p") == doctest::Approx(0.667).epsilon(0.05));

    std::vector<ScalingPoint> two{{1, 2.0, 0.0}, {4, 5.0, 0.0}};
    CHECK_THROWS_AS(fit_scaling(two, false), std::invalid_argument);
    std::vector<ScalingPoint> repeated{{1, 2.0, 0.0}, {1, 2.1, 0.0}, {4, 5.0, 0.0}};
    CHECK_THROWS_AS(fit_scaling(repeated, false), std::invalid_argument);
}

TEST_CASE("Monte Carlo echo curve: fitted T2 and residual consistency")
{
    const double t2 = analytic::t2_from_bath(nv1);
    DecayCurve c;
    dynamics::McOptions o;
    o.trajectories = 100000;
    for (int i = 0; i < 20; ++i) {
        const double t = t2 * (0.2 + 1.6 * i / 19.0);
        o.seed = 500 + static_cast<std::uint64_t>(i);
        const auto r = dynamics::coherence(nv1, sequences::spin_echo(t), o);
        c.points.push_back({t, r.mean, r.std_error});
    }
    const auto fit = fit_cubic_exp(c);
    CHECK(fit.converged);
    CHECK(fit.params.at("T_coh") == doctest::Approx(t2).epsilon(0.05));

    // Against the exact model the weighted residual is chi-square distributed.
    double chi2 = 0.0;
    for (const auto& p : c.points) {
        const double m = std::exp(-analytic::chi_gaussian(sequences::spin_echo(p.t), nv1));
        chi2 += std::pow((p.value - m) / p.std_error, 2);
    }
    CHECK(chi2 / 20.0 > 0.5);
    CHECK(chi2 / 20.0 < 2.0);
    // The pure cubic law is only the slow-bath asymptote; at this precision
    // its misfit is resolved, so the fit's own reduced chi-square exceeds 1.
    CHECK(fit.reduced_chi2 > 1.0);
}

} // TEST_SUITE
