#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "decoupler/bath.hpp"

using namespace decoupler::bath;

namespace {

const BathParams nv1{3.6, 25.0};
const BathParams nv2{2.6, 23.0};

// ∫∫ C(u−v) du dv over [0,t]², by composite Simpson on the triangle-folded
// form 2∫_0^t (t−s) C(s) ds.
double integral_variance_oracle(const BathParams& p, double t)
{
    const int n = 2000;
    const double h = t / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double s = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * (t - s) * correlation(p, s);
    }
    return 2.0 * acc * h / 3.0;
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments moments(const std::vector<double>& xs)
{
    Moments m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(xs.size() - 1);
    return m;
}

// Standard error of a Gaussian sample variance.
double var_se(double var, std::size_t n) { return var * std::sqrt(2.0 / static_cast<double>(n - 1)); }

} // namespace

TEST_SUITE("bath") {

TEST_CASE("correlation values and symmetry")
{
    CHECK(correlation(nv1, 0.0) == doctest::Approx(12.96).epsilon(1e-12));
    CHECK(correlation(nv2, 23.0) == doctest::Approx(6.76 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(correlation(nv2, 23.0) == doctest::Approx(2.487).epsilon(1e-3));
    for (double t : {0.1, 3.0, 40.0}) CHECK(correlation(nv1, t) == correlation(nv1, -t));
    CHECK(correlation(nv1, 1e4) < 1e-100);
}

TEST_CASE("spectrum is the Lorentzian transform of the correlation")
{
    CHECK(spectrum(nv1, 0.0) == doctest::Approx(648.0).epsilon(1e-12));
    CHECK(spectrum(nv1, 1.0 / nv1.tau_c) == doctest::Approx(324.0).epsilon(1e-12));

    double prev = spectrum(nv1, 0.0);
    for (double w = 0.01; w < 100.0; w *= 1.3) {
        const double s = spectrum(nv1, w);
        CHECK(s >= 0.0);
        CHECK(s < prev);
        CHECK(spectrum(nv1, -w) == s);
        prev = s;
    }

    // Parseval: (1/2π)∫S dω = C(0). Substitute ω = tan θ / τ to make the range finite.
    const int n = 20000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double th = -std::numbers::pi / 2 + (i + 0.5) * std::numbers::pi / n;
        const double w = std::tan(th) / nv1.tau_c;
        const double dw = 1.0 / (nv1.tau_c * std::cos(th) * std::cos(th));
        acc += spectrum(nv1, w) * dw * std::numbers::pi / n;
    }
    CHECK(acc / (2.0 * std::numbers::pi) == doctest::Approx(12.96).epsilon(1e-9));

    // Numeric Fourier transform of the correlation at a few frequencies.
    for (double w : {0.0, 0.02, 0.1}) {
        const int m = 200000;
        const double tmax = 40.0 * nv1.tau_c;
        const double h = tmax / m;
        double ft = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double t = i * h;
            const double wt = (i == 0 || i == m) ? 0.5 : 1.0;
            ft += wt * correlation(nv1, t) * std::cos(w * t);
        }
        CHECK(2.0 * ft * h == doctest::Approx(spectrum(nv1, w)).epsilon(1e-4));
    }
}

TEST_CASE("ou_step limits")
{
    CHECK(ou_step(0.0, 1e6, nv1, 0.7) == doctest::Approx(3.6 * 0.7).epsilon(1e-12));
    CHECK(ou_step(1.3, 1e-12, nv1, 2.0) == doctest::Approx(1.3).epsilon(1e-6));
    CHECK_THROWS_AS(ou_step(0.0, 0.0, nv1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ou_step(0.0, -1.0, nv1, 0.0), std::invalid_argument);
}

TEST_CASE("ou_step relaxes to the stationary variance")
{
    std::mt19937_64 eng(11);
    std::normal_distribution<double> gauss;
    const std::size_t n = 20000;
    std::vector<double> xs(n);
    for (auto& x : xs) {
        double b = 0.0;
        for (int k = 0; k < 40; ++k) b = ou_step(b, 5.0, nv1, gauss(eng));
        x = b;
    }
    const auto m = moments(xs);
    CHECK(std::abs(m.var - 12.96) < 3.0 * var_se(12.96, n));
}

TEST_CASE("stationary samples pass a Kolmogorov-Smirnov normality test")
{
    std::mt19937_64 eng(5);
    std::normal_distribution<double> gauss;
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    double b = nv1.b * gauss(eng);
    // Decorrelated draws: step several correlation times between samples.
    for (auto& x : xs) {
        b = ou_step(b, 10.0 * nv1.tau_c, nv1, gauss(eng));
        x = b / nv1.b;
    }
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = 0.5 * std::erfc(-xs[i] / std::numbers::sqrt2);
        d = std::max({d, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
    }
    CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));  // α = 0.01
}

TEST_CASE("sample_trajectory is deterministic and validates its grid")
{
    const std::vector<double> grid{0.0, 0.5, 1.0, 4.0};
    const auto a = sample_trajectory(nv1, grid, 42, true);
    const auto b = sample_trajectory(nv1, grid, 42, true);
    const auto c = sample_trajectory(nv1, grid, 43, true);
    CHECK(a.values == b.values);
    CHECK(*a.integrals == *b.integrals);
    CHECK(a.values != c.values);
    CHECK(a.integrals->size() == grid.size() - 1);
    CHECK_FALSE(sample_trajectory(nv1, grid, 42, false).integrals);

    CHECK_THROWS_AS(sample_trajectory(nv1, std::vector<double>{}, 1, false), std::invalid_argument);
    CHECK_THROWS_AS(sample_trajectory(nv1, std::vector<double>{0.0, 1.0, 1.0}, 1, false), std::invalid_argument);
    CHECK_THROWS_AS(sample_trajectory(BathParams{0.0, 1.0}, grid, 1, false), std::invalid_argument);
}

TEST_CASE("trajectory values are stationary")
{
    const std::vector<double> grid{0.0, 7.0, 30.0};
    const std::size_t n = 10000;
    std::vector<double> first(n), last(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto tr = sample_trajectory(nv2, grid, 1000 + i, false);
        first[i] = tr.values.front();
        last[i] = tr.values.back();
    }
    CHECK(std::abs(moments(first).var - 6.76) < 3.0 * var_se(6.76, n));
    CHECK(std::abs(moments(last).var - 6.76) < 3.0 * var_se(6.76, n));
}

TEST_CASE("autocorrelation of a long trajectory matches the correlation function")
{
    const double dt = nv1.tau_c / 2.0;
    const std::size_t n = 400000;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i) * dt;
    const auto tr = sample_trajectory(nv1, grid, 99, false);

    const std::size_t batches = 100;
    const std::size_t per = (n - 4) / batches;
    for (std::size_t lag : {0u, 1u, 2u, 4u}) {
        // Batch means absorb the serial correlation of the products.
        std::vector<double> bm(batches, 0.0);
        for (std::size_t k = 0; k < batches; ++k) {
            for (std::size_t i = k * per; i < (k + 1) * per; ++i) bm[k] += tr.values[i] * tr.values[i + lag];
            bm[k] /= static_cast<double>(per);
        }
        const auto m = moments(bm);
        const double se = std::sqrt(m.var / batches);
        CHECK(std::abs(m.mean - correlation(nv1, static_cast<double>(lag) * dt)) < 3.0 * se);
    }
}

TEST_CASE("interval moments stay accurate for tiny steps")
{
    // Against long-double evaluation of the unstable textbook forms.
    for (double h : {1e-6, 1e-3, 0.1, 10.0, 200.0}) {
        const auto m = interval_moments(nv1, h);
        const long double x = h / nv1.tau_c;
        const long double var_end = 1.0L - std::exp(-2.0L * x);
        CHECK(m.decay == doctest::Approx(std::exp(-h / nv1.tau_c)).epsilon(1e-14));
        CHECK(m.endpoint_sd == doctest::Approx(static_cast<double>(nv1.b * std::sqrt(var_end))).epsilon(1e-9));
        CHECK(m.bridge_gain == doctest::Approx(nv1.tau_c * std::tanh(h / (2.0 * nv1.tau_c))).epsilon(1e-12));
        CHECK(m.bridge_sd >= 0.0);
    }
    CHECK(integral_variance(nv1, 1e-5) == doctest::Approx(12.96 * 1e-10).epsilon(1e-6));
    for (double t : {0.01, 1.0, 25.0, 100.0})
        CHECK(integral_variance(nv1, t) == doctest::Approx(integral_variance_oracle(nv1, t)).epsilon(1e-9));
}

TEST_CASE("exact integral sampling reproduces the phase variance")
{
    const std::size_t n = 40000;
    for (double t : {0.5, 2.85, 30.0}) {
        const std::vector<double> grid{0.0, t / 3.0, t};
        std::vector<double> phase(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto tr = sample_trajectory(nv1, grid, 7 * i + 1, true);
            phase[i] = (*tr.integrals)[0] + (*tr.integrals)[1];
        }
        const double expected = integral_variance_oracle(nv1, t);
        const auto m = moments(phase);
        CHECK(std::abs(m.var - expected) < 3.0 * var_se(expected, n));
        CHECK(std::abs(m.mean) < 3.0 * std::sqrt(expected / n));
    }
}

TEST_CASE("exact joint sampling agrees with the fine-grid trapezoid path")
{
    // Relative s.e. of each variance is sqrt(2/N); N = 2e6 keeps 3 s.e. of the
    // difference below the 0.5% tolerance.
    const std::size_t n = 2000000;
    const double t = nv1.tau_c / 10.0;
    const double dt = nv1.tau_c / 1000.0;
    std::vector<double> fine;
    for (int i = 0; i <= 100; ++i) fine.push_back(i * dt);
    const std::vector<double> coarse{0.0, t};

    double sum_exact = 0.0, sq_exact = 0.0, sum_fine = 0.0, sq_fine = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = (*sample_trajectory(nv1, coarse, 2 * i, true).integrals)[0];
        const auto tr = sample_trajectory(nv1, fine, 2 * i + 1, false);
        double f = 0.0;
        for (std::size_t k = 0; k + 1 < fine.size(); ++k) f += 0.5 * dt * (tr.values[k] + tr.values[k + 1]);
        sum_exact += e;
        sq_exact += e * e;
        sum_fine += f;
        sq_fine += f * f;
    }
    const double dn = static_cast<double>(n);
    const double var_exact = (sq_exact - sum_exact * sum_exact / dn) / (dn - 1.0);
    const double var_fine = (sq_fine - sum_fine * sum_fine / dn) / (dn - 1.0);
    CHECK(std::abs(var_exact / var_fine - 1.0) < 0.005);
}

} // TEST_SUITE
