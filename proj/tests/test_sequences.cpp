#include <doctest.h>

#include <cmath>
#include <numbers>

#include "decoupler/sequences.hpp"

using namespace decoupler::sequences;

namespace {

std::vector<double> times_of(const PulseSequence& s)
{
    std::vector<double> out;
    for (const auto& p : s.pulses) out.push_back(p.time);
    return out;
}

// ∫_0^T sign(s) ds from the interval edges.
double sign_integral(const PulseSequence& s)
{
    const auto e = interval_edges(s);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < e.size(); ++i) acc += (i % 2 ? -1.0 : 1.0) * (e[i + 1] - e[i]);
    return acc;
}

} // namespace

TEST_SUITE("sequences") {

TEST_CASE("ramsey has no pulses")
{
    const auto s = ramsey(1.0);
    CHECK(s.pulses.empty());
    CHECK(s.total_time == 1.0);
    for (double t : {0.0, 0.3, 1.0}) CHECK(toggling_sign(s, t) == 1);
    CHECK_THROWS_AS(ramsey(0.0), std::invalid_argument);
    CHECK_THROWS_AS(ramsey(-1.0), std::invalid_argument);
}

TEST_CASE("spin echo is one X pulse at the midpoint")
{
    const auto s = spin_echo(2.0);
    REQUIRE(s.pulses.size() == 1);
    CHECK(s.pulses[0].time == 1.0);
    CHECK(s.pulses[0].axis == kAxisX);
    CHECK(s == cpmg(1, 2.0));
    CHECK(s == udd(1, 2.0));
    CHECK(toggling_sign(s, 0.5) == 1);
    CHECK(toggling_sign(s, 1.5) == -1);
}

TEST_CASE("cpmg timings")
{
    CHECK(times_of(cpmg(2, 1.0)) == std::vector<double>{0.25, 0.75});
    const auto s = cpmg(8, 4.0);
    REQUIRE(s.pulses.size() == 8);
    CHECK(s.pulses[0].time == doctest::Approx(0.25));
    for (std::size_t k = 1; k < 8; ++k) CHECK(s.pulses[k].time - s.pulses[k - 1].time == doctest::Approx(0.5));
    const auto e = interval_edges(s);
    CHECK(e.front() == 0.0);
    CHECK(e.back() == 4.0);
    CHECK(e[1] - e[0] == doctest::Approx(0.5 * (e[2] - e[1])));
    CHECK(e[9] - e[8] == doctest::Approx(0.5 * (e[2] - e[1])));
    CHECK_THROWS_AS(cpmg(0, 1.0), std::invalid_argument);
}

TEST_CASE("udd timings")
{
    CHECK(times_of(udd(2, 1.0)) == times_of(cpmg(2, 1.0)));
    CHECK(udd(2, 3.0) == cpmg(2, 3.0));
    const auto s = udd(3, 1.0);
    REQUIRE(s.pulses.size() == 3);
    CHECK(s.pulses[0].time == doctest::Approx(0.14645).epsilon(1e-4));
    CHECK(s.pulses[1].time == doctest::Approx(0.5));
    CHECK(s.pulses[2].time == doctest::Approx(0.85355).epsilon(1e-4));
    for (int n : {3, 4, 7, 20}) {
        CHECK(udd(n, 1.0) != cpmg(n, 1.0));
        const auto u = udd(n, 5.0);
        for (int j = 1; j <= n; ++j) {
            const double ref = 5.0 * std::pow(std::sin(std::numbers::pi * j / (2.0 * n + 2.0)), 2);
            CHECK(u.pulses[static_cast<std::size_t>(j - 1)].time == doctest::Approx(ref).epsilon(1e-13));
        }
    }
    CHECK_THROWS_AS(udd(0, 1.0), std::invalid_argument);
}

TEST_CASE("xy alternates axes on cpmg timings")
{
    for (int n : {1, 3, 8, 13})
        for (double t : {0.7, 10.0}) CHECK(times_of(xy(n, t)) == times_of(cpmg(n, t)));
    const auto s4 = xy(4, 1.0);
    CHECK(s4.pulses[0].axis == kAxisX);
    CHECK(s4.pulses[1].axis == kAxisY);
    CHECK(s4.pulses[2].axis == kAxisX);
    CHECK(s4.pulses[3].axis == kAxisY);
    const auto s12 = xy(12, 1.0);
    int nx = 0, ny = 0;
    for (const auto& p : s12.pulses) (p.axis == kAxisX ? nx : ny)++;
    CHECK(nx == 6);
    CHECK(ny == 6);
    CHECK(xy(4, 1.0, Axis::Y).pulses[0].axis == kAxisY);
}

TEST_CASE("generator invariants up to 256 pulses")
{
    for (int n = 1; n <= 256; ++n) {
        const double t = 3.0;
        for (const auto& s : {cpmg(n, t), udd(n, t), xy(n, t)}) {
            CHECK(validate(s).empty());
            CHECK(toggling_sign(s, t) == (n % 2 ? -1 : 1));
        }
        for (const auto& s : {cpmg(n, t), udd(n, t)})
            for (int j = 0; j < n; ++j)
                CHECK(s.pulses[static_cast<std::size_t>(j)].time + s.pulses[static_cast<std::size_t>(n - 1 - j)].time
                      == doctest::Approx(t).epsilon(1e-13));
        CHECK(std::abs(sign_integral(cpmg(n, t))) < 1e-12);
    }
}

TEST_CASE("toggling sign range checks")
{
    const auto s = cpmg(2, 1.0);
    CHECK(toggling_sign(s, 0.0) == 1);
    CHECK(toggling_sign(s, 0.5) == -1);
    CHECK(toggling_sign(s, 1.0) == 1);
    CHECK_THROWS_AS(toggling_sign(s, -0.1), std::out_of_range);
    CHECK_THROWS_AS(toggling_sign(s, 1.1), std::out_of_range);
}

TEST_CASE("validate reports structured violations")
{
    CHECK(validate(cpmg(8, 4.0)).empty());

    auto swapped = cpmg(4, 1.0);
    std::swap(swapped.pulses[1], swapped.pulses[2]);
    auto v = validate(swapped);
    REQUIRE_FALSE(v.empty());
    CHECK(v[0].kind == ViolationKind::Ordering);
    CHECK_THROWS_AS(require_valid(swapped), std::invalid_argument);

    auto outside = cpmg(2, 1.0);
    outside.pulses[1].time = 1.5;
    v = validate(outside);
    REQUIRE_FALSE(v.empty());
    CHECK(v[0].kind == ViolationKind::OutOfBounds);

    auto bad_angle = cpmg(2, 1.0);
    bad_angle.pulses[0].nominal_angle = 0.0;
    v = validate(bad_angle);
    REQUIRE_FALSE(v.empty());
    CHECK(v[0].kind == ViolationKind::BadAngle);

    PulseSequence empty_time;
    v = validate(empty_time);
    REQUIRE_FALSE(v.empty());
    CHECK(v[0].kind == ViolationKind::NonPositiveDuration);

    // 136 pulses over 2 µs puts them 14.7 ns apart; a 20 ns pulse width cannot fit.
    const auto dense = cpmg(136, 2.0);
    v = validate(dense, ValidationOptions{0.020});
    REQUIRE_FALSE(v.empty());
    CHECK(v[0].kind == ViolationKind::GapTooSmall);
    CHECK(validate(dense, ValidationOptions{0.010}).empty());
    CHECK(std::string(to_string(ViolationKind::GapTooSmall)).size() > 0);
}

} // TEST_SUITE
