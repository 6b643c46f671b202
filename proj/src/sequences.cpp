#include "decoupler/sequences.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace decoupler::sequences {

namespace {

void check_args(int n, double t, const char* who)
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw std::invalid_argument(fmt::format("{}: duration must be positive, got {}", who, t));
    if (n < 1) throw std::invalid_argument(fmt::format("{}: pulse count must be >= 1, got {}", who, n));
}

} // namespace

PulseSequence ramsey(double t)
{
    check_args(1, t, "ramsey");
    return PulseSequence{t, {}};
}

PulseSequence spin_echo(double t)
{
    check_args(1, t, "spin_echo");
    return cpmg(1, t);
}

PulseSequence cpmg(int n, double t)
{
    check_args(n, t, "cpmg");
    PulseSequence seq{t, {}};
    seq.pulses.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k)
        seq.pulses.push_back(Pulse{(2.0 * k - 1.0) * t / (2.0 * n), kAxisX});
    return seq;
}

PulseSequence udd(int n, double t)
{
    check_args(n, t, "udd");
    if (n <= 2) return cpmg(n, t);  // sin²(π/4) = 1/2, sin²(π/6) = 1/4: same timings, bit-exact

    PulseSequence seq{t, {}};
    seq.pulses.resize(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) {
        auto& pulse = seq.pulses[static_cast<std::size_t>(j - 1)];
        if (2 * j == n + 1) {
            pulse.time = 0.5 * t;
        } else if (2 * j > n + 1) {
            pulse.time = t - seq.pulses[static_cast<std::size_t>(n - j)].time;  // mirror of pulse n+1−j
        } else {
            const double s = std::sin(std::numbers::pi * j / (2.0 * n + 2.0));
            pulse.time = t * s * s;
        }
    }
    return seq;
}

PulseSequence xy(int n, double t, Axis first)
{
    check_args(n, t, "xy");
    PulseSequence seq = cpmg(n, t);
    const double a = first == Axis::X ? kAxisX : kAxisY;
    const double b = first == Axis::X ? kAxisY : kAxisX;
    for (std::size_t k = 0; k < seq.pulses.size(); ++k) seq.pulses[k].axis = (k % 2 == 0) ? a : b;
    return seq;
}

int toggling_sign(const PulseSequence& seq, double s)
{
    if (!(s >= 0.0 && s <= seq.total_time))
        throw std::out_of_range(fmt::format("toggling_sign: s={} outside [0, {}]", s, seq.total_time));
    int crossings = 0;
    for (const auto& p : seq.pulses)
        if (p.time < s) ++crossings;
    return crossings % 2 == 0 ? 1 : -1;
}

std::vector<double> interval_edges(const PulseSequence& seq)
{
    std::vector<double> edges;
    edges.reserve(seq.pulses.size() + 2);
    edges.push_back(0.0);
    for (const auto& p : seq.pulses) edges.push_back(p.time);
    edges.push_back(seq.total_time);
    return edges;
}

const char* to_string(ViolationKind kind)
{
    switch (kind) {
    case ViolationKind::NonPositiveDuration: return "non_positive_duration";
    case ViolationKind::OutOfBounds: return "out_of_bounds";
    case ViolationKind::Ordering: return "ordering";
    case ViolationKind::GapTooSmall: return "gap_too_small";
    case ViolationKind::BadAngle: return "bad_angle";
    }
    return "unknown";
}

std::vector<Violation> validate(const PulseSequence& seq, const ValidationOptions& opts)
{
    std::vector<Violation> out;
    if (!(seq.total_time > 0.0) || !std::isfinite(seq.total_time)) {
        out.push_back({ViolationKind::NonPositiveDuration, -1,
                       fmt::format("total_time must be positive, got {}", seq.total_time)});
    }
    for (std::size_t k = 0; k < seq.pulses.size(); ++k) {
        const auto& p = seq.pulses[k];
        const int idx = static_cast<int>(k);
        if (!(p.time > 0.0 && p.time < seq.total_time)) {
            out.push_back({ViolationKind::OutOfBounds, idx,
                           fmt::format("pulse {} at t={} outside (0, {})", k, p.time, seq.total_time)});
        }
        if (!(p.nominal_angle > 0.0) || !std::isfinite(p.nominal_angle) || !std::isfinite(p.axis)) {
            out.push_back({ViolationKind::BadAngle, idx,
                           fmt::format("pulse {} has invalid angle {} or axis {}", k, p.nominal_angle, p.axis)});
        }
        if (k == 0) continue;
        const double gap = p.time - seq.pulses[k - 1].time;
        if (!(gap > 0.0)) {
            out.push_back({ViolationKind::Ordering, idx,
                           fmt::format("pulse {} at t={} not after pulse {} at t={}", k, p.time, k - 1,
                                       seq.pulses[k - 1].time)});
        } else if (gap < opts.min_gap) {
            out.push_back({ViolationKind::GapTooSmall, idx,
                           fmt::format("gap {} between pulses {} and {} below minimum {}", gap, k - 1, k,
                                       opts.min_gap)});
        }
    }
    return out;
}

void require_valid(const PulseSequence& seq, const ValidationOptions& opts)
{
    const auto v = validate(seq, opts);
    if (!v.empty())
        throw std::invalid_argument(fmt::format("invalid pulse sequence ({}): {}", to_string(v.front().kind),
                                                v.front().message));
}

} // namespace decoupler::sequences
