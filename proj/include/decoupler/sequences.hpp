// sequences.hpp - π-pulse sequences and the toggling-frame sign

#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace decoupler::sequences {

inline constexpr double kAxisX = 0.0;
inline constexpr double kAxisY = std::numbers::pi / 2.0;

struct Pulse {
    double time = 0.0;                         // µs, inside (0, total_time)
    double axis = kAxisX;                      // equatorial azimuth, rad
    double nominal_angle = std::numbers::pi;   // rad

    bool operator==(const Pulse&) const = default;
};

struct PulseSequence {
    double total_time = 0.0;
    std::vector<Pulse> pulses;

    bool operator==(const PulseSequence&) const = default;
};

enum class Axis { X, Y };

// Generators. All throw std::invalid_argument for t <= 0 or n < 1.
PulseSequence ramsey(double t);
PulseSequence spin_echo(double t);
PulseSequence cpmg(int n, double t);
PulseSequence udd(int n, double t);
// CPMG timings with strictly alternating axes beginning at `first`.
PulseSequence xy(int n, double t, Axis first = Axis::X);

// (−1)^(number of pulses strictly before s). Throws std::out_of_range when s
// is outside [0, total_time].
int toggling_sign(const PulseSequence& seq, double s);

// Free-evolution interval boundaries {0, t_1, …, t_n, T}.
std::vector<double> interval_edges(const PulseSequence& seq);

enum class ViolationKind { NonPositiveDuration, OutOfBounds, Ordering, GapTooSmall, BadAngle };

struct Violation {
    ViolationKind kind;
    int pulse_index;      // −1 for sequence-level problems
    std::string message;
};

struct ValidationOptions {
    double min_gap = 0.0;  // minimum inter-pulse spacing (pulse width), µs
};

// Never throws; an empty result means the sequence is valid.
std::vector<Violation> validate(const PulseSequence& seq, const ValidationOptions& opts = {});

// Throws std::invalid_argument carrying the first violation, if any.
void require_valid(const PulseSequence& seq, const ValidationOptions& opts = {});

const char* to_string(ViolationKind kind);

} // namespace decoupler::sequences
