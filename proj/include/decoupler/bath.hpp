// bath.hpp - Ornstein–Uhlenbeck model of the dephasing field B(t)
//
// Units throughout the toolkit: time in µs, B and ω in µs⁻¹ (angular).

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace decoupler::bath {

struct BathParams {
    double b = 0.0;      // coupling strength (std. dev. of B), µs⁻¹
    double tau_c = 0.0;  // correlation time, µs

    // Throws std::invalid_argument unless b > 0 and tau_c > 0.
    void check() const;
};

struct BathTrajectory {
    std::vector<double> times;
    std::vector<double> values;
    // Exact ∫B dt over [times[i], times[i+1]] when sampled jointly.
    std::optional<std::vector<double>> integrals;
};

// C(t) = b² exp(−|t|/τ_C)
double correlation(const BathParams& p, double t);

// Two-sided Lorentzian S(ω) = 2 b² τ_C / (1 + ω² τ_C²), the Fourier transform of C.
double spectrum(const BathParams& p, double omega);

// Exact OU update over dt given a standard normal draw xi.
double ou_step(double current, double dt, const BathParams& p, double xi);

// Moments of (B(t+h), ∫_t^{t+h} B ds) conditional on B(t). All variances are
// evaluated without catastrophic cancellation for h ≪ τ_C.
struct IntervalMoments {
    double decay;           // e^{-h/τ}
    double endpoint_sd;     // sd of B(t+h) | B(t)
    double bridge_gain;     // τ tanh(h/2τ): E[∫B | B0, B1] = gain·(B0 + B1)
    double bridge_sd;       // sd of ∫B | B0, B1
};
IntervalMoments interval_moments(const BathParams& p, double h);

// Stationary variance of ∫_0^t B ds: 2b²τ_C[t − τ_C(1 − e^{−t/τ_C})].
double integral_variance(const BathParams& p, double t);

// Samples B on `grid` starting from the stationary distribution. With
// `with_integrals`, each interval's ∫B dt is drawn jointly with the endpoint.
// Throws std::invalid_argument on an empty or non-increasing grid.
BathTrajectory sample_trajectory(const BathParams& p, std::span<const double> grid,
                                 std::uint64_t seed, bool with_integrals);

} // namespace decoupler::bath
