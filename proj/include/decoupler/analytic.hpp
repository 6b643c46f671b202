// analytic.hpp - Gaussian-noise decoherence: closed forms, exact χ, filter functions
//
// For a Gaussian field the coherence is exactly W = exp(−χ) with
//   χ = ½ ∫₀ᵀ∫₀ᵀ s(u) s(v) C(u − v) du dv,
// s the toggling-frame sign. chi_gaussian evaluates this piecewise in closed
// form; filter_exponent evaluates the same quantity in the frequency domain,
//   χ = (1/2π) ∫₀^∞ S(ω) |f(ω)|² dω,   f(ω) = ∫₀ᵀ s(u) e^{iωu} du,
// and serves as an independent cross-check.

#pragma once

#include <functional>

#include "decoupler/bath.hpp"
#include "decoupler/sequences.hpp"

namespace decoupler::analytic {

using bath::BathParams;
using sequences::PulseSequence;

// exp(−b²t²/2)
double fid_envelope(const BathParams& p, double t);

// T₂ = (12 τ_C / b²)^{1/3}, from τ_C = T₂³ b² / 12. Meaningful for b τ_C ≫ 1;
// see slow_bath().
double t2_from_bath(const BathParams& p);
bool slow_bath(const BathParams& p);  // b τ_C ≥ 10

// exp(−(t/T₂)³)
double echo_decay(const BathParams& p, double t);

// exp(−A n t³ / (2 n τ_C)³), A = (2/3) b² τ_C²; equals exp(−(t / (T₂ n^{2/3}))³).
double scaling_decay(const BathParams& p, int n, double t);
double scaling_prefactor(const BathParams& p);  // A

// T₂ n^{2/3}
double t_coh(const BathParams& p, int n);

// Exact decoherence exponent, O(n) in the number of pulses.
double chi_gaussian(const PulseSequence& seq, const BathParams& p);

struct QuadratureOptions {
    double rel_tol = 1e-8;
    double omega_max = 0.0;  // 0 selects max(100/τ_C, 100·max(n,1)/T)
};

struct FilterResult {
    double chi = 0.0;
    double abs_error = 0.0;  // quadrature error estimate
    double omega_max = 0.0;
    bool converged = false;
};

// |f(ω)|² for the sequence's sign function.
double filter_function(const PulseSequence& seq, double omega);

FilterResult filter_exponent(const PulseSequence& seq, const BathParams& p, const QuadratureOptions& opts = {});

enum class DecayKind { GaussianFid, CubicEcho, Scaling };

struct DecayLaw {
    DecayKind kind = DecayKind::CubicEcho;
    BathParams bath;
    int n = 1;  // pulse count, scaling law only

    double value(double t) const;
    double one_over_e_time() const;
};

// Time at which exp(−χ(make(t))) falls to `level`, for a family of sequences
// parameterized by total duration. Throws NumericalError if no crossing is
// bracketed below t_limit.
double decay_time(const std::function<PulseSequence(double)>& make, const BathParams& p,
                  double level = 0.36787944117144233, double t_limit = 1e6);

} // namespace decoupler::analytic
