// fitting.hpp - decay-curve fits: Gaussian FID, cubic-exponential, 1/e times, N-scaling

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace decoupler::fitting {

struct DecayPoint {
    double t = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};

struct DecayCurve {
    std::vector<DecayPoint> points;

    // Throws std::invalid_argument unless t is strictly increasing and std_error ≥ 0.
    void check() const;
};

struct FitResult {
    std::map<std::string, double> params;
    std::map<std::string, double> std_errors;
    double residual = 0.0;       // weighted sum of squares
    double reduced_chi2 = 0.0;   // residual / dof
    std::size_t dof = 0;
    int iterations = 0;
    bool converged = false;
};

// Amplitude A and baseline c of value = A·shape(t) + c. Frozen by default.
struct FitOptions {
    bool free_amplitude = false;
    double amplitude = 1.0;
    double baseline = 0.0;
    int max_iterations = 100;
    double step_tol = 1e-10;
};

// value = A exp(−b² t² / 2) + c; params "b" (and "A", "c" when free).
FitResult fit_gaussian_decay(const DecayCurve& curve, const FitOptions& opts = {});

// value = A exp(−(t/T_coh)³) + c; params "T_coh" (and "A", "c" when free).
FitResult fit_cubic_exp(const DecayCurve& curve, const FitOptions& opts = {});

// First crossing of 1/e by (value − c)/A, linearly interpolated. Throws
// NumericalError when the curve does not cross.
double one_over_e_time(const DecayCurve& curve, double amplitude = 1.0, double baseline = 0.0);

struct ScalingPoint {
    double n = 1.0;
    double t_coh = 0.0;
    double std_error = 0.0;
};

// T_coh = T₂ n^p in log space; p = 2/3 unless free_exponent. Params "T2", "p".
FitResult fit_scaling(std::span<const ScalingPoint> points, bool free_exponent);

} // namespace decoupler::fitting
