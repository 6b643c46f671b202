// tomography.hpp - single-qubit state and process tomography
//
// Process matrices use the Pauli operator basis {I, σx, σy, σz}:
//   E(ρ) = Σ_mn χ_mn σ_m ρ σ_n,
// so the identity channel has χ_II = 1 and the process fidelity against a
// unitary target is Tr(χ_ideal χ_meas).

#pragma once

#include <array>
#include <span>

#include <Eigen/Dense>

#include "decoupler/dynamics.hpp"

namespace decoupler::tomography {

using dynamics::BlochVector;
using dynamics::DensityMatrix;
using dynamics::InputState;

struct ProcessMatrix {
    Eigen::Matrix4cd chi = Eigen::Matrix4cd::Zero();

    // max |Σ χ_mn σ_n σ_m − I|
    double trace_preservation_residual() const;
    double min_eigenvalue() const;
    bool physical(double tol = 1e-9) const { return min_eigenvalue() >= -tol; }
    double hermiticity_residual() const;
};

struct ReconstructedState {
    DensityMatrix rho;
    BlochVector bloch;      // after clamping
    double raw_norm = 0.0;  // |r| before clamping
    bool clamped = false;
};

// ρ = (I + r·σ)/2, radially rescaling r onto the sphere when |r| > 1.
ReconstructedState state_from_bloch(double rx, double ry, double rz);

struct TomographyRecord {
    InputState input = InputState::Zero;
    BlochVector output;
    std::array<double, 3> std_error{};

    // Throws std::invalid_argument if |r| exceeds 1 + 3·(combined s.e.).
    void check() const;
};

// Linear-inversion χ from the outputs for inputs |0⟩, |1⟩, |x⟩, |y⟩ (order
// of `records` is free; each label must appear exactly once).
ProcessMatrix process_tomography(std::span<const TomographyRecord> records);

// Same map from outputs given in the fixed order {0, 1, x, y}.
ProcessMatrix chi_from_outputs(const std::array<BlochVector, 4>& outputs);

struct FidelityResult {
    double value = 0.0;  // clipped to [0, 1]
    double raw = 0.0;
    bool clipped = false;
};

// Tr(χ_ideal χ_meas). Throws std::invalid_argument unless chi_ideal is a
// rank-one process of a unitary.
FidelityResult process_fidelity(const ProcessMatrix& chi_meas, const ProcessMatrix& chi_ideal);

// diag((1+w)/2, 0, 0, (1−w)/2); throws for |w| > 1.
ProcessMatrix dephasing_channel(double w);
ProcessMatrix identity_process();
ProcessMatrix unitary_process(const Eigen::Matrix2cd& u);
// χ of the channel ρ → Σ K ρ K†.
ProcessMatrix kraus_process(std::span<const Eigen::Matrix2cd> kraus);

// Σ χ_mn σ_m ρ σ_n
Eigen::Matrix2cd apply_process(const ProcessMatrix& p, const Eigen::Matrix2cd& rho);

const std::array<Eigen::Matrix2cd, 4>& pauli_basis();

struct ProcessEstimate {
    ProcessMatrix chi;
    Eigen::Matrix4d std_error_re = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d std_error_im = Eigen::Matrix4d::Zero();
    std::size_t n_trajectories = 0;
};

// Simulated process tomography: the four canonical inputs are propagated
// through the same bath trajectories and χ is reconstructed per trajectory,
// so the element standard errors include the correlations between inputs.
ProcessEstimate qpt_experiment(const bath::BathParams& p, const sequences::PulseSequence& seq,
                               const dynamics::PulseErrorModel& err, const dynamics::McOptions& opts);

inline constexpr std::array<InputState, 4> kCanonicalInputs{InputState::Zero, InputState::One, InputState::X,
                                                            InputState::Y};

} // namespace decoupler::tomography
