// dynamics.hpp - Monte Carlo propagation of the qubit through a pulse sequence

#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "decoupler/bath.hpp"
#include "decoupler/sequences.hpp"

namespace decoupler::dynamics {

struct BlochVector {
    double rx = 0.0;
    double ry = 0.0;
    double rz = 0.0;

    double norm() const;
    double dot(const BlochVector& o) const { return rx * o.rx + ry * o.ry + rz * o.rz; }
};

// 2×2 density matrix ρ = (I + r·σ)/2.
class DensityMatrix {
public:
    DensityMatrix();  // maximally mixed
    explicit DensityMatrix(const Eigen::Matrix2cd& m);

    static DensityMatrix from_bloch(const BlochVector& r);
    static DensityMatrix pure(const Eigen::Vector2cd& psi);

    const Eigen::Matrix2cd& matrix() const { return m_; }
    BlochVector bloch() const;

    // Throws std::invalid_argument if trace, Hermiticity or positivity fail.
    void check() const;

private:
    Eigen::Matrix2cd m_;
};

// Systematic pulse imperfections: actual angle = nominal·(1 + eps) and the
// rotation axis azimuth is offset by tilt. Pulses whose azimuth is closer to
// the X direction use the _x pair, the rest use the _y pair.
struct PulseErrorModel {
    double eps_x = 0.0;
    double eps_y = 0.0;
    double tilt_x = 0.0;
    double tilt_y = 0.0;

    bool ideal() const { return eps_x == 0.0 && eps_y == 0.0 && tilt_x == 0.0 && tilt_y == 0.0; }
    void check() const;
};

struct EnsembleResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_trajectories = 0;
};

struct McOptions {
    std::size_t trajectories = 10000;
    std::uint64_t seed = 0;
    bool exact_integrals = true;  // false: fine-grid trapezoid path
    double fine_dt = 0.0;         // trapezoid step, µs; 0 selects τ_C/1000
    unsigned threads = 1;
};

enum class InputState { Zero, One, X, Y };

BlochVector bloch_of(InputState s);
Eigen::Vector2cd ket_of(InputState s);
std::string_view label_of(InputState s);
InputState input_state_from_label(std::string_view label);  // "0", "1", "x", "y"

// Grid on which trajectories are sampled for `seq`: the interval edges for
// exact sampling, or edges refined to steps <= fine_dt otherwise.
std::vector<double> trajectory_grid(const sequences::PulseSequence& seq, bool exact, double fine_dt);

// φ = Σ sign·∫B dt. Uses exact per-interval integrals when present, trapezoid otherwise.
// Throws std::invalid_argument if the grid misses a pulse or does not span [0, T].
double accumulate_phase(const bath::BathTrajectory& traj, const sequences::PulseSequence& seq);

// Unitary evolution of the Bloch vector: z-rotations by the accumulated phase
// between pulses, imperfect instantaneous rotations at each pulse.
BlochVector propagate(const bath::BathTrajectory& traj, const sequences::PulseSequence& seq,
                      const PulseErrorModel& err, const BlochVector& initial);

// Final state with ideal pulses and no field: the target of fidelity measurements.
BlochVector ideal_final_state(const sequences::PulseSequence& seq, const BlochVector& initial);

// ⟨cos φ⟩ over independent trajectories with ideal pulses.
EnsembleResult coherence(const bath::BathParams& p, const sequences::PulseSequence& seq, const McOptions& opts);

struct StateEstimate {
    DensityMatrix rho;
    BlochVector mean;
    std::array<EnsembleResult, 3> components;  // rx, ry, rz
};

StateEstimate ensemble_state(const bath::BathParams& p, const sequences::PulseSequence& seq,
                             const PulseErrorModel& err, const BlochVector& initial, const McOptions& opts);

// Mean state fidelity against ideal_final_state(seq, initial), with the
// standard error taken over per-trajectory fidelities.
EnsembleResult fidelity(const bath::BathParams& p, const sequences::PulseSequence& seq, const PulseErrorModel& err,
                        const BlochVector& initial, const McOptions& opts);

// ⟨ψ|ρ|ψ⟩; throws std::invalid_argument if ψ is not normalized.
double state_fidelity(const DensityMatrix& rho, const Eigen::Vector2cd& ideal);

// Pure state with Bloch vector r (|r| must be 1 within 1e−9).
Eigen::Vector2cd ket_from_bloch(const BlochVector& r);

// exp(−b²t²/2) · (1/3) Σ_{m=−1,0,1} cos((δ + m a) t)
double ramsey_signal(const bath::BathParams& p, double detuning, double hyperfine_splitting, double t);

} // namespace decoupler::dynamics
