// config.hpp - JSON experiment configuration for the batch runner

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "decoupler/bath.hpp"
#include "decoupler/dynamics.hpp"
#include "decoupler/io.hpp"

namespace decoupler::cli {

enum class Task { Decay, Qpt, Scaling, Compare };
enum class Mode { MonteCarlo, Analytic, Both };
enum class Spacing { Linear, Log };
enum class Observable { Coherence, Fidelity };

struct SweepConfig {
    double t_min_us = 0.0;
    double t_max_us = 0.0;
    int points = 0;
    Spacing spacing = Spacing::Linear;

    std::vector<double> times() const;
};

struct MonteCarloConfig {
    std::size_t trajectories = 10000;
    std::uint64_t seed = 0;
    bool exact_integrals = true;
    double fine_dt_us = 0.0;  // 0: τ_C / 1000
};

struct CompareEntry {
    io::SequenceSpec sequence;
    std::string label;
    std::optional<dynamics::InputState> initial_state;
};

struct ScalingConfig {
    std::vector<int> n_values;
    double x_min = 0.05;  // sweep in units of T₂ n^{2/3}
    double x_max = 2.0;
    int points = 60;
    bool free_exponent = true;
};

struct ExperimentConfig {
    Task task = Task::Decay;
    Mode mode = Mode::MonteCarlo;
    bath::BathParams bath;
    std::optional<io::SequenceSpec> sequence;
    std::vector<CompareEntry> sequences;
    dynamics::PulseErrorModel errors;
    std::optional<SweepConfig> sweep;
    MonteCarloConfig monte_carlo;
    Observable observable = Observable::Coherence;
    dynamics::InputState initial_state = dynamics::InputState::X;
    double min_pulse_gap_us = 0.0;
    bool fit_free_amplitude = false;
    std::vector<double> qpt_times_us;
    std::optional<ScalingConfig> scaling;

    bool run_mc() const { return mode != Mode::Analytic; }
    bool run_analytic() const { return mode != Mode::MonteCarlo; }
};

const char* to_string(Task t);
const char* to_string(Mode m);
Task task_from_string(const std::string& s);

// Parses and validates the whole configuration. Every out-of-contract field
// is reported; the thrown ConfigError lists one problem per line.
ExperimentConfig parse_config(const io::json& j);
ExperimentConfig load_config(const std::string& path);

// Resolved configuration with every default filled in.
io::json to_json(const ExperimentConfig& cfg);

} // namespace decoupler::cli
