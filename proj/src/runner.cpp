#include "decoupler/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "decoupler/analytic.hpp"
#include "decoupler/errors.hpp"
#include "decoupler/fitting.hpp"
#include "decoupler/rng.hpp"
#include "decoupler/tomography.hpp"

namespace decoupler::cli {

using io::json;
using sequences::PulseSequence;

namespace {

constexpr double kOneOverE = 0.36787944117144233;

dynamics::McOptions mc_options(const ExperimentConfig& cfg, const RunOptions& opts, std::size_t point)
{
    dynamics::McOptions mc;
    mc.trajectories = cfg.monte_carlo.trajectories;
    // Seeds depend only on the sweep index, so sequences compared at the same
    // time point see the same bath realizations.
    mc.seed = substream_seed(cfg.monte_carlo.seed, point);
    mc.exact_integrals = cfg.monte_carlo.exact_integrals;
    mc.fine_dt = cfg.monte_carlo.fine_dt_us;
    mc.threads = opts.threads;
    return mc;
}

// All sequences are built and validated before any computation starts.
void prevalidate(const ExperimentConfig& cfg, const io::SequenceSpec& spec, const std::vector<double>& times,
                 const std::string& what)
{
    const sequences::ValidationOptions vopts{cfg.min_pulse_gap_us};
    for (double t : times) {
        PulseSequence seq;
        try {
            seq = spec.build(t);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(fmt::format("{} at t={} us: {}", what, t, e.what()));
        }
        const auto v = sequences::validate(seq, vopts);
        if (!v.empty())
            throw ConfigError(fmt::format("{} at t={} us: {} ({})", what, t, v.front().message,
                                          sequences::to_string(v.front().kind)));
    }
}

// Amplitude and baseline of the observable for an input with Bloch z-component rz.
std::pair<double, double> observable_scale(const ExperimentConfig& cfg, dynamics::InputState s)
{
    if (cfg.observable == Observable::Coherence) return {1.0, 0.0};
    const double rz = dynamics::bloch_of(s).rz;
    return {0.5 * (1.0 - rz * rz), 0.5 * (1.0 + rz * rz)};
}

fitting::DecayCurve compute_curve(const ExperimentConfig& cfg, const RunOptions& opts, const io::SequenceSpec& spec,
                                  dynamics::InputState input, const std::vector<double>& times, bool mc)
{
    fitting::DecayCurve curve;
    const auto [amp, base] = observable_scale(cfg, input);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto seq = spec.build(times[i]);
        fitting::DecayPoint pt{times[i], 0.0, 0.0};
        if (mc) {
            const auto mco = mc_options(cfg, opts, i);
            const auto r = cfg.observable == Observable::Coherence
                               ? dynamics::coherence(cfg.bath, seq, mco)
                               : dynamics::fidelity(cfg.bath, seq, cfg.errors, dynamics::bloch_of(input), mco);
            pt.value = r.mean;
            pt.std_error = r.std_error;
        } else {
            pt.value = amp * std::exp(-analytic::chi_gaussian(seq, cfg.bath)) + base;
        }
        curve.points.push_back(pt);
    }
    return curve;
}

// Fit appropriate to the sequence: Gaussian for free evolution, cubic otherwise.
json fit_curve(const ExperimentConfig& cfg, const io::SequenceSpec& spec, dynamics::InputState input,
               const fitting::DecayCurve& curve, RunReport& report)
{
    json out;
    const auto [amp, base] = observable_scale(cfg, input);
    try {
        out["one_over_e_us"] = fitting::one_over_e_time(curve, amp, base);
    } catch (const NumericalError&) {
        out["one_over_e_us"] = nullptr;
    }
    if (amp == 0.0) {
        out["fit"] = {{"error", "polar input state: the observable does not decay under dephasing"}};
        return out;
    }
    fitting::FitOptions fo;
    fo.free_amplitude = cfg.fit_free_amplitude;
    fo.amplitude = amp;
    fo.baseline = base;
    try {
        const bool gaussian = spec.type == io::SequenceType::Ramsey;
        const auto r = gaussian ? fitting::fit_gaussian_decay(curve, fo) : fitting::fit_cubic_exp(curve, fo);
        out["fit_model"] = gaussian ? "gaussian" : "cubic_exp";
        out["fit"] = io::to_json(r);
        if (!r.converged) {
            report.numerical_failure = true;
            report.warnings.push_back("fit did not converge");
        }
    } catch (const std::invalid_argument& e) {
        out["fit"] = {{"error", e.what()}};
    }
    return out;
}

std::vector<std::pair<const char*, bool>> modes(const ExperimentConfig& cfg)
{
    std::vector<std::pair<const char*, bool>> m;
    if (cfg.run_mc()) m.emplace_back("mc", true);
    if (cfg.run_analytic()) m.emplace_back("analytic", false);
    return m;
}

json reference_values(const ExperimentConfig& cfg, int n)
{
    json j;
    j["T2_us"] = analytic::t2_from_bath(cfg.bath);
    if (n >= 1) j["t_coh_law_us"] = analytic::t_coh(cfg.bath, n);
    j["slow_bath"] = analytic::slow_bath(cfg.bath);
    return j;
}

struct ScalingFamily {
    std::vector<io::SequenceSpec> specs;
    std::vector<std::vector<double>> times;
    std::vector<double> xs;
};

ScalingFamily scaling_family(const ExperimentConfig& cfg)
{
    const auto& sc = *cfg.scaling;
    const double t2 = analytic::t2_from_bath(cfg.bath);
    ScalingFamily f;
    for (int i = 0; i < sc.points; ++i) f.xs.push_back(sc.x_min + (sc.x_max - sc.x_min) * i / (sc.points - 1));
    for (int n : sc.n_values) {
        auto spec = *cfg.sequence;
        if (spec.type == io::SequenceType::SpinEcho && n != 1) spec.type = io::SequenceType::Cpmg;
        spec.n = n;
        const double unit = t2 * std::pow(static_cast<double>(n), 2.0 / 3.0);
        std::vector<double> ts;
        for (double x : f.xs) ts.push_back(x * unit);
        f.specs.push_back(spec);
        f.times.push_back(std::move(ts));
    }
    return f;
}

void check_sequences(const ExperimentConfig& cfg)
{
    switch (cfg.task) {
    case Task::Decay: prevalidate(cfg, *cfg.sequence, cfg.sweep->times(), "sequence"); break;
    case Task::Compare:
        for (const auto& e : cfg.sequences) prevalidate(cfg, e.sequence, cfg.sweep->times(), "sequence '" + e.label + "'");
        break;
    case Task::Qpt: prevalidate(cfg, *cfg.sequence, cfg.qpt_times_us, "sequence"); break;
    case Task::Scaling: {
        const auto f = scaling_family(cfg);
        for (std::size_t k = 0; k < f.specs.size(); ++k)
            prevalidate(cfg, f.specs[k], f.times[k], fmt::format("sequence n={}", cfg.scaling->n_values[k]));
        break;
    }
    }
}

} // namespace

Eigen::Matrix2cd ideal_unitary(const PulseSequence& seq)
{
    const auto& s = tomography::pauli_basis();
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
    for (const auto& p : seq.pulses) {
        const double h = 0.5 * p.nominal_angle;
        const Eigen::Matrix2cd r = std::cos(h) * s[0]
                                   - std::complex<double>(0.0, std::sin(h)) * (std::cos(p.axis) * s[1] + std::sin(p.axis) * s[2]);
        u = r * u;
    }
    return u;
}

RunReport run_decay(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto& spec = *cfg.sequence;
    const auto times = cfg.sweep->times();
    check_sequences(cfg);

    RunReport report;
    json results;
    for (const auto& [name, mc] : modes(cfg)) {
        const auto curve = compute_curve(cfg, opts, spec, cfg.initial_state, times, mc);
        const std::string file = fmt::format("curve_{}.csv", name);
        io::write_curve_csv(opts.out_dir / file, curve);
        json r = fit_curve(cfg, spec, cfg.initial_state, curve, report);
        r["csv"] = file;
        results[name] = r;
    }
    report.summary["task"] = "decay";
    report.summary["sequence"] = io::to_json(spec);
    report.summary["observable"] = cfg.observable == Observable::Coherence ? "coherence" : "fidelity";
    report.summary["initial_state"] = std::string(dynamics::label_of(cfg.initial_state));
    report.summary["reference"] = reference_values(cfg, spec.n);
    report.summary["results"] = results;
    return report;
}

RunReport run_compare(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto times = cfg.sweep->times();
    check_sequences(cfg);

    RunReport report;
    std::ofstream combined(opts.out_dir / "curves.csv", std::ios::binary | std::ios::trunc);
    combined << "label,mode,t_us,value,std_error\n";
    json entries = json::array();
    const std::size_t mid = (times.size() - 1) / 2;
    for (const auto& e : cfg.sequences) {
        const auto input = e.initial_state.value_or(cfg.initial_state);
        json entry;
        entry["label"] = e.label;
        entry["sequence"] = io::to_json(e.sequence);
        entry["initial_state"] = std::string(dynamics::label_of(input));
        for (const auto& [name, mc] : modes(cfg)) {
            const auto curve = compute_curve(cfg, opts, e.sequence, input, times, mc);
            const std::string file = fmt::format("curve_{}_{}.csv", e.label, name);
            io::write_curve_csv(opts.out_dir / file, curve);
            for (const auto& p : curve.points)
                combined << e.label << ',' << name << ',' << io::format_number(p.t) << ',' << io::format_number(p.value)
                         << ',' << io::format_number(p.std_error) << '\n';
            json r = fit_curve(cfg, e.sequence, input, curve, report);
            r["csv"] = file;
            r["midpoint"] = {{"t_us", curve.points[mid].t}, {"value", curve.points[mid].value},
                             {"std_error", curve.points[mid].std_error}};
            entry[name] = r;
        }
        entries.push_back(entry);
    }
    report.summary["task"] = "compare";
    report.summary["observable"] = cfg.observable == Observable::Coherence ? "coherence" : "fidelity";
    report.summary["sequences"] = entries;
    return report;
}

RunReport run_qpt(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto& spec = *cfg.sequence;
    check_sequences(cfg);

    RunReport report;
    json points = json::array();
    const auto identity = tomography::identity_process();
    for (std::size_t k = 0; k < cfg.qpt_times_us.size(); ++k) {
        const double t = cfg.qpt_times_us[k];
        const auto seq = spec.build(t);
        const auto target = tomography::unitary_process(ideal_unitary(seq));
        json point;
        point["t_us"] = t;
        const auto describe = [&](const tomography::ProcessMatrix& chi, const char* name) {
            json j;
            j["chi"] = io::chi_to_json(chi.chi);
            const auto f = tomography::process_fidelity(chi, target);
            j["process_fidelity"] = f.value;
            j["process_fidelity_raw"] = f.raw;
            j["fidelity_clipped"] = f.clipped;
            j["process_fidelity_identity"] = tomography::process_fidelity(chi, identity).value;
            j["trace_preservation_residual"] = chi.trace_preservation_residual();
            j["min_eigenvalue"] = chi.min_eigenvalue();
            j["physical"] = chi.physical(1e-9);
            const std::string file = fmt::format("chi_{}_{}.csv", name, k);
            io::write_chi_magnitude_csv(opts.out_dir / file, chi.chi);
            j["csv"] = file;
            return j;
        };
        if (cfg.run_mc()) {
            const auto est = tomography::qpt_experiment(cfg.bath, seq, cfg.errors, mc_options(cfg, opts, k));
            json j = describe(est.chi, "mc");
            j["chi_std_error"] = io::std_error_to_json(est.std_error_re, est.std_error_im);
            if (!est.chi.physical(1e-9)) report.warnings.push_back(fmt::format("t={} us: reconstructed chi is not positive semidefinite", t));
            point["mc"] = j;
        }
        if (cfg.run_analytic()) {
            // Ideal π pulses commute the toggling-frame dephasing to the front:
            // E = U_ideal ∘ dephasing(exp(−χ)).
            const double w = std::exp(-analytic::chi_gaussian(seq, cfg.bath));
            const auto u = ideal_unitary(seq);
            const Eigen::Matrix2cd z = tomography::pauli_basis()[3];
            const std::array<Eigen::Matrix2cd, 2> kraus{std::sqrt(0.5 * (1.0 + w)) * u, std::sqrt(0.5 * (1.0 - w)) * (u * z)};
            point["analytic"] = describe(tomography::kraus_process(kraus), "analytic");
            point["analytic"]["coherence"] = w;
        }
        points.push_back(point);
    }
    report.summary["task"] = "qpt";
    report.summary["sequence"] = io::to_json(spec);
    report.summary["basis"] = json::array({"I", "X", "Y", "Z"});
    report.summary["points"] = points;
    return report;
}

RunReport run_scaling(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto& sc = *cfg.scaling;
    const double t2 = analytic::t2_from_bath(cfg.bath);
    check_sequences(cfg);
    const auto family = scaling_family(cfg);
    const auto& specs = family.specs;
    const auto& time_grids = family.times;
    const auto& xs = family.xs;

    RunReport report;
    json results;
    for (const auto& [name, mc] : modes(cfg)) {
        std::vector<fitting::ScalingPoint> table;
        std::vector<fitting::DecayCurve> curves;
        std::ofstream collapse(opts.out_dir / fmt::format("collapse_{}.csv", name), std::ios::binary | std::ios::trunc);
        collapse << "n,x,t_us,value,std_error\n";
        for (std::size_t k = 0; k < specs.size(); ++k) {
            const int n = sc.n_values[k];
            auto curve = compute_curve(cfg, opts, specs[k], dynamics::InputState::X, time_grids[k], mc);
            for (std::size_t i = 0; i < xs.size(); ++i)
                collapse << n << ',' << io::format_number(xs[i]) << ',' << io::format_number(curve.points[i].t) << ','
                         << io::format_number(curve.points[i].value) << ',' << io::format_number(curve.points[i].std_error)
                         << '\n';
            fitting::ScalingPoint sp{static_cast<double>(n), 0.0, 0.0};
            if (mc) {
                const auto fit = fitting::fit_cubic_exp(curve);
                if (!fit.converged) {
                    report.numerical_failure = true;
                    report.warnings.push_back(fmt::format("cubic fit for n={} did not converge", n));
                }
                sp.t_coh = fit.params.at("T_coh");
                sp.std_error = fit.std_errors.at("T_coh");
            } else {
                const auto& spec = specs[k];
                sp.t_coh = analytic::decay_time([&](double t) { return spec.build(t); }, cfg.bath, kOneOverE);
            }
            table.push_back(sp);
            curves.push_back(std::move(curve));
        }

        // Largest spread across n at fixed normalized time, over grid points
        // where any curve lies in the window [0.2, 0.9].
        double spread = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            bool in_window = false;
            for (const auto& c : curves) {
                const double v = c.points[i].value;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                in_window = in_window || (v >= 0.2 && v <= 0.9);
            }
            if (in_window) spread = std::max(spread, hi - lo);
        }

        const std::string table_file = fmt::format("scaling_{}.csv", name);
        std::ofstream tf(opts.out_dir / table_file, std::ios::binary | std::ios::trunc);
        tf << "n,t_coh_us,std_error\n";
        json rows = json::array();
        for (const auto& p : table) {
            tf << static_cast<int>(p.n) << ',' << io::format_number(p.t_coh) << ',' << io::format_number(p.std_error) << '\n';
            rows.push_back({{"n", static_cast<int>(p.n)}, {"t_coh_us", p.t_coh}, {"std_error", p.std_error},
                            {"ratio_to_t2_law", p.t_coh / t2}});
        }

        json r;
        r["table_csv"] = table_file;
        r["collapse_csv"] = fmt::format("collapse_{}.csv", name);
        r["rows"] = rows;
        r["fit_fixed_exponent"] = io::to_json(fitting::fit_scaling(table, false));
        if (sc.free_exponent) r["fit_free_exponent"] = io::to_json(fitting::fit_scaling(table, true));
        r["collapse_max_spread"] = spread;
        results[name] = r;
    }
    report.summary["task"] = "scaling";
    report.summary["sequence"] = io::to_json(*cfg.sequence);
    report.summary["reference"] = reference_values(cfg, 0);
    report.summary["normalized_time_unit"] = "T2 * n^(2/3)";
    report.summary["results"] = results;
    return report;
}

RunReport run(const ExperimentConfig& cfg, const RunOptions& opts)
{
    check_sequences(cfg);
    std::filesystem::create_directories(opts.out_dir);
    io::write_json(opts.out_dir / "config.resolved.json", to_json(cfg));
    RunReport report;
    switch (cfg.task) {
    case Task::Decay: report = run_decay(cfg, opts); break;
    case Task::Compare: report = run_compare(cfg, opts); break;
    case Task::Qpt: report = run_qpt(cfg, opts); break;
    case Task::Scaling: report = run_scaling(cfg, opts); break;
    }
    if (!analytic::slow_bath(cfg.bath))
        report.warnings.push_back("b * tau_c < 10: the cubic echo law and T2 relation assume a slow bath");
    report.summary["warnings"] = report.warnings;
    io::write_json(opts.out_dir / "summary.json", report.summary);
    return report;
}

} // namespace decoupler::cli
