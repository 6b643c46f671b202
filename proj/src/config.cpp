#include "decoupler/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "decoupler/errors.hpp"

namespace decoupler::cli {

using io::json;

const char* to_string(Task t)
{
    switch (t) {
    case Task::Decay: return "decay";
    case Task::Qpt: return "qpt";
    case Task::Scaling: return "scaling";
    case Task::Compare: return "compare";
    }
    return "?";
}

const char* to_string(Mode m)
{
    switch (m) {
    case Mode::MonteCarlo: return "mc";
    case Mode::Analytic: return "analytic";
    case Mode::Both: return "both";
    }
    return "?";
}

Task task_from_string(const std::string& s)
{
    if (s == "decay") return Task::Decay;
    if (s == "qpt") return Task::Qpt;
    if (s == "scaling") return Task::Scaling;
    if (s == "compare") return Task::Compare;
    throw ConfigError(fmt::format("task: unknown task '{}' (decay|qpt|scaling|compare)", s));
}

std::vector<double> SweepConfig::times() const
{
    std::vector<double> ts(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double f = points > 1 ? static_cast<double>(i) / (points - 1) : 0.0;
        ts[static_cast<std::size_t>(i)] = spacing == Spacing::Linear
                                              ? t_min_us + f * (t_max_us - t_min_us)
                                              : t_min_us * std::pow(t_max_us / t_min_us, f);
    }
    return ts;
}

namespace {

// Collects every problem instead of stopping at the first one.
class Reader {
public:
    std::vector<std::string> errors;

    template <class... Args>
    void fail(fmt::format_string<Args...> f, Args&&... args)
    {
        errors.push_back(fmt::format(f, std::forward<Args>(args)...));
    }

    const json* object(const json& parent, const char* key, const std::string& where, bool required)
    {
        if (!parent.contains(key)) {
            if (required) fail("{}{}: required section missing", where, key);
            return nullptr;
        }
        const auto& v = parent[key];
        if (!v.is_object()) {
            fail("{}{}: expected an object", where, key);
            return nullptr;
        }
        return &v;
    }

    void known(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
    {
        for (const auto& [key, _] : j.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) fail("{}: unknown field '{}'", where.empty() ? "config" : where, key);
        }
    }

    std::optional<double> number(const json& j, const char* key, const std::string& where, bool required)
    {
        if (!j.contains(key)) {
            if (required) fail("{}.{}: required number missing", where, key);
            return std::nullopt;
        }
        if (!j[key].is_number()) {
            fail("{}.{}: expected a number", where, key);
            return std::nullopt;
        }
        const double v = j[key].get<double>();
        if (!std::isfinite(v)) {
            fail("{}.{}: must be finite", where, key);
            return std::nullopt;
        }
        return v;
    }

    std::optional<long long> integer(const json& j, const char* key, const std::string& where, bool required)
    {
        if (!j.contains(key)) {
            if (required) fail("{}.{}: required integer missing", where, key);
            return std::nullopt;
        }
        if (!j[key].is_number_integer()) {
            fail("{}.{}: expected an integer", where, key);
            return std::nullopt;
        }
        return j[key].get<long long>();
    }

    std::optional<bool> boolean(const json& j, const char* key, const std::string& where)
    {
        if (!j.contains(key)) return std::nullopt;
        if (!j[key].is_boolean()) {
            fail("{}.{}: expected true or false", where, key);
            return std::nullopt;
        }
        return j[key].get<bool>();
    }

    std::optional<std::string> string(const json& j, const char* key, const std::string& where)
    {
        if (!j.contains(key)) return std::nullopt;
        if (!j[key].is_string()) {
            fail("{}.{}: expected a string", where, key);
            return std::nullopt;
        }
        return j[key].get<std::string>();
    }

    std::optional<io::SequenceSpec> sequence(const json& j, const std::string& where)
    {
        try {
            return io::sequence_spec_from_json(j);
        } catch (const ConfigError& e) {
            fail("{}: {}", where, e.what());
        }
        return std::nullopt;
    }

    std::optional<dynamics::InputState> state(const json& j, const std::string& where)
    {
        const auto s = string(j, "initial_state", where);
        if (!s) return std::nullopt;
        try {
            return dynamics::input_state_from_label(*s);
        } catch (const std::invalid_argument& e) {
            fail("{}.initial_state: {}", where, e.what());
        }
        return std::nullopt;
    }
};

} // namespace

ExperimentConfig parse_config(const json& j)
{
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    Reader rd;
    ExperimentConfig cfg;
    rd.known(j, {"task", "mode", "bath", "sequence", "sequences", "errors", "sweep", "monte_carlo", "observable",
                 "initial_state", "min_pulse_gap_us", "fit", "qpt", "scaling"},
             "config");

    if (const auto t = rd.string(j, "task", "config")) {
        try {
            cfg.task = task_from_string(*t);
        } catch (const ConfigError& e) {
            rd.fail("{}", e.what());
        }
    } else {
        rd.fail("task: required (decay|qpt|scaling|compare)");
    }

    if (const auto m = rd.string(j, "mode", "config")) {
        if (*m == "mc") cfg.mode = Mode::MonteCarlo;
        else if (*m == "analytic") cfg.mode = Mode::Analytic;
        else if (*m == "both") cfg.mode = Mode::Both;
        else rd.fail("mode: unknown mode '{}' (mc|analytic|both)", *m);
    }

    if (const json* b = rd.object(j, "bath", "", true)) {
        rd.known(*b, {"b_per_us", "tau_c_us"}, "bath");
        const auto bv = rd.number(*b, "b_per_us", "bath", true);
        const auto tc = rd.number(*b, "tau_c_us", "bath", true);
        if (bv && !(*bv > 0.0)) rd.fail("bath.b_per_us: must be > 0, got {}", *bv);
        if (tc && !(*tc > 0.0)) rd.fail("bath.tau_c_us: must be > 0, got {}", *tc);
        cfg.bath = {bv.value_or(0.0), tc.value_or(0.0)};
    }

    if (j.contains("sequence")) cfg.sequence = rd.sequence(j["sequence"], "sequence");

    if (j.contains("sequences")) {
        if (!j["sequences"].is_array()) {
            rd.fail("sequences: expected an array");
        } else {
            std::set<std::string> labels;
            for (std::size_t k = 0; k < j["sequences"].size(); ++k) {
                const auto& e = j["sequences"][k];
                const std::string where = fmt::format("sequences[{}]", k);
                auto spec = rd.sequence(e, where);
                if (!spec) continue;
                if (e.contains("sweep") && (!j.contains("sweep") || e["sweep"] != j["sweep"]))
                    rd.fail("{}: sweep differs from the shared sweep (compared sequences must share one sweep)", where);
                CompareEntry entry{*spec, spec->default_label(), rd.state(e, where)};
                if (const auto l = rd.string(e, "label", where)) entry.label = *l;
                if (!labels.insert(entry.label).second) rd.fail("{}: duplicate label '{}'", where, entry.label);
                cfg.sequences.push_back(std::move(entry));
            }
        }
    }

    if (const json* e = rd.object(j, "errors", "", false)) {
        rd.known(*e, {"eps_x", "eps_y", "tilt_x", "tilt_y"}, "errors");
        cfg.errors.eps_x = rd.number(*e, "eps_x", "errors", false).value_or(0.0);
        cfg.errors.eps_y = rd.number(*e, "eps_y", "errors", false).value_or(0.0);
        cfg.errors.tilt_x = rd.number(*e, "tilt_x", "errors", false).value_or(0.0);
        cfg.errors.tilt_y = rd.number(*e, "tilt_y", "errors", false).value_or(0.0);
        try {
            cfg.errors.check();
        } catch (const std::invalid_argument& ex) {
            rd.fail("errors: {}", ex.what());
        }
    }

    if (const json* s = rd.object(j, "sweep", "", false)) {
        rd.known(*s, {"t_min_us", "t_max_us", "points", "spacing"}, "sweep");
        SweepConfig sw;
        sw.t_min_us = rd.number(*s, "t_min_us", "sweep", true).value_or(0.0);
        sw.t_max_us = rd.number(*s, "t_max_us", "sweep", true).value_or(0.0);
        sw.points = static_cast<int>(rd.integer(*s, "points", "sweep", true).value_or(0));
        if (const auto sp = rd.string(*s, "spacing", "sweep")) {
            if (*sp == "linear") sw.spacing = Spacing::Linear;
            else if (*sp == "log") sw.spacing = Spacing::Log;
            else rd.fail("sweep.spacing: unknown spacing '{}' (linear|log)", *sp);
        }
        if (!(sw.t_min_us > 0.0)) rd.fail("sweep.t_min_us: must be > 0, got {}", sw.t_min_us);
        if (!(sw.t_max_us > sw.t_min_us)) rd.fail("sweep.t_max_us: must exceed t_min_us");
        if (sw.points < 2) rd.fail("sweep.points: must be >= 2, got {}", sw.points);
        cfg.sweep = sw;
    }

    if (const json* mc = rd.object(j, "monte_carlo", "", false)) {
        rd.known(*mc, {"trajectories", "seed", "exact_integrals", "fine_dt_us"}, "monte_carlo");
        if (const auto n = rd.integer(*mc, "trajectories", "monte_carlo", false)) {
            if (*n < 2) rd.fail("monte_carlo.trajectories: must be >= 2, got {}", *n);
            else cfg.monte_carlo.trajectories = static_cast<std::size_t>(*n);
        }
        if (mc->contains("seed")) {
            if (!(*mc)["seed"].is_number_unsigned() && !((*mc)["seed"].is_number_integer() && (*mc)["seed"].get<long long>() >= 0))
                rd.fail("monte_carlo.seed: expected a non-negative integer");
            else cfg.monte_carlo.seed = (*mc)["seed"].get<std::uint64_t>();
        }
        cfg.monte_carlo.exact_integrals = rd.boolean(*mc, "exact_integrals", "monte_carlo").value_or(true);
        if (const auto dt = rd.number(*mc, "fine_dt_us", "monte_carlo", false)) {
            if (!(*dt > 0.0)) rd.fail("monte_carlo.fine_dt_us: must be > 0");
            else cfg.monte_carlo.fine_dt_us = *dt;
        }
    }

    if (const auto o = rd.string(j, "observable", "config")) {
        if (*o == "coherence") cfg.observable = Observable::Coherence;
        else if (*o == "fidelity") cfg.observable = Observable::Fidelity;
        else rd.fail("observable: unknown observable '{}' (coherence|fidelity)", *o);
    }
    if (const auto s = rd.state(j, "config")) cfg.initial_state = *s;

    if (const auto g = rd.number(j, "min_pulse_gap_us", "config", false)) {
        if (*g < 0.0) rd.fail("min_pulse_gap_us: must be >= 0");
        else cfg.min_pulse_gap_us = *g;
    }

    if (const json* f = rd.object(j, "fit", "", false)) {
        rd.known(*f, {"free_amplitude"}, "fit");
        cfg.fit_free_amplitude = rd.boolean(*f, "free_amplitude", "fit").value_or(false);
    }

    if (const json* q = rd.object(j, "qpt", "", false)) {
        rd.known(*q, {"times_us"}, "qpt");
        if (!q->contains("times_us") || !(*q)["times_us"].is_array()) {
            rd.fail("qpt.times_us: required array");
        } else {
            for (const auto& v : (*q)["times_us"]) {
                if (!v.is_number() || !(v.get<double>() > 0.0)) rd.fail("qpt.times_us: entries must be positive numbers");
                else cfg.qpt_times_us.push_back(v.get<double>());
            }
        }
    }

    if (const json* s = rd.object(j, "scaling", "", false)) {
        rd.known(*s, {"n_values", "x_min", "x_max", "points", "free_exponent"}, "scaling");
        ScalingConfig sc;
        if (!s->contains("n_values") || !(*s)["n_values"].is_array()) {
            rd.fail("scaling.n_values: required array");
        } else {
            for (const auto& v : (*s)["n_values"]) {
                if (!v.is_number_integer() || v.get<int>() < 1) rd.fail("scaling.n_values: entries must be integers >= 1");
                else sc.n_values.push_back(v.get<int>());
            }
        }
        sc.x_min = rd.number(*s, "x_min", "scaling", false).value_or(sc.x_min);
        sc.x_max = rd.number(*s, "x_max", "scaling", false).value_or(sc.x_max);
        sc.points = static_cast<int>(rd.integer(*s, "points", "scaling", false).value_or(sc.points));
        sc.free_exponent = rd.boolean(*s, "free_exponent", "scaling").value_or(sc.free_exponent);
        if (!(sc.x_min > 0.0) || !(sc.x_max > sc.x_min)) rd.fail("scaling: need 0 < x_min < x_max");
        if (sc.points < 2) rd.fail("scaling.points: must be >= 2");
        cfg.scaling = sc;
    }

    // Task-specific requirements.
    switch (cfg.task) {
    case Task::Decay:
        if (!cfg.sequence && !j.contains("sequence")) rd.fail("sequence: required for task decay");
        if (!cfg.sweep && !j.contains("sweep")) rd.fail("sweep: required for task decay");
        break;
    case Task::Compare:
        if (j.contains("sequences") && j["sequences"].is_array() && j["sequences"].size() < 2)
            rd.fail("sequences: task compare needs at least 2 sequences");
        if (!j.contains("sequences")) rd.fail("sequences: required for task compare");
        if (!cfg.sweep && !j.contains("sweep")) rd.fail("sweep: required for task compare");
        break;
    case Task::Qpt:
        if (!cfg.sequence && !j.contains("sequence")) rd.fail("sequence: required for task qpt");
        if (!j.contains("qpt")) rd.fail("qpt: required for task qpt");
        else if (cfg.qpt_times_us.empty() && rd.errors.empty()) rd.fail("qpt.times_us: must not be empty");
        break;
    case Task::Scaling:
        if (!cfg.sequence && !j.contains("sequence")) rd.fail("sequence: required for task scaling");
        if (cfg.sequence && (cfg.sequence->type == io::SequenceType::Ramsey || cfg.sequence->type == io::SequenceType::Custom))
            rd.fail("sequence.type: task scaling needs an n-parameterized sequence (se|cpmg|udd|xy)");
        if (!j.contains("scaling")) rd.fail("scaling: required for task scaling");
        else if (cfg.scaling) {
            std::set<int> distinct(cfg.scaling->n_values.begin(), cfg.scaling->n_values.end());
            if (distinct.size() < 3) rd.fail("scaling.n_values: need at least 3 distinct values");
        }
        break;
    }

    const bool ideal = cfg.errors.ideal();
    if (cfg.observable == Observable::Coherence && !ideal)
        rd.fail("observable: coherence assumes ideal pulses; use observable fidelity with nonzero errors");
    if (cfg.run_analytic() && !ideal)
        rd.fail("mode: analytic predictions assume ideal pulses; use mode mc with nonzero errors");
    if (cfg.task == Task::Scaling && cfg.observable != Observable::Coherence)
        rd.fail("observable: task scaling uses coherence");

    if (!rd.errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : rd.errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config {}: JSON parse error: {}", path, e.what()));
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& cfg)
{
    json j;
    j["task"] = to_string(cfg.task);
    j["mode"] = to_string(cfg.mode);
    j["bath"] = {{"b_per_us", cfg.bath.b}, {"tau_c_us", cfg.bath.tau_c}};
    if (cfg.sequence) j["sequence"] = io::to_json(*cfg.sequence);
    if (!cfg.sequences.empty()) {
        json arr = json::array();
        for (const auto& e : cfg.sequences) {
            json s = io::to_json(e.sequence);
            s["label"] = e.label;
            if (e.initial_state) s["initial_state"] = std::string(dynamics::label_of(*e.initial_state));
            arr.push_back(s);
        }
        j["sequences"] = arr;
    }
    j["errors"] = {{"eps_x", cfg.errors.eps_x}, {"eps_y", cfg.errors.eps_y}, {"tilt_x", cfg.errors.tilt_x},
                   {"tilt_y", cfg.errors.tilt_y}};
    if (cfg.sweep)
        j["sweep"] = {{"t_min_us", cfg.sweep->t_min_us}, {"t_max_us", cfg.sweep->t_max_us}, {"points", cfg.sweep->points},
                      {"spacing", cfg.sweep->spacing == Spacing::Linear ? "linear" : "log"}};
    j["monte_carlo"] = {{"trajectories", cfg.monte_carlo.trajectories}, {"seed", cfg.monte_carlo.seed},
                        {"exact_integrals", cfg.monte_carlo.exact_integrals},
                        {"fine_dt_us", cfg.monte_carlo.fine_dt_us > 0.0 ? cfg.monte_carlo.fine_dt_us : cfg.bath.tau_c / 1000.0}};
    j["observable"] = cfg.observable == Observable::Coherence ? "coherence" : "fidelity";
    j["initial_state"] = std::string(dynamics::label_of(cfg.initial_state));
    j["min_pulse_gap_us"] = cfg.min_pulse_gap_us;
    j["fit"] = {{"free_amplitude", cfg.fit_free_amplitude}};
    if (!cfg.qpt_times_us.empty()) j["qpt"] = {{"times_us", cfg.qpt_times_us}};
    if (cfg.scaling)
        j["scaling"] = {{"n_values", cfg.scaling->n_values}, {"x_min", cfg.scaling->x_min}, {"x_max", cfg.scaling->x_max},
                        {"points", cfg.scaling->points}, {"free_exponent", cfg.scaling->free_exponent}};
    return j;
}

} // namespace decoupler::cli
