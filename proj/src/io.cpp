#include "decoupler/io.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "decoupler/errors.hpp"

namespace decoupler::io {

using sequences::PulseSequence;

const char* to_string(SequenceType t)
{
    switch (t) {
    case SequenceType::Ramsey: return "ramsey";
    case SequenceType::SpinEcho: return "se";
    case SequenceType::Cpmg: return "cpmg";
    case SequenceType::Udd: return "udd";
    case SequenceType::Xy: return "xy";
    case SequenceType::Custom: return "custom";
    }
    return "?";
}

SequenceType sequence_type_from_string(const std::string& s)
{
    if (s == "ramsey") return SequenceType::Ramsey;
    if (s == "se" || s == "spin_echo") return SequenceType::SpinEcho;
    if (s == "cpmg") return SequenceType::Cpmg;
    if (s == "udd") return SequenceType::Udd;
    if (s == "xy") return SequenceType::Xy;
    if (s == "custom") return SequenceType::Custom;
    throw ConfigError(fmt::format("sequence.type: unknown type '{}' (ramsey|se|cpmg|udd|xy|custom)", s));
}

PulseSequence SequenceSpec::build(double t) const
{
    switch (type) {
    case SequenceType::Ramsey: return sequences::ramsey(t);
    case SequenceType::SpinEcho: return sequences::spin_echo(t);
    case SequenceType::Cpmg: return sequences::cpmg(n, t);
    case SequenceType::Udd: return sequences::udd(n, t);
    case SequenceType::Xy: return sequences::xy(n, t, axis_start);
    case SequenceType::Custom: {
        if (!(t > 0.0)) throw std::invalid_argument("custom sequence: duration must be positive");
        PulseSequence seq{t, {}};
        for (std::size_t k = 0; k < custom_times.size(); ++k) {
            sequences::Pulse p;
            p.time = custom_times[k] * t;
            p.axis = k < custom_axes.size() ? custom_axes[k] : sequences::kAxisX;
            seq.pulses.push_back(p);
        }
        return seq;
    }
    }
    throw std::logic_error("unhandled sequence type");
}

std::string SequenceSpec::default_label() const
{
    switch (type) {
    case SequenceType::Ramsey: return "ramsey";
    case SequenceType::SpinEcho: return "se";
    case SequenceType::Custom: return fmt::format("custom{}", custom_times.size());
    default: return fmt::format("{}{}", to_string(type), n);
    }
}

namespace {

double axis_from_json(const json& a, std::size_t k)
{
    if (a.is_string()) {
        const auto s = a.get<std::string>();
        if (s == "X" || s == "x") return sequences::kAxisX;
        if (s == "Y" || s == "y") return sequences::kAxisY;
        throw ConfigError(fmt::format("sequence.custom_axes[{}]: '{}' is not X, Y or an angle in radians", k, s));
    }
    if (a.is_number()) return a.get<double>();
    throw ConfigError(fmt::format("sequence.custom_axes[{}]: expected \"X\", \"Y\" or a number", k));
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(fmt::format("{}: unknown field '{}'", where, key));
    }
}

} // namespace

SequenceSpec sequence_spec_from_json(const json& j)
{
    if (!j.is_object()) throw ConfigError("sequence: expected an object");
    reject_unknown(j, {"type", "n", "axis_start", "custom_times", "custom_axes", "t_us", "label", "initial_state", "sweep"},
                   "sequence");
    SequenceSpec s;
    if (!j.contains("type") || !j["type"].is_string()) throw ConfigError("sequence.type: required string");
    s.type = sequence_type_from_string(j["type"].get<std::string>());

    if (j.contains("n")) {
        if (!j["n"].is_number_integer()) throw ConfigError("sequence.n: expected an integer");
        s.n = j["n"].get<int>();
    }
    if (j.contains("axis_start")) {
        const auto a = j["axis_start"].is_string() ? j["axis_start"].get<std::string>() : std::string{};
        if (a == "X" || a == "x") s.axis_start = sequences::Axis::X;
        else if (a == "Y" || a == "y") s.axis_start = sequences::Axis::Y;
        else throw ConfigError("sequence.axis_start: expected \"X\" or \"Y\"");
    }
    if (s.type == SequenceType::Ramsey) s.n = 0;
    if (s.type == SequenceType::SpinEcho) s.n = 1;
    if (s.type == SequenceType::Custom) {
        if (!j.contains("custom_times") || !j["custom_times"].is_array())
            throw ConfigError("sequence.custom_times: required array for type custom");
        for (const auto& v : j["custom_times"]) {
            if (!v.is_number()) throw ConfigError("sequence.custom_times: expected numbers");
            const double f = v.get<double>();
            if (!(f > 0.0 && f < 1.0)) throw ConfigError(fmt::format("sequence.custom_times: {} is not in (0, 1)", f));
            s.custom_times.push_back(f);
        }
        if (j.contains("custom_axes")) {
            if (!j["custom_axes"].is_array() || j["custom_axes"].size() != s.custom_times.size())
                throw ConfigError("sequence.custom_axes: must be an array matching custom_times");
            for (std::size_t k = 0; k < j["custom_axes"].size(); ++k) s.custom_axes.push_back(axis_from_json(j["custom_axes"][k], k));
        } else {
            s.custom_axes.assign(s.custom_times.size(), sequences::kAxisX);
        }
        for (std::size_t k = 1; k < s.custom_times.size(); ++k)
            if (!(s.custom_times[k] > s.custom_times[k - 1]))
                throw ConfigError("sequence.custom_times: must be strictly increasing");
        s.n = static_cast<int>(s.custom_times.size());
    } else if (j.contains("custom_times") || j.contains("custom_axes")) {
        throw ConfigError("sequence: custom_times/custom_axes only allowed with type custom");
    } else if (s.type != SequenceType::Ramsey && s.n < 1) {
        throw ConfigError(fmt::format("sequence.n: must be >= 1, got {}", s.n));
    }
    return s;
}

json to_json(const SequenceSpec& s)
{
    json j;
    j["type"] = to_string(s.type);
    j["n"] = s.n;
    j["axis_start"] = s.axis_start == sequences::Axis::X ? "X" : "Y";
    if (s.type == SequenceType::Custom) {
        j["custom_times"] = s.custom_times;
        j["custom_axes"] = s.custom_axes;
    }
    return j;
}

json sequence_to_json(const SequenceSpec& s, double t_us)
{
    json j = to_json(s);
    j["t_us"] = t_us;
    return j;
}

PulseSequence sequence_from_json(const json& j)
{
    const auto spec = sequence_spec_from_json(j);
    if (!j.contains("t_us") || !j["t_us"].is_number()) throw ConfigError("sequence.t_us: required number");
    const double t = j["t_us"].get<double>();
    if (!(t > 0.0)) throw ConfigError("sequence.t_us: must be positive");
    return spec.build(t);
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

void write_curve_csv(std::ostream& os, const fitting::DecayCurve& curve)
{
    os << "t_us,value,std_error\n";
    for (const auto& p : curve.points)
        os << format_number(p.t) << ',' << format_number(p.value) << ',' << format_number(p.std_error) << '\n';
}

void write_curve_csv(const std::filesystem::path& path, const fitting::DecayCurve& curve)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_curve_csv(os, curve);
}

fitting::DecayCurve read_curve_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("decay curve CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_us,value,std_error")
        throw std::invalid_argument("decay curve CSV: expected header 't_us,value,std_error', got '" + line + "'");
    fitting::DecayCurve curve;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::array<double, 3> v{};
        for (std::size_t k = 0; k < 3; ++k) {
            if (!std::getline(ls, cell, ','))
                throw std::invalid_argument(fmt::format("decay curve CSV line {}: expected 3 columns", lineno));
            try {
                std::size_t used = 0;
                v[k] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw std::invalid_argument(fmt::format("decay curve CSV line {}: bad number '{}'", lineno, cell));
            }
        }
        if (std::getline(ls, cell, ','))
            throw std::invalid_argument(fmt::format("decay curve CSV line {}: too many columns", lineno));
        curve.points.push_back({v[0], v[1], v[2]});
    }
    curve.check();
    return curve;
}

fitting::DecayCurve read_curve_csv(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::invalid_argument("cannot read " + path.string());
    return read_curve_csv(is);
}

json to_json(const fitting::FitResult& r)
{
    json j;
    j["params"] = r.params;
    j["std_errors"] = r.std_errors;
    j["residual"] = r.residual;
    j["reduced_chi2"] = r.reduced_chi2;
    j["dof"] = r.dof;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    return j;
}

json chi_to_json(const Eigen::Matrix4cd& chi)
{
    json rows = json::array();
    for (int m = 0; m < 4; ++m) {
        json row = json::array();
        for (int n = 0; n < 4; ++n) row.push_back(json::array({chi(m, n).real(), chi(m, n).imag()}));
        rows.push_back(row);
    }
    return rows;
}

Eigen::Matrix4cd chi_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 4) throw std::invalid_argument("chi: expected 4 rows");
    Eigen::Matrix4cd chi;
    for (int m = 0; m < 4; ++m) {
        const auto& row = j[static_cast<std::size_t>(m)];
        if (!row.is_array() || row.size() != 4) throw std::invalid_argument("chi: expected 4 columns");
        for (int n = 0; n < 4; ++n) {
            const auto& e = row[static_cast<std::size_t>(n)];
            if (!e.is_array() || e.size() != 2) throw std::invalid_argument("chi: expected [re, im] pairs");
            chi(m, n) = {e[0].get<double>(), e[1].get<double>()};
        }
    }
    return chi;
}

json std_error_to_json(const Eigen::Matrix4d& re, const Eigen::Matrix4d& im)
{
    json rows = json::array();
    for (int m = 0; m < 4; ++m) {
        json row = json::array();
        for (int n = 0; n < 4; ++n) row.push_back(json::array({re(m, n), im(m, n)}));
        rows.push_back(row);
    }
    return rows;
}

void write_chi_magnitude_csv(const std::filesystem::path& path, const Eigen::Matrix4cd& chi)
{
    static constexpr const char* labels[4] = {"I", "X", "Y", "Z"};
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "row,I,X,Y,Z\n";
    for (int m = 0; m < 4; ++m) {
        os << labels[m];
        for (int n = 0; n < 4; ++n) os << ',' << format_number(std::abs(chi(m, n)));
        os << '\n';
    }
}

void write_json(const std::filesystem::path& path, const json& j)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

} // namespace decoupler::io
