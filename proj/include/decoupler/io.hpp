// io.hpp - file formats: sequence JSON, decay-curve CSV, fit and χ serialization

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "decoupler/fitting.hpp"
#include "decoupler/sequences.hpp"
#include "decoupler/tomography.hpp"

namespace decoupler::io {

using json = nlohmann::ordered_json;

enum class SequenceType { Ramsey, SpinEcho, Cpmg, Udd, Xy, Custom };

// Duration-independent description of a sequence family. Custom pulse times
// are fractions of the total duration, in (0, 1).
struct SequenceSpec {
    SequenceType type = SequenceType::Cpmg;
    int n = 1;
    sequences::Axis axis_start = sequences::Axis::X;
    std::vector<double> custom_times;
    std::vector<double> custom_axes;  // azimuths, rad

    sequences::PulseSequence build(double t) const;
    std::string default_label() const;
};

const char* to_string(SequenceType t);
SequenceType sequence_type_from_string(const std::string& s);

// {type, n, axis_start, custom_times?, custom_axes?}; throws ConfigError.
SequenceSpec sequence_spec_from_json(const json& j);
json to_json(const SequenceSpec& s);

// Standalone sequence description {type, n, t_us, ...}.
json sequence_to_json(const SequenceSpec& s, double t_us);
sequences::PulseSequence sequence_from_json(const json& j);

// CSV with header t_us,value,std_error; values printed with round-trip precision.
void write_curve_csv(std::ostream& os, const fitting::DecayCurve& curve);
void write_curve_csv(const std::filesystem::path& path, const fitting::DecayCurve& curve);
fitting::DecayCurve read_curve_csv(std::istream& is);
fitting::DecayCurve read_curve_csv(const std::filesystem::path& path);

json to_json(const fitting::FitResult& r);

// 4×4 row-major array of [re, im] pairs.
json chi_to_json(const Eigen::Matrix4cd& chi);
Eigen::Matrix4cd chi_from_json(const json& j);
json std_error_to_json(const Eigen::Matrix4d& re, const Eigen::Matrix4d& im);
// Element magnitudes with row/column Pauli labels.
void write_chi_magnitude_csv(const std::filesystem::path& path, const Eigen::Matrix4cd& chi);

void write_json(const std::filesystem::path& path, const json& j);

// Round-trip decimal representation used in every CSV cell.
std::string format_number(double v);

} // namespace decoupler::io
