#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "evuas/diminishing.hpp"
#include "evuas/integrator.hpp"
#include "evuas/synthesis.hpp"
#include "evuas/verifier.hpp"

namespace evuas::io {

using nlohmann::json;

// 17 significant digits, '.' separator, "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double v);

// RFC 4180: fields with ',', '"', CR or LF are quoted; rows end in CRLF.
std::string csv_field(std::string_view s);
std::string csv_row(const std::vector<std::string>& fields);

// Header t, <prefix>_1..<prefix>_k, u_1..u_m (closed loop only), norm.
std::string trajectory_csv(const Trajectory& traj, std::string_view state_prefix = "x");
// Header t, value, quad_error, partial[, bound].
std::string profile_csv(const WindowMetricProfile& profile, const std::function<double(double)>& bound = {});

json to_json(const TrajectoryDiagnostics& d);
json to_json(const GammaDesign& d);
json to_json(const HurwitzMatrix& h);
json to_json(const Controller& c);
json to_json(const StabilityReport& r);
json to_json(const KlEnvelope& e);
json to_json(const RoaEstimate& r);
json to_json(const PerturbationClassification& c);
json to_json(const WindowMetricProfile& p);
json to_json(const CoercivityProbe& p);
json to_json(const PlacementReport& p);

struct Series {
  std::string name;
  std::vector<double> y;
};

// Static line plot; `log_y` plots log10 of positive values.
std::string svg_line_plot(const std::string& title, const std::vector<double>& x, const std::vector<Series>& series,
                          bool log_y = false);

std::string sha256_hex(std::string_view data);

// Writes bytes exactly (binary mode), creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace evuas::io
