#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evuas/catalog.hpp"
#include "evuas/norms.hpp"
#include "evuas/synthesis.hpp"

namespace evuas {

// Scenario document does not match the schema. `path` names the field, e.g. "run.eps_levels[2]".
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// A pipeline stage failed; `stage` is one of classify, synthesize, simulate, verify.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

enum class SystemKind { kError, kClosedLoop, kTracking };

struct Scenario {
  std::string name;
  std::string description;
  SystemKind system = SystemKind::kError;

  struct Model {
    std::string name = "chain";
    std::size_t m = 1;
    std::size_t n = 2;
    Params params;
  } model;

  struct PerturbationRef {
    std::string name = "zero";
    Params params;
  } perturbation;

  struct Design {
    std::string controller = "implicit";  // "implicit" or "linear"
    std::vector<PoleSet> poles;           // per column, n-1 each
    std::optional<Eigen::MatrixXd> a_h;   // empty: -I
    PoleSet placement_poles;              // linear controller, mn poles
  } design;

  std::string tracking = "zero";

  struct Run {
    double t0 = 0.0;
    double t_end = 10.0;
    double tol = 1e-8;
    double sample_dt = 0.01;
    std::vector<double> initial;
    std::size_t samples = 8;
    std::uint64_t seed = 1;
    std::vector<double> eps_levels{0.5, 0.2, 0.1};
    double delta0 = 1.0;
    std::vector<double> t0_grid{0.0};
    double horizon = 10.0;
    double profile_horizon = 8.0;
    double probe_radius = 1.0;
    std::size_t threads = 0;
    Norm norm = Norm::kEuclidean;
  } run;

  std::vector<std::string> stages;
  std::string output_dir;           // empty: chosen by the caller
  std::set<std::string> formats{"csv", "json"};

  // Number of state components of the simulated system (m for error dynamics, mn otherwise).
  std::size_t state_dim() const;
  std::size_t channels() const;
};

// Throws SchemaError with the offending field path.
Scenario parse_scenario(const nlohmann::json& doc);

struct CatalogScenario {
  std::string name;
  std::string description;
  nlohmann::json document;
  std::string source;  // "builtin" or the file path
};

const std::vector<CatalogScenario>& bundled_scenarios();
// Built-ins plus every *.json in the given directories (sorted by file name).
std::vector<CatalogScenario> list_scenarios(const std::vector<std::filesystem::path>& extra_dirs);
// Resolves a file path or a catalog name.
nlohmann::json load_scenario(const std::string& ref, const std::vector<std::filesystem::path>& extra_dirs);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<Norm> norm;
  std::optional<std::set<std::string>> formats;
  std::optional<std::vector<std::string>> stages;
};

// Applies CLI overrides to the document before validation.
nlohmann::json apply_overrides(nlohmann::json doc, const Overrides& o);

struct Artifact {
  std::string file;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunResult {
  std::vector<Artifact> artifacts;
  std::filesystem::path manifest;
  nlohmann::json summary;
};

// Executes the declared stages in pipeline order and writes artifacts plus
// manifest.json. Throws StageError; the manifest is written only on success.
RunResult run_scenario(const nlohmann::json& doc, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

}  // namespace evuas
