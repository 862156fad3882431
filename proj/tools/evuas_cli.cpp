#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "evuas/catalog.hpp"
#include "evuas/io.hpp"
#include "evuas/scenario.hpp"
#include "evuas/signals.hpp"
#include "evuas/simd/kernels.hpp"

namespace {

std::vector<std::filesystem::path> scenario_dirs(const std::vector<std::string>& flags) {
  std::vector<std::filesystem::path> dirs;
  if (const char* env = std::getenv("EVUAS_SCENARIO_PATH")) {
    std::stringstream ss(env);
    std::string item;
    while (std::getline(ss, item, ':'))
      if (!item.empty()) dirs.emplace_back(item);
  }
  for (const auto& f : flags) dirs.emplace_back(f);
  return dirs;
}

struct Common {
  std::string scenario;
  std::string out;
  std::vector<std::string> dirs;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::string norm;
  std::vector<std::string> formats;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("scenario", c.scenario, "Scenario file or catalog name")->required();
  cmd->add_option("--out", c.out, "Output directory (default: outputs.directory or evuas-out/<name>)");
  cmd->add_option("--seed", c.seed, "Override run.seed");
  cmd->add_option("--tol", c.tol, "Override run.tol");
  cmd->add_option("--norm", c.norm, "Override run.norm")->check(CLI::IsMember({"euclidean", "inf"}));
  cmd->add_option("--format", c.formats, "Artifact formats (repeatable or comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"csv", "svg", "json"}));
  cmd->add_option("--scenario-dir", c.dirs, "Extra scenario directory (repeatable)");
}

int execute(const Common& c, std::optional<std::vector<std::string>> stages) {
  try {
    evuas::Overrides o;
    o.seed = c.seed;
    o.tol = c.tol;
    if (!c.norm.empty()) o.norm = evuas::parse_norm(c.norm);
    if (!c.formats.empty()) o.formats = std::set<std::string>(c.formats.begin(), c.formats.end());
    o.stages = std::move(stages);
    const auto doc = evuas::apply_overrides(evuas::load_scenario(c.scenario, scenario_dirs(c.dirs)), o);
    const evuas::Scenario sc = evuas::parse_scenario(doc);
    std::filesystem::path out = c.out;
    if (out.empty()) out = sc.output_dir.empty() ? std::filesystem::path("evuas-out") / sc.name : std::filesystem::path(sc.output_dir);
    const auto res = evuas::run_scenario(doc, out, &std::cerr);
    for (const auto& a : res.artifacts) std::cout << (out / a.file).string() << '\n';
    std::cout << res.manifest.string() << '\n';
    if (!res.summary.empty()) std::cerr << res.summary.dump(2) << '\n';
    return 0;
  } catch (const evuas::SchemaError& e) {
    std::cerr << "schema error at " << e.path() << ": " << e.what() << '\n';
    return 2;
  } catch (const evuas::StageError& e) {
    std::cerr << "stage " << e.stage() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

void print_list(const std::vector<std::string>& dirs) {
  auto section = [](const char* title, const auto& entries) {
    std::cout << title << ":\n";
    for (const auto& e : entries) std::cout << "  " << e.name << "  " << e.description << '\n';
  };
  section("models", evuas::model_catalog());
  section("perturbations", evuas::perturbation_catalog());
  section("signals", evuas::signal_catalog());
  section("tracking references", evuas::tracking_catalog());
  std::cout << "scenarios:\n";
  for (const auto& s : evuas::list_scenarios(scenario_dirs(dirs)))
    std::cout << "  " << s.name << "  " << s.description << (s.source == "builtin" ? "" : "  [" + s.source + "]")
              << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eventual uniform asymptotic stability toolkit: classify perturbations, synthesize feedback, "
               "simulate and verify."};
  app.require_subcommand(1);
  std::string simd = "auto";
  app.add_option("--simd", simd, "Kernel backend")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  std::vector<std::string> list_dirs;
  auto* list = app.add_subcommand("list", "Print the model, perturbation and scenario catalogs");
  list->add_option("--scenario-dir", list_dirs, "Extra scenario directory (repeatable)");

  Common run_opts, stage_opts[4];
  auto* run = app.add_subcommand("run", "Run every stage declared by a scenario");
  add_common(run, run_opts);
  const char* stage_names[4] = {"classify", "synthesize", "simulate", "verify"};
  const char* stage_help[4] = {"Classify the scenario's perturbation (windowed-integral profile)",
                               "Synthesize the scenario's controller", "Simulate the scenario's system",
                               "Monte-Carlo EvUS/EvUA verification"};
  CLI::App* stage_cmds[4];
  for (int i = 0; i < 4; ++i) {
    stage_cmds[i] = app.add_subcommand(stage_names[i], stage_help[i]);
    add_common(stage_cmds[i], stage_opts[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simd == "scalar") evuas::simd::set_backend(evuas::simd::Backend::kScalar);
    if (simd == "avx2") evuas::simd::set_backend(evuas::simd::Backend::kAvx2);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  if (*list) {
    print_list(list_dirs);
    return 0;
  }
  if (*run) return execute(run_opts, std::nullopt);
  for (int i = 0; i < 4; ++i)
    if (*stage_cmds[i]) return execute(stage_opts[i], std::vector<std::string>{stage_names[i]});
  return 2;
}
