#include "evuas/scenario.hpp"

#include <openssl/opensslv.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>

#include "evuas/diminishing.hpp"
#include "evuas/errors.hpp"
#include "evuas/io.hpp"
#include "evuas/signals.hpp"
#include "evuas/simd/kernels.hpp"
#include "evuas/simulator.hpp"
#include "evuas/verifier.hpp"

#ifndef EVUAS_VERSION
#define EVUAS_VERSION "dev"
#endif

namespace evuas {

using nlohmann::json;

namespace {

const std::vector<std::string> kStageOrder{"classify", "synthesize", "simulate", "verify"};

// ---- schema helpers --------------------------------------------------------

std::string key_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string index_path(const std::string& parent, std::size_t i) { return parent + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw SchemaError(key_path(path, k), "unknown field");
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "must be finite");
  return v;
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

std::uint64_t as_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<std::int64_t>() < 0))
    throw SchemaError(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::vector<double> as_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], index_path(path, i)));
  return out;
}

Complex as_pole(const json& j, const std::string& path) {
  if (j.is_number()) return {as_number(j, path), 0.0};
  if (j.is_array() && j.size() == 2) return {as_number(j[0], index_path(path, 0)), as_number(j[1], index_path(path, 1))};
  throw SchemaError(path, "a pole is a number or a [re, im] pair");
}

PoleSet as_poles(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of poles");
  PoleSet out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_pole(j[i], index_path(path, i)));
  return out;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = as_numbers(j[i], index_path(path, i));
    if (i == 0) {
      cols = row.size();
      if (cols == 0) throw SchemaError(index_path(path, 0), "row is empty");
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      throw SchemaError(index_path(path, i), "rows have different lengths");
    }
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

Params as_params(const json& j, const std::string& path) {
  require_object(j, path);
  Params p;
  for (const auto& [k, v] : j.items()) p[k] = as_number(v, key_path(path, k));
  return p;
}

void check_range(double v, double lo, double hi, const std::string& path, const char* what) {
  if (!(v >= lo && v <= hi)) throw SchemaError(path, std::string("must be ") + what);
}

// ---- bundled scenarios -----------------------------------------------------

json example1_a_h() { return json::array({json::array({-1.0, 2.0}), json::array({0.0, -1.5})}); }

std::vector<CatalogScenario> build_bundled() {
  std::vector<CatalogScenario> out;
  auto add = [&](json doc) {
    out.push_back({doc["name"].get<std::string>(), doc["description"].get<std::string>(), doc, "builtin"});
  };
  add({{"name", "example1_unbounded"},
       {"description", "Error dynamics, A_H = [[-1, 2], [0, -1.5]], with W(t) = (0.5 t sin t^4, -t cos t^4), E(0) = (-1, 1.5)"},
       {"system", "error"},
       {"design", {{"a_h", example1_a_h()}}},
       {"perturbation", "example1_unbounded"},
       {"run", {{"t_end", 20.0}, {"tol", 1e-8}, {"sample_dt", 0.005}, {"initial", {-1.0, 1.5}}, {"profile_horizon", 8.0}}},
       {"stages", {"classify", "synthesize", "simulate"}},
       {"outputs", {{"formats", {"csv", "json", "svg"}}}}});
  add({{"name", "example1_bounded"},
       {"description", "Error dynamics, A_H = [[-1, 2], [0, -1.5]], with W(t,E) = (-e2 sin e^t, 2(e1^(1/3) + e2 + 1) cos e^t)"},
       {"system", "error"},
       {"design", {{"a_h", example1_a_h()}}},
       {"perturbation", "example1_bounded"},
       {"run",
        {{"t_end", 10.0},
         {"tol", 1e-8},
         {"sample_dt", 0.005},
         {"initial", {-1.0, 1.5}},
         {"profile_horizon", 8.0},
         {"eps_levels", {0.5, 0.35}},
         {"delta0", 0.5},
         {"t0_grid", {0.0, 1.0, 2.0, 4.0}},
         {"horizon", 8.0},
         {"samples", 4}}},
       {"stages", {"classify", "synthesize", "simulate", "verify"}},
       {"outputs", {{"formats", {"csv", "json", "svg"}}}}});
  add({{"name", "remark1_bounds"},
       {"description", "Windowed-integral profile of cos(e^t) against the bound 4 e^-t on t = 0..8"},
       {"system", "error"},
       {"design", {{"a_h", json::array({json::array({-1.0})})}}},
       {"perturbation", "cos_exp"},
       {"run", {{"profile_horizon", 9.0}}},
       {"stages", {"classify"}},
       {"outputs", {{"formats", {"csv", "json", "svg"}}}}});
  add({{"name", "remark1_unbounded_profile"},
       {"description", "Windowed-integral profile of the unbounded t cos(t^4) on t = 0..10"},
       {"system", "error"},
       {"design", {{"a_h", json::array({json::array({-1.0})})}}},
       {"perturbation", "t_cos_t4"},
       {"run", {{"profile_horizon", 11.0}}},
       {"stages", {"classify"}},
       {"outputs", {{"formats", {"csv", "json", "svg"}}}}});
  add({{"name", "tracking_demo"},
       {"description", "Chain model tracking Y_d = sin t from Delta(0) = (0.3, 0) under 0.5 cos(e^t)"},
       {"system", "tracking"},
       {"model", {{"name", "chain"}, {"m", 1}, {"n", 2}}},
       {"perturbation", {{"name", "cos_exp"}, {"params", {{"scale", 0.5}}}}},
       {"tracking", "sin"},
       {"design", {{"poles", json::array({json::array({-1.0})})}}},
       {"run", {{"t_end", 10.0}, {"tol", 1e-9}, {"sample_dt", 0.01}, {"initial", {0.3, 0.0}}}},
       {"stages", {"synthesize", "simulate"}},
       {"outputs", {{"formats", {"csv", "json", "svg"}}}}});
  add({{"name", "pole_placement_demo"},
       {"description", "Double integrator, linear gain placing poles {-1, -1}, X(0) = (0.5, 0)"},
       {"system", "closed_loop"},
       {"model", {{"name", "chain"}, {"m", 1}, {"n", 2}}},
       {"perturbation", "zero"},
       {"design", {{"controller", "linear"}, {"placement_poles", {-1.0, -1.0}}}},
       {"run", {{"t_end", 20.0}, {"tol", 1e-9}, {"sample_dt", 0.01}, {"initial", {0.5, 0.0}}}},
       {"stages", {"synthesize", "simulate"}},
       {"outputs", {{"formats", {"csv", "json", "svg"}}}}});
  add({{"name", "closed_loop_cos_exp"},
       {"description", "Chain model under the implicit feedback with W = cos(e^t), X(0) = (0.5, 0)"},
       {"system", "closed_loop"},
       {"model", {{"name", "chain"}, {"m", 1}, {"n", 2}}},
       {"perturbation", "cos_exp"},
       {"design", {{"poles", json::array({json::array({-1.0})})}}},
       {"run",
        {{"t_end", 10.0},
         {"tol", 1e-8},
         {"sample_dt", 0.01},
         {"initial", {0.5, 0.0}},
         {"eps_levels", {0.5, 0.25}},
         {"delta0", 0.5},
         {"t0_grid", {0.0, 1.0, 2.0, 4.0}},
         {"horizon", 4.0},
         {"samples", 4}}},
       {"stages", {"synthesize", "simulate", "verify"}},
       {"outputs", {{"formats", {"csv", "json"}}}}});
  add({{"name", "converse_constant"},
       {"description", "A_H = [[-1, 2], [0, -1.5]] with the non-diminishing W = (1, 0): never attracting"},
       {"system", "error"},
       {"design", {{"a_h", example1_a_h()}}},
       {"perturbation", "const_1_0"},
       {"run",
        {{"t_end", 20.0},
         {"tol", 1e-9},
         {"sample_dt", 0.01},
         {"initial", {-1.0, 1.5}},
         {"eps_levels", {0.5, 0.2, 0.1}},
         {"delta0", 1.0},
         {"t0_grid", {0.0, 1.0, 2.0, 4.0}},
         {"horizon", 20.0},
         {"samples", 8}}},
       {"stages", {"simulate", "verify"}},
       {"outputs", {{"formats", {"csv", "json"}}}}});
  return out;
}

// ---- pipeline --------------------------------------------------------------

// SOURCE_DATE_EPOCH pins the manifest time for reproducible builds.
std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end != epoch && *end == '\0' && v >= 0) now = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<double> sample_grid(double t0, double t_end, double dt) {
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((t_end - t0) / dt - 1e-9)));
  return uniform_samples(t0, t_end, n);
}

class Pipeline {
 public:
  Pipeline(Scenario sc, std::filesystem::path out, std::ostream* log)
      : sc_(std::move(sc)), out_(std::move(out)), log_(log) {}

  void run_stage(const std::string& stage) {
    note("stage " + stage);
    if (stage == "classify") classify_stage();
    if (stage == "synthesize") synthesize_stage(true);
    if (stage == "simulate") simulate_stage();
    if (stage == "verify") verify_stage();
  }

  std::vector<Artifact>& artifacts() { return artifacts_; }
  json& summary() { return summary_; }

 private:
  bool wants(const char* fmt) const { return sc_.formats.count(fmt) > 0; }

  void note(const std::string& msg) {
    if (log_) *log_ << "[" << sc_.name << "] " << msg << '\n';
  }

  void emit(const std::string& file, const std::string& content) {
    io::write_file(out_ / file, content);
    artifacts_.push_back({file, io::sha256_hex(content), content.size()});
  }
  void emit_json(const std::string& file, const json& j) { emit(file, j.dump(2) + "\n"); }

  Perturbation perturbation() const {
    return make_perturbation(sc_.perturbation.name, sc_.channels(), sc_.perturbation.params);
  }

  HurwitzMatrix hurwitz() const {
    return sc_.design.a_h ? build_hurwitz(*sc_.design.a_h) : default_hurwitz(sc_.channels());
  }

  std::function<double(double)> analytic_bound() const {
    const auto sig = find_signal(sc_.perturbation.name);
    if (!sig || !sig->analytic_bound) return {};
    const auto it = sc_.perturbation.params.find("scale");
    const double scale = it == sc_.perturbation.params.end() ? 1.0 : std::abs(it->second);
    return [b = sig->analytic_bound, scale](double t) { return scale * b(t); };
  }

  void classify_stage() {
    ClassifyOptions opts;
    opts.seed = sc_.run.seed;
    opts.threads = sc_.run.threads;
    opts.window.norm = sc_.run.norm;
    const auto c = classify(perturbation(), sc_.state_dim(), sc_.run.probe_radius, sc_.run.profile_horizon, opts);
    if (wants("json")) emit_json("classification.json", io::to_json(c));
    const auto bound = analytic_bound();
    for (std::size_t j = 0; j < c.column_profiles.size(); ++j) {
      const auto& p = c.column_profiles[j];
      const std::string stem = "profile_" + std::to_string(j + 1);
      if (wants("csv")) emit(stem + ".csv", io::profile_csv(p, bound));
      if (wants("svg")) {
        std::vector<io::Series> s{{"window sup", p.values}};
        if (bound) {
          std::vector<double> b;
          for (double t : p.t_grid) b.push_back(bound(t));
          s.push_back({"analytic bound", b});
        }
        emit(stem + ".svg", io::svg_line_plot(sc_.name + ": windowed-integral profile", p.t_grid, s, true));
      }
    }
    summary_["classify"] = {{"diminishing_evidence", to_string(c.diminishing_evidence)},
                            {"vanishing_at_x0", to_string(c.vanishing_at_x0)},
                            {"vanishing_at_tinf", to_string(c.vanishing_at_tinf)}};
  }

  void synthesize_stage(bool write) {
    if (synthesized_) return;
    synthesized_ = true;
    if (sc_.system == SystemKind::kError) {
      hurwitz_ = hurwitz();
      json d{{"hurwitz", io::to_json(*hurwitz_)}};
      if (!sc_.design.poles.empty()) d["gamma"] = io::to_json(build_gamma(sc_.design.poles, sc_.model.n, sc_.run.norm));
      if (write && wants("json")) emit_json("design.json", d);
      return;
    }
    const SystemModel model = make_model(sc_.model.name, sc_.model.m, sc_.model.n, sc_.model.params);
    json doc;
    if (sc_.design.controller == "linear") {
      PlacementReport rep = place_poles(model, sc_.design.placement_poles);
      if (rep.charpoly_error > 1e-8)
        throw DesignError("placement missed the requested characteristic polynomial by " +
                          std::to_string(rep.charpoly_error));
      controller_ = Controller::linear(std::make_shared<const SystemModel>(model), rep.gain);
      doc = io::to_json(*controller_);
      doc["placement"] = io::to_json(rep);
    } else {
      GammaDesign g = build_gamma(sc_.design.poles, sc_.model.n, sc_.run.norm);
      controller_ = synthesize_feedback(model, std::move(g), hurwitz());
      doc = io::to_json(*controller_);
      std::vector<Eigen::VectorXd> samples{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sc_.state_dim()))};
      if (!sc_.run.initial.empty())
        samples.push_back(Eigen::Map<const Eigen::VectorXd>(sc_.run.initial.data(),
                                                            static_cast<Eigen::Index>(sc_.run.initial.size())));
      doc["coercivity"] = io::to_json(coercivity_probe(model, samples, 8, {1e-2, 1.0, 1e2, 1e4}, sc_.run.seed));
    }
    if (write && wants("json")) emit_json("controller.json", doc);
  }

  std::function<Trajectory(double, const Eigen::VectorXd&, double)> factory() {
    synthesize_stage(false);
    SimulationOptions base;
    base.tol = sc_.run.tol;
    base.norm = sc_.run.norm;
    const double dt = sc_.run.sample_dt;
    const Perturbation pert = perturbation();
    switch (sc_.system) {
      case SystemKind::kError:
        return [h = *hurwitz_, pert, base, dt](double t0, const Eigen::VectorXd& x0, double t1) {
          SimulationOptions o = base;
          o.sample_times = sample_grid(t0, t1, dt);
          return simulate_error_dynamics(h, pert, x0, t0, t1, o);
        };
      case SystemKind::kClosedLoop:
        return [c = *controller_, pert, base, dt](double t0, const Eigen::VectorXd& x0, double t1) {
          SimulationOptions o = base;
          o.sample_times = sample_grid(t0, t1, dt);
          return simulate_closed_loop(c, pert, x0, t0, t1, o);
        };
      case SystemKind::kTracking: {
        const TrackingSpec spec = make_tracking(sc_.tracking, sc_.model.m, sc_.model.n);
        return [c = *controller_, spec, pert, base, dt](double t0, const Eigen::VectorXd& x0, double t1) {
          SimulationOptions o = base;
          o.sample_times = sample_grid(t0, t1, dt);
          return simulate_tracking(c, spec, pert, x0, t0, t1, o);
        };
      }
    }
    throw std::logic_error("unreachable");
  }

  void simulate_stage() {
    auto sim = factory();
    const Eigen::VectorXd x0 =
        Eigen::Map<const Eigen::VectorXd>(sc_.run.initial.data(), static_cast<Eigen::Index>(sc_.run.initial.size()));
    const Trajectory traj = sim(sc_.run.t0, x0, sc_.run.t_end);
    const char* prefix = sc_.system == SystemKind::kError ? "e" : (sc_.system == SystemKind::kTracking ? "delta" : "x");
    const double tail_from = sc_.run.t_end - 0.1 * (sc_.run.t_end - sc_.run.t0);
    const json s{{"terminal_norm", traj.state_norm(traj.size() - 1)},
                 {"sup_norm_final_10pct", traj.sup_norm_after(tail_from)},
                 {"samples", traj.size()},
                 {"norm", std::string(to_string(traj.norm))}};
    if (wants("csv")) emit("trajectory.csv", io::trajectory_csv(traj, prefix));
    if (wants("json")) emit_json("trajectory.json", {{"summary", s}, {"diagnostics", io::to_json(traj.diagnostics)}});
    if (wants("svg")) {
      std::vector<io::Series> comps;
      for (Eigen::Index i = 0; i < traj.states.front().size(); ++i) {
        std::vector<double> y;
        for (const auto& st : traj.states) y.push_back(st[i]);
        comps.push_back({std::string(prefix) + "_" + std::to_string(i + 1), y});
      }
      emit("trajectory.svg", io::svg_line_plot(sc_.name + ": state components", traj.times, comps));
      emit("trajectory_norm.svg",
           io::svg_line_plot(sc_.name + ": state norm", traj.times, {{"norm", traj.state_norms()}}, true));
    }
    summary_["simulate"] = s;
  }

  void verify_stage() {
    auto sim = factory();
    VerifyOptions v;
    v.dim = sc_.state_dim();
    v.delta0 = sc_.run.delta0;
    v.t0_grid = sc_.run.t0_grid;
    v.eps_levels = sc_.run.eps_levels;
    v.horizon = sc_.run.horizon;
    v.samples = sc_.run.samples;
    v.seed = sc_.run.seed;
    v.threads = sc_.run.threads;
    v.norm = sc_.run.norm;
    const StabilityReport rep = verify_evuas(sim, v);
    json doc = io::to_json(rep);
    if (sc_.run.delta0 > 0.0) {
      std::vector<Trajectory> trajs;
      const double t0 = *std::min_element(sc_.run.t0_grid.begin(), sc_.run.t0_grid.end());
      for (const auto& d : sphere_directions(v.dim, sc_.run.samples, sc_.run.seed + 1)) {
        try {
          Trajectory tr = sim(t0, sc_.run.delta0 * d, t0 + sc_.run.horizon);
          tr.norm = sc_.run.norm;
          trajs.push_back(std::move(tr));
        } catch (const std::exception&) {
        }
      }
      if (!trajs.empty()) {
        const KlEnvelope env = fit_kl_envelope(trajs);
        doc["kl_envelope"] = io::to_json(env);
        doc["kl_envelope"]["holds_on_fit_set"] = envelope_holds(env, trajs);
      }
    }
    if (wants("json")) emit_json("verify_report.json", doc);
    summary_["verify"] = {{"evus", to_string(rep.evus)}, {"evua", to_string(rep.evua)}, {"evuas", to_string(rep.evuas)}};
  }

  Scenario sc_;
  std::filesystem::path out_;
  std::ostream* log_;
  std::vector<Artifact> artifacts_;
  json summary_ = json::object();
  bool synthesized_ = false;
  std::optional<HurwitzMatrix> hurwitz_;
  std::optional<Controller> controller_;
};

}  // namespace

std::size_t Scenario::channels() const {
  if (system == SystemKind::kError) return design.a_h ? static_cast<std::size_t>(design.a_h->rows()) : model.m;
  return model.m;
}

std::size_t Scenario::state_dim() const { return system == SystemKind::kError ? channels() : model.m * model.n; }

Scenario parse_scenario(const json& doc) {
  require_object(doc, "");
  allow_keys(doc, "",
             {"name", "description", "system", "model", "perturbation", "design", "tracking", "run", "stages", "outputs"});
  Scenario sc;
  if (!doc.contains("name")) throw SchemaError("name", "required field is missing");
  sc.name = as_string(doc["name"], "name");
  if (sc.name.empty() || sc.name.find_first_of("/\\") != std::string::npos)
    throw SchemaError("name", "must be a non-empty name without path separators");
  if (doc.contains("description")) sc.description = as_string(doc["description"], "description");

  if (doc.contains("system")) {
    const std::string s = as_string(doc["system"], "system");
    if (s == "error")
      sc.system = SystemKind::kError;
    else if (s == "closed_loop")
      sc.system = SystemKind::kClosedLoop;
    else if (s == "tracking")
      sc.system = SystemKind::kTracking;
    else
      throw SchemaError("system", "must be one of error, closed_loop, tracking");
  }

  if (doc.contains("model")) {
    const json& m = doc["model"];
    require_object(m, "model");
    allow_keys(m, "model", {"name", "m", "n", "params"});
    if (m.contains("name")) sc.model.name = as_string(m["name"], "model.name");
    if (m.contains("m")) sc.model.m = as_count(m["m"], "model.m");
    if (m.contains("n")) sc.model.n = as_count(m["n"], "model.n");
    if (m.contains("params")) sc.model.params = as_params(m["params"], "model.params");
  }
  if (sc.model.m < 1 || sc.model.m > 16) throw SchemaError("model.m", "must be in [1, 16]");
  if (sc.model.n < 2 || sc.model.n > 16) throw SchemaError("model.n", "must be in [2, 16]");

  if (doc.contains("perturbation")) {
    const json& p = doc["perturbation"];
    if (p.is_string()) {
      sc.perturbation.name = p.get<std::string>();
    } else {
      require_object(p, "perturbation");
      allow_keys(p, "perturbation", {"name", "params"});
      if (!p.contains("name")) throw SchemaError("perturbation.name", "required field is missing");
      sc.perturbation.name = as_string(p["name"], "perturbation.name");
      if (p.contains("params")) sc.perturbation.params = as_params(p["params"], "perturbation.params");
    }
  }

  if (doc.contains("design")) {
    const json& d = doc["design"];
    require_object(d, "design");
    allow_keys(d, "design", {"controller", "poles", "a_h", "placement_poles"});
    if (d.contains("controller")) {
      sc.design.controller = as_string(d["controller"], "design.controller");
      if (sc.design.controller != "implicit" && sc.design.controller != "linear")
        throw SchemaError("design.controller", "must be implicit or linear");
    }
    if (d.contains("poles")) {
      if (!d["poles"].is_array()) throw SchemaError("design.poles", "expected an array of pole lists");
      for (std::size_t j = 0; j < d["poles"].size(); ++j)
        sc.design.poles.push_back(as_poles(d["poles"][j], index_path("design.poles", j)));
    }
    if (d.contains("a_h") && !(d["a_h"].is_string() && d["a_h"] == "default")) {
      sc.design.a_h = as_matrix(d["a_h"], "design.a_h");
      if (sc.design.a_h->rows() != sc.design.a_h->cols()) throw SchemaError("design.a_h", "must be square");
    }
    if (d.contains("placement_poles")) sc.design.placement_poles = as_poles(d["placement_poles"], "design.placement_poles");
  }
  if (sc.system != SystemKind::kError && sc.design.a_h &&
      static_cast<std::size_t>(sc.design.a_h->rows()) != sc.model.m)
    throw SchemaError("design.a_h", "must be m x m");

  if (doc.contains("tracking")) sc.tracking = as_string(doc["tracking"], "tracking");

  if (doc.contains("run")) {
    const json& r = doc["run"];
    require_object(r, "run");
    allow_keys(r, "run",
               {"t0", "t_end", "tol", "sample_dt", "initial", "samples", "seed", "eps_levels", "delta0", "t0_grid",
                "horizon", "profile_horizon", "probe_radius", "threads", "norm"});
    auto& run = sc.run;
    if (r.contains("t0")) run.t0 = as_number(r["t0"], "run.t0");
    if (r.contains("t_end")) run.t_end = as_number(r["t_end"], "run.t_end");
    if (r.contains("tol")) run.tol = as_number(r["tol"], "run.tol");
    if (r.contains("sample_dt")) run.sample_dt = as_number(r["sample_dt"], "run.sample_dt");
    if (r.contains("initial")) run.initial = as_numbers(r["initial"], "run.initial");
    if (r.contains("samples")) run.samples = as_count(r["samples"], "run.samples");
    if (r.contains("seed")) run.seed = as_count(r["seed"], "run.seed");
    if (r.contains("eps_levels")) run.eps_levels = as_numbers(r["eps_levels"], "run.eps_levels");
    if (r.contains("delta0")) run.delta0 = as_number(r["delta0"], "run.delta0");
    if (r.contains("t0_grid")) run.t0_grid = as_numbers(r["t0_grid"], "run.t0_grid");
    if (r.contains("horizon")) run.horizon = as_number(r["horizon"], "run.horizon");
    if (r.contains("profile_horizon")) run.profile_horizon = as_number(r["profile_horizon"], "run.profile_horizon");
    if (r.contains("probe_radius")) run.probe_radius = as_number(r["probe_radius"], "run.probe_radius");
    if (r.contains("threads")) run.threads = as_count(r["threads"], "run.threads");
    if (r.contains("norm")) {
      try {
        run.norm = parse_norm(as_string(r["norm"], "run.norm"));
      } catch (const std::invalid_argument&) {
        throw SchemaError("run.norm", "must be euclidean or inf");
      }
    }
  }
  const auto& run = sc.run;
  check_range(run.t0, 0.0, 1e6, "run.t0", "in [0, 1e6]");
  if (!(run.t_end > run.t0)) throw SchemaError("run.t_end", "must exceed run.t0");
  check_range(run.tol, 1e-14, 1e-2, "run.tol", "in [1e-14, 1e-2]");
  if (!(run.sample_dt > 0.0) || (run.t_end - run.t0) / run.sample_dt > 1e7)
    throw SchemaError("run.sample_dt", "must be positive with at most 1e7 samples");
  if (run.samples < 1 || run.samples > 4096) throw SchemaError("run.samples", "must be in [1, 4096]");
  if (run.eps_levels.empty()) throw SchemaError("run.eps_levels", "must not be empty");
  for (std::size_t i = 0; i < run.eps_levels.size(); ++i) {
    if (!(run.eps_levels[i] > 0.0)) throw SchemaError(index_path("run.eps_levels", i), "must be positive");
    if (i > 0 && !(run.eps_levels[i] < run.eps_levels[i - 1]))
      throw SchemaError(index_path("run.eps_levels", i), "levels must decrease strictly");
  }
  check_range(run.delta0, 0.0, 1e6, "run.delta0", "in [0, 1e6]");
  if (run.t0_grid.empty()) throw SchemaError("run.t0_grid", "must not be empty");
  for (std::size_t i = 0; i < run.t0_grid.size(); ++i)
    check_range(run.t0_grid[i], 0.0, 1e6, index_path("run.t0_grid", i), "in [0, 1e6]");
  if (!(run.horizon > 0.0)) throw SchemaError("run.horizon", "must be positive");
  check_range(run.profile_horizon, 1.0, 64.0, "run.profile_horizon", "in [1, 64]");
  if (!(run.probe_radius > 0.0)) throw SchemaError("run.probe_radius", "must be positive");
  if (run.threads > 256) throw SchemaError("run.threads", "must be at most 256");

  if (doc.contains("stages")) {
    const json& s = doc["stages"];
    if (!s.is_array()) throw SchemaError("stages", "expected an array of stage names");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string name = as_string(s[i], index_path("stages", i));
      if (std::find(kStageOrder.begin(), kStageOrder.end(), name) == kStageOrder.end())
        throw SchemaError(index_path("stages", i), "unknown stage '" + name + "'");
      if (std::find(sc.stages.begin(), sc.stages.end(), name) != sc.stages.end())
        throw SchemaError(index_path("stages", i), "duplicate stage '" + name + "'");
      sc.stages.push_back(name);
    }
  }

  if (doc.contains("outputs")) {
    const json& o = doc["outputs"];
    require_object(o, "outputs");
    allow_keys(o, "outputs", {"directory", "formats"});
    if (o.contains("directory")) sc.output_dir = as_string(o["directory"], "outputs.directory");
    if (o.contains("formats")) {
      const json& f = o["formats"];
      if (!f.is_array()) throw SchemaError("outputs.formats", "expected an array");
      sc.formats.clear();
      for (std::size_t i = 0; i < f.size(); ++i) {
        const std::string fmt = as_string(f[i], index_path("outputs.formats", i));
        if (fmt != "csv" && fmt != "json" && fmt != "svg")
          throw SchemaError(index_path("outputs.formats", i), "must be csv, json or svg");
        sc.formats.insert(fmt);
      }
    }
  }

  // Catalog references must resolve.
  if (sc.system != SystemKind::kError) {
    try {
      make_model(sc.model.name, sc.model.m, sc.model.n, sc.model.params);
    } catch (const std::invalid_argument& e) {
      throw SchemaError("model", e.what());
    }
  }
  try {
    make_perturbation(sc.perturbation.name, sc.channels(), sc.perturbation.params);
  } catch (const std::invalid_argument& e) {
    throw SchemaError("perturbation", e.what());
  }
  if (sc.system == SystemKind::kTracking) {
    try {
      make_tracking(sc.tracking, sc.model.m, sc.model.n);
    } catch (const std::invalid_argument& e) {
      throw SchemaError("tracking", e.what());
    }
  }

  // Stage prerequisites.
  const auto has = [&](const char* s) { return std::find(sc.stages.begin(), sc.stages.end(), s) != sc.stages.end(); };
  const bool needs_controller = sc.system != SystemKind::kError && (has("synthesize") || has("simulate") || has("verify"));
  if (needs_controller) {
    if (sc.design.controller == "implicit" && sc.design.poles.empty())
      throw SchemaError("design.poles", "required for the implicit controller");
    if (sc.design.controller == "linear" && sc.design.placement_poles.empty())
      throw SchemaError("design.placement_poles", "required for the linear controller");
    if (sc.system == SystemKind::kTracking && sc.design.controller != "implicit")
      throw SchemaError("design.controller", "tracking requires the implicit controller");
  }
  if (has("simulate") && sc.run.initial.size() != sc.state_dim())
    throw SchemaError("run.initial", "must have " + std::to_string(sc.state_dim()) + " entries");
  return sc;
}

const std::vector<CatalogScenario>& bundled_scenarios() {
  static const std::vector<CatalogScenario> all = build_bundled();
  return all;
}

std::vector<CatalogScenario> list_scenarios(const std::vector<std::filesystem::path>& extra_dirs) {
  std::vector<CatalogScenario> out = bundled_scenarios();
  for (const auto& dir : extra_dirs) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      CatalogScenario s;
      s.source = f.string();
      s.name = f.stem().string();
      try {
        s.document = json::parse(io::read_file(f));
        if (s.document.contains("name") && s.document["name"].is_string()) s.name = s.document["name"];
        if (s.document.contains("description") && s.document["description"].is_string())
          s.description = s.document["description"];
      } catch (const std::exception& e) {
        s.description = std::string("(unreadable: ") + e.what() + ")";
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

json load_scenario(const std::string& ref, const std::vector<std::filesystem::path>& extra_dirs) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(ref, ec)) {
    try {
      return json::parse(io::read_file(ref));
    } catch (const json::parse_error& e) {
      throw SchemaError("<root>", std::string("invalid JSON: ") + e.what());
    }
  }
  for (const auto& s : list_scenarios(extra_dirs))
    if (s.name == ref && !s.document.is_null()) return s.document;
  throw std::invalid_argument("no scenario file or catalog entry named '" + ref + "'");
}

json apply_overrides(json doc, const Overrides& o) {
  if (!doc.is_object()) return doc;
  auto run = [&]() -> json& {
    if (!doc.contains("run")) doc["run"] = json::object();
    return doc["run"];
  };
  if (o.seed) run()["seed"] = *o.seed;
  if (o.tol) run()["tol"] = *o.tol;
  if (o.norm) run()["norm"] = std::string(to_string(*o.norm));
  if (o.formats) {
    if (!doc.contains("outputs")) doc["outputs"] = json::object();
    doc["outputs"]["formats"] = json(std::vector<std::string>(o.formats->begin(), o.formats->end()));
  }
  if (o.stages) doc["stages"] = *o.stages;
  return doc;
}

RunResult run_scenario(const json& doc, const std::filesystem::path& out_dir, std::ostream* log) {
  Scenario sc = parse_scenario(doc);
  std::vector<std::string> order;
  for (const auto& s : kStageOrder)
    if (std::find(sc.stages.begin(), sc.stages.end(), s) != sc.stages.end()) order.push_back(s);

  std::filesystem::create_directories(out_dir);
  Pipeline p(sc, out_dir, log);
  for (const auto& stage : order) {
    try {
      p.run_stage(stage);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }

  RunResult res;
  res.artifacts = p.artifacts();
  res.summary = p.summary();
  json arts = json::array();
  for (const auto& a : res.artifacts) arts.push_back({{"file", a.file}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  json manifest{
      {"scenario", sc.name},
      {"config_hash", io::sha256_hex(doc.dump())},
      {"seed", sc.run.seed},
      {"stages", order},
      {"norm", std::string(to_string(sc.run.norm))},
      {"simd_backend", std::string(simd::to_string(simd::backend()))},
      {"versions",
       {{"evuas", EVUAS_VERSION},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
        {"openssl", OPENSSL_VERSION_TEXT}}},
      {"summary", res.summary},
      {"artifacts", arts},
      {"created_utc", utc_timestamp()}};
  res.manifest = out_dir / "manifest.json";
  io::write_file(res.manifest, manifest.dump(2) + "\n");
  return res;
}

}  // namespace evuas
