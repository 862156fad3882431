#include "evuas/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace evuas::io {

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json complex_json(const Complex& z) { return json::array({number(z.real()), number(z.imag())}); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

json evidence_json(Evidence e) { return to_string(e); }

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

std::string trajectory_csv(const Trajectory& traj, std::string_view state_prefix) {
  const std::size_t k = traj.states.empty() ? 0 : static_cast<std::size_t>(traj.states.front().size());
  const bool with_u = !traj.inputs.empty();
  const std::size_t m = with_u ? static_cast<std::size_t>(traj.inputs.front().size()) : 0;
  std::vector<std::string> header{"t"};
  for (std::size_t i = 1; i <= k; ++i) header.push_back(std::string(state_prefix) + "_" + std::to_string(i));
  for (std::size_t i = 1; i <= m; ++i) header.push_back("u_" + std::to_string(i));
  header.push_back("norm");
  std::string out = csv_row(header);
  const auto norms = traj.state_norms();
  for (std::size_t r = 0; r < traj.size(); ++r) {
    std::vector<std::string> row{format_double(traj.times[r])};
    for (Eigen::Index i = 0; i < traj.states[r].size(); ++i) row.push_back(format_double(traj.states[r][i]));
    if (with_u)
      for (Eigen::Index i = 0; i < traj.inputs[r].size(); ++i) row.push_back(format_double(traj.inputs[r][i]));
    row.push_back(format_double(norms[r]));
    out += csv_row(row);
  }
  return out;
}

std::string profile_csv(const WindowMetricProfile& p, const std::function<double(double)>& bound) {
  std::vector<std::string> header{"t", "value", "quad_error", "partial"};
  if (bound) header.push_back("bound");
  std::string out = csv_row(header);
  for (std::size_t i = 0; i < p.t_grid.size(); ++i) {
    std::vector<std::string> row{format_double(p.t_grid[i]), format_double(p.values[i]),
                                 format_double(p.quad_errors[i]), p.partial[i] ? "1" : "0"};
    if (bound) row.push_back(format_double(bound(p.t_grid[i])));
    out += csv_row(row);
  }
  return out;
}

json to_json(const TrajectoryDiagnostics& d) {
  return {{"accepted_steps", d.accepted_steps},
          {"rejected_steps", d.rejected_steps},
          {"rhs_evaluations", d.rhs_evaluations},
          {"controller_failures", d.controller_failures},
          {"min_step", number(d.min_step)},
          {"max_step", number(d.max_step)},
          {"max_newton_residual", number(d.max_newton_residual)}};
}

json to_json(const GammaDesign& d) {
  json poles = json::array();
  for (const auto& col : d.poles) {
    json c = json::array();
    for (const auto& p : col) c.push_back(complex_json(p));
    poles.push_back(c);
  }
  return {{"gamma", matrix_json(d.gamma)}, {"poles", poles},         {"gamma_star", number(d.gamma_star)},
          {"mu_gamma", number(d.mu_gamma)}, {"kappa", number(d.kappa)}, {"norm", std::string(to_string(d.norm))}};
}

json to_json(const HurwitzMatrix& h) {
  json ev = json::array();
  for (const auto& z : h.eigenvalues) ev.push_back(complex_json(z));
  return {{"a_h", matrix_json(h.a_h)}, {"eigenvalues", ev}, {"max_real_part", number(h.max_real_part)}};
}

json to_json(const Controller& c) {
  json out;
  out["model"] = c.model().name();
  out["m"] = c.model().m();
  out["n"] = c.model().n();
  if (c.mode() == Controller::Mode::kLinearGain) {
    out["mode"] = "linear-gain";
    out["gain"] = matrix_json(c.gain());
    return out;
  }
  out["mode"] = "implicit-newton";
  out["design"] = to_json(c.design());
  out["hurwitz"] = to_json(c.hurwitz());
  out["newton"] = {{"tol", c.newton().tol},
                   {"max_iterations", c.newton().max_iterations},
                   {"max_halvings", c.newton().max_halvings}};
  json failures = json::array();
  for (const auto& f : c.validity().failures)
    failures.push_back({{"radius", number(f.radius)},
                        {"direction", f.direction},
                        {"residual", number(f.residual)},
                        {"iterations", f.iterations},
                        {"singular", f.singular}});
  out["validity"] = {{"last_good_radius", number(c.validity().last_good_radius)},
                     {"probe_limit", number(c.validity().probe_limit)},
                     {"failures", failures}};
  return out;
}

json to_json(const StabilityReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"eps", number(row.eps)},
                    {"delta", number(row.delta)},
                    {"alpha", number(row.alpha)},
                    {"T", number(row.T)},
                    {"evus", to_string(row.evus)},
                    {"evua", to_string(row.evua)}});
  json wit = json::array();
  for (const auto& w : r.witnesses)
    wit.push_back({{"property", w.property},
                   {"eps", number(w.eps)},
                   {"t0", number(w.t0)},
                   {"x0", vector_json(w.x0)},
                   {"t", number(w.t)},
                   {"norm", number(w.norm)}});
  json fails = json::array();
  for (const auto& f : r.failures) fails.push_back({{"t0", number(f.t0)}, {"x0", vector_json(f.x0)}, {"message", f.message}});
  return {{"evus", to_string(r.evus)},
          {"evua", to_string(r.evua)},
          {"evuas", to_string(r.evuas)},
          {"rows", rows},
          {"delta0", number(r.delta0)},
          {"alpha0", number(r.alpha0)},
          {"horizon", number(r.horizon)},
          {"radius_levels", r.radius_levels},
          {"alpha_grid", r.alpha_grid},
          {"t0_grid", r.t0_grid},
          {"samples", r.samples},
          {"seed", r.seed},
          {"norm", std::string(to_string(r.norm))},
          {"witnesses", wit},
          {"simulation_failures", fails},
          {"caveat", r.caveat}};
}

json to_json(const KlEnvelope& e) {
  return {{"accepted", e.accepted},       {"kappa", number(e.kappa)},
          {"mu", number(e.mu)},           {"fit_residual", number(e.fit_residual)},
          {"slack", number(e.slack)},     {"points", e.points},
          {"max_initial_norm", number(e.max_initial_norm)}, {"max_span", number(e.max_span)}};
}

json to_json(const RoaEstimate& r) {
  return {{"r_max", number(r.r_max)},
          {"epsilon", number(r.epsilon)},
          {"delta_E_of_eps", number(r.delta_E_of_eps)},
          {"theta1", number(r.theta1)},
          {"theta2", number(r.theta2)},
          {"delta_star_E", number(r.delta_star_E)},
          {"delta_star_X", number(r.delta_star_X)},
          {"delta_star", number(r.delta_star)}};
}

json to_json(const WindowMetricProfile& p) {
  json values = json::array();
  for (double v : p.values) values.push_back(number(v));
  json errs = json::array();
  for (double v : p.quad_errors) errs.push_back(number(v));
  return {{"t_grid", p.t_grid}, {"values", values},    {"quad_errors", errs},
          {"partial", p.partial}, {"quad_tol", number(p.quad_tol)}, {"norm", std::string(to_string(p.norm))},
          {"trend", evidence_json(p.trend)}};
}

json to_json(const PerturbationClassification& c) {
  json profiles = json::array();
  for (const auto& p : c.column_profiles) profiles.push_back(to_json(p));
  json tails = json::array();
  for (double v : c.tail_sups) tails.push_back(number(v));
  return {{"vanishing_at_x0", to_string(c.vanishing_at_x0)},
          {"vanishing_at_tinf", to_string(c.vanishing_at_tinf)},
          {"diminishing_evidence", evidence_json(c.diminishing_evidence)},
          {"bounded_on_window", c.bounded_on_window},
          {"sampled_sup", number(c.sampled_sup)},
          {"tail_sups", tails},
          {"profile_truncated", c.profile_truncated},
          {"column_profiles", profiles}};
}

json to_json(const CoercivityProbe& p) {
  json per = json::array();
  for (auto v : p.per_sample) per.push_back(to_string(v));
  return {{"verdict", to_string(p.verdict)}, {"radii", p.radii}, {"per_sample", per}, {"excluded_rays", p.excluded_rays}};
}

json to_json(const PlacementReport& p) {
  json ev = json::array();
  for (const auto& z : p.closed_loop_eigenvalues) ev.push_back(complex_json(z));
  return {{"gain", matrix_json(p.gain)},
          {"closed_loop_eigenvalues", ev},
          {"spectrum_error", number(p.spectrum_error)},
          {"charpoly_error", number(p.charpoly_error)},
          {"block_diagonal", p.block_diagonal}};
}

std::string svg_line_plot(const std::string& title, const std::vector<double>& x, const std::vector<Series>& series,
                          bool log_y) {
  constexpr double W = 720, H = 420, L = 70, R = 20, T = 40, B = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  auto tr = [log_y](double v) { return log_y ? (v > 0 ? std::log10(v) : NAN) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (double v : x) x0 = std::min(x0, v), x1 = std::max(x1, v);
  for (const auto& s : series)
    for (double v : s.y) {
      const double w = tr(v);
      if (std::isfinite(w)) y0 = std::min(y0, w), y1 = std::max(y1, w);
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    o << "<text x=\"" << fmt6(px(xv)) << "\" y=\"" << H - B + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt6(xv) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << fmt6(py(yv) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << (log_y ? "1e" + fmt6(yv) : fmt6(yv)) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = colors[s % 6];
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.2\" points=\"";
    const std::size_t n = std::min(x.size(), series[s].y.size());
    const std::size_t stride = std::max<std::size_t>(1, n / 4000);
    bool first = true;
    for (std::size_t i = 0; i < n; i += stride) {
      const double w = tr(series[s].y[i]);
      if (!std::isfinite(w)) continue;
      o << (first ? "" : " ") << fmt6(px(x[i])) << ',' << fmt6(py(w));
      first = false;
    }
    o << "\"/>\n";
    o << "<text x=\"" << W - R - 8 << "\" y=\"" << T + 16 + 16 * s
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << col << "\">"
      << xml_escape(series[s].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace evuas::io
