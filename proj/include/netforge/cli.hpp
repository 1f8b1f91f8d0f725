#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netforge/assembler.hpp"
#include "netforge/cloud.hpp"
#include "netforge/configurator.hpp"
#include "netforge/linearization.hpp"
#include "netforge/network_io.hpp"

namespace netforge {

inline constexpr const char* kToolVersion = "netforge 1.0.0";

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failed = 1;
inline constexpr int borderline = 2;
inline constexpr int assembly_invalid = 3;
inline constexpr int solver_failed = 4;
inline constexpr int band_violation = 5;
inline constexpr int parse_error = 64;
}  // namespace exit_code

inline json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json certificate_to_json(const Certificate& c) {
  json j;
  j["n"] = c.n;
  j["m"] = c.m;
  j["connected"] = c.connected;
  j["embedded"] = c.embedded;
  j["unitary"] = c.unitary;
  j["balanced"] = c.balanced;
  j["max_force"] = c.max_force;
  j["lambda_rank"] = c.lambda_rank;
  j["required_rank"] = c.required_rank_flexible;
  j["flexible"] = c.flexible;
  j["gap_ratio"] = c.gap_ratio;
  j["closable_defined"] = c.closable_defined;
  if (c.closable_defined) {
    j["closable"] = c.closable;
    j["closable_rank"] = c.closable_rank;
    j["closable_gap_ratio"] = c.closable_gap_ratio;
  } else {
    j["closable"] = false;
  }
  if (c.df_a_rank) j["df_a_rank"] = *c.df_a_rank;
  if (c.df_a_check_agrees) j["df_a_check_agrees"] = *c.df_a_check_agrees;
  j["borderline"] = c.borderline;
  j["singular_values"] = c.singular_values;
  return j;
}

// Deterministic small forces on every sub-network vertex, used for toy runs with visible anchor targets.
inline SubForces toy_forces(const SubAssembly& A, double scale) {
  SubForces f = zero_forces(A);
  for (std::size_t p = 0; p < f.size(); ++p)
    for (std::size_t r = 0; r < f[p].size(); ++r) f[p][r] = scale * polar_unit(1.3 * double(p) + 2.1 * double(r) + 0.4);
  return f;
}

// ---- configure pipeline ----

struct ConfigureOptions {
  double ell = 60.0;
  std::optional<double> kappa;  // scanned when empty
  double kappa_min_factor = 14.0, kappa_max_factor = 17.0, kappa_step = 1.0;
  int kappa_candidates = 3;
  double force_scale = 0.0;
  NeighborOptions neighbors;
  MasterSolveOptions solver;
};

struct ConfigureResult {
  int code = exit_code::ok;
  std::string message;
  AssemblyReport assembly;
  std::optional<MasterSolveResult> master;
  std::optional<Configuration> cloud;
  std::optional<NeighborReport> neighbors;
  std::vector<KappaCandidate> scanned;
  std::size_t predicted_count = 0;
};

inline ConfigureResult configure_assembly(const SubAssembly& A, const ConfigureOptions& opt, const InteractionTable& table) {
  ConfigureResult out;
  out.assembly = verify_assembly(A);
  if (!out.assembly.all()) {
    out.code = exit_code::assembly_invalid;
    std::ostringstream os;
    os << "assembly conditions fail: " << out.assembly.summary();
    if (!out.assembly.sign_witness.empty()) {
      os << "witness cycle:";
      for (const auto& w : out.assembly.sign_witness) os << ' ' << w;
    }
    out.message = os.str();
    return out;
  }
  const SubForces f = toy_forces(A, opt.force_scale);
  std::vector<double> kappas;
  try {
    if (opt.kappa) {
      kappas.push_back(*opt.kappa);
    } else {
      out.scanned = scan_kappa(A, opt.ell, f, table, opt.kappa_min_factor * opt.ell, opt.kappa_max_factor * opt.ell,
                               opt.kappa_step);
      for (std::size_t i = 0; i < out.scanned.size() && int(i) < opt.kappa_candidates; ++i)
        kappas.push_back(out.scanned[i].kappa);
    }
  } catch (const Error& e) {
    out.code = exit_code::solver_failed;
    out.message = e.what();
    return out;
  }
  std::string errors;
  for (double kappa : kappas) {
    try {
      MasterSolveResult r = solve_master(A, kappa, opt.ell, f, table, opt.solver);
      Configuration c = generate_cloud(r, table);
      NeighborReport nb = neighbor_graph(c, table, opt.neighbors);
      out.predicted_count = predicted_point_count(A, r.m_map);
      const bool ok = nb.ok();
      out.master = std::move(r);
      out.cloud = std::move(c);
      out.neighbors = std::move(nb);
      if (ok) {
        out.code = exit_code::ok;
        out.message.clear();
        return out;
      }
      out.code = exit_code::band_violation;
      out.message = "restrict-condition bands violated at kappa " + format_double(kappa);
    } catch (const Error& e) {
      errors += "kappa " + format_double(kappa) + ": " + e.what() + "; ";
    }
  }
  if (!out.master) {
    out.code = exit_code::solver_failed;
    out.message = errors;
  }
  return out;
}

inline json neighbor_report_json(const NeighborReport& nb) {
  json j;
  j["ell_min"] = nb.ell_min;
  j["near_band"] = json::array({nb.ell_min, nb.near_hi});
  j["far_from"] = nb.far_lo;
  j["violation_count"] = nb.violation_count;
  json v = json::array();
  for (const auto& [a, b] : nb.violations) v.push_back(json::array({a, b}));
  j["violations"] = v;
  j["bad_interior"] = nb.bad_interior;
  j["bad_anchor"] = nb.bad_anchor;
  j["interior_balance"] = nb.interior_balance;
  j["anchor_balance"] = nb.anchor_balance;
  j["ok"] = nb.ok();
  return j;
}

inline json configure_report_json(const ConfigureResult& r) {
  json j;
  j["exit_code"] = r.code;
  j["message"] = r.message;
  json conds = json::array();
  static const char* names[7] = {"i", "ii", "iii", "iv", "v", "vi", "vii"};
  for (int c = 0; c < 7; ++c)
    conds.push_back({{"condition", names[c]}, {"pass", r.assembly.conditions[std::size_t(c)].pass},
                     {"detail", r.assembly.conditions[std::size_t(c)].detail}});
  j["assembly_conditions"] = conds;
  j["ray_clearance"] = r.assembly.ray_clearance;
  if (!r.assembly.sign_witness.empty()) j["sign_witness"] = r.assembly.sign_witness;
  if (!r.scanned.empty()) {
    json s = json::array();
    for (std::size_t i = 0; i < r.scanned.size() && i < 10; ++i)
      s.push_back({{"kappa", r.scanned[i].kappa}, {"predicted_weight_change", r.scanned[i].predicted_weight_change}});
    j["kappa_scan"] = s;
  }
  if (r.master) {
    const MasterSolveResult& m = *r.master;
    j["ell"] = m.ell;
    j["kappa"] = m.kappa;
    j["m_map"] = m.m_map;
    j["e"] = cplx_json(m.e);
    j["t"] = m.t;
    j["residuals"] = {{"a", m.residuals[0]}, {"b", m.residuals[1]}, {"c", m.residuals[2]},
                      {"d", m.residuals[3]}, {"e", m.residuals[4]}, {"f", m.residuals[5]}};
    j["position_dilation"] = m.position_dilation;
    j["weight_dilation"] = m.weight_dilation;
    j["master_weights"] = m.a_tilde;
  }
  if (r.cloud) {
    j["point_count"] = r.cloud->points.size();
    j["predicted_point_count"] = r.predicted_count;
    json targets = json::object();
    for (std::size_t i = 0; i < r.cloud->points.size(); ++i)
      if (r.cloud->points[i].kind != PointKind::chain) targets[r.cloud->points[i].provenance] = cplx_json(r.cloud->target[i]);
    j["targets"] = targets;
  }
  if (r.neighbors) j["neighbors"] = neighbor_report_json(*r.neighbors);
  return j;
}

// ---- assemble pipeline ----

enum class WindowMode { anchors, all, list };

struct AssembleOptions {
  double ell = 0.0;
  WindowMode windows = WindowMode::anchors;
  std::vector<std::size_t> list;
  double h = 0.1;
  double delta = -0.5;
  double chain_threshold = 0.05;  // relative to Upsilon(ell)
  std::map<std::string, cplx> targets;  // normalized anchor targets by provenance
  double min_target = 1e-6;             // smaller targets are reported without a relative deviation
};

struct ProjectionRow {
  std::size_t index = 0;
  std::string provenance;
  PointKind kind = PointKind::anchor;
  cplx g, predicted;
  double deviation = 0.0;       // |g - predicted| / max(|predicted|, Upsilon)
  double relative_size = 0.0;   // |g| / Upsilon
  std::optional<double> target_deviation;  // |g - Upsilon target| / (Upsilon |target|)
};

struct AssembleResult {
  double ell = 0.0, upsilon = 0.0;
  Calibration calibration;
  NormReport norms;
  double normalized_residual = 0.0;  // sup |E| e^ell sqrt(ell)
  std::vector<ProjectionRow> rows;
  double worst_chain = 0.0;
  double worst_target = 0.0;
  bool pass = true;
  std::vector<FieldWindow> windows;  // kept when requested
};

// Chain points are "chain:p:q:j"; returns (p:q key, j).
inline std::optional<std::pair<std::string, long>> chain_position(const std::string& prov) {
  if (prov.rfind("chain:", 0) != 0) return std::nullopt;
  const auto last = prov.rfind(':');
  if (last == std::string::npos || last <= 6) return std::nullopt;
  try {
    return std::pair{prov.substr(6, last - 6), std::stol(prov.substr(last + 1))};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Sub-network points plus, per chain, the two points next to each end and the middle point.
inline std::vector<std::size_t> anchor_windows(const std::vector<CloudPoint>& pts) {
  std::map<std::string, std::vector<std::pair<long, std::size_t>>> chains;
  std::set<std::size_t> sel;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (const auto c = chain_position(pts[i].provenance))
      chains[c->first].push_back({c->second, i});
    else
      sel.insert(i);
  }
  for (auto& [key, v] : chains) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    for (std::size_t k : {std::size_t(0), std::size_t(1), n / 2, n >= 2 ? n - 2 : 0, n - 1})
      if (k < n) sel.insert(v[k].second);
  }
  return {sel.begin(), sel.end()};
}

inline AssembleResult assemble_cloud(const std::vector<CloudPoint>& pts, const AssembleOptions& opt,
                                     const InteractionTable& table, bool keep_windows = false) {
  if (!(opt.ell > 0.0)) throw InputError("assemble needs ell > 0");
  AssembleResult out;
  out.ell = opt.ell;
  out.upsilon = table.upsilon(opt.ell);
  out.calibration = calibrate_projection(table);
  std::vector<std::size_t> sel;
  switch (opt.windows) {
    case WindowMode::anchors: sel = anchor_windows(pts); break;
    case WindowMode::all:
      sel.resize(pts.size());
      std::iota(sel.begin(), sel.end(), std::size_t(0));
      break;
    case WindowMode::list:
      for (std::size_t i : opt.list) {
        if (i >= pts.size()) throw InputError("window index " + std::to_string(i) + " out of range");
        sel.push_back(i);
      }
      break;
  }
  Configuration c;
  c.points = pts;
  c.ell = opt.ell;
  c.target.assign(pts.size(), cplx{});
  c.sub_degree.assign(pts.size(), 0);
  c.ray_count.assign(pts.size(), 0);
  const NeighborReport nb = pts.empty() ? NeighborReport{} : neighbor_graph(c, table);
  FieldEvaluator ev(bumps_of(c), table, opt.ell);
  const double rc = 0.25 * opt.ell;
  for (std::size_t i : sel) {
    const GridWindow w = FieldEvaluator::projection_window(pts[i].pos, opt.ell, opt.h);
    FieldWindow fw = ev.evaluate(w, true, rc + 1.0 + 2.0 * opt.h);
    const NormReport nr = ev.norms(fw, opt.delta);
    out.norms.sup = std::max(out.norms.sup, nr.sup);
    out.norms.weighted = std::max(out.norms.weighted, nr.weighted);
    out.norms.per_point = std::max(out.norms.per_point, nr.per_point);
    ProjectionRow row;
    row.index = i;
    row.provenance = pts[i].provenance;
    row.kind = pts[i].kind;
    row.g = out.calibration.sigma * double(pts[i].sign) * ev.raw_projection(fw, pts[i].pos, opt.ell);
    row.predicted = predicted_force(c, nb, i, table);
    row.deviation = std::abs(row.g - row.predicted) / std::max(std::abs(row.predicted), out.upsilon);
    row.relative_size = std::abs(row.g) / out.upsilon;
    if (row.kind == PointKind::chain) {
      out.worst_chain = std::max(out.worst_chain, row.relative_size);
      if (!(row.relative_size < opt.chain_threshold)) out.pass = false;
    } else if (auto it = opt.targets.find(row.provenance); it != opt.targets.end() && std::abs(it->second) > opt.min_target) {
      const cplx tg = out.upsilon * it->second;
      row.target_deviation = std::abs(row.g - tg) / std::abs(tg);
      out.worst_target = std::max(out.worst_target, *row.target_deviation);
    }
    out.rows.push_back(row);
    if (keep_windows) out.windows.push_back(std::move(fw));
  }
  out.normalized_residual = out.norms.sup * std::exp(opt.ell) * std::sqrt(opt.ell);
  return out;
}

inline json assemble_report_json(const AssembleResult& r) {
  json j;
  j["ell"] = r.ell;
  j["upsilon"] = r.upsilon;
  j["calibration"] = {{"sigma", r.calibration.sigma}, {"ratio", r.calibration.ratio}};
  j["norms"] = {{"sup", r.norms.sup}, {"weighted", r.norms.weighted}, {"per_point", r.norms.per_point},
                {"normalized_sup", r.normalized_residual}};
  json rows = json::array();
  for (const auto& row : r.rows) {
    json x = {{"index", row.index},          {"provenance", row.provenance}, {"g", cplx_json(row.g)},
              {"predicted", cplx_json(row.predicted)}, {"deviation", row.deviation},
              {"relative_size", row.relative_size}};
    if (row.target_deviation) x["target_deviation"] = *row.target_deviation;
    rows.push_back(x);
  }
  j["projections"] = rows;
  j["worst_chain"] = r.worst_chain;
  j["worst_target_deviation"] = r.worst_target;
  j["pass"] = r.pass;
  return j;
}

// ---- command line ----

struct CommonFlags {
  std::optional<std::string> catalog;
  std::optional<int> n, k;
  std::optional<double> theta, nu, mu, a, b;
  std::vector<double> weights;
  CatalogParams params() const { return {n, k, theta, nu, mu, a, b, weights}; }
};

inline void add_catalog_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--catalog", f.catalog, "catalog name");
  app->add_option("--n", f.n, "vertex count");
  app->add_option("--k", f.k, "polygon order");
  app->add_option("--theta", f.theta, "angle parameter");
  app->add_option("--nu", f.nu, "N_Y parameter nu");
  app->add_option("--mu", f.mu, "N_Y parameter mu");
  app->add_option("--a", f.a, "N_C parameter a");
  app->add_option("--b", f.b, "N_C parameter b");
  app->add_option("--weights", f.weights, "edge weights");
}

class Manifest {
 public:
  explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now()) { j_["command"] = std::move(command); }
  void input(const std::string& path) { j_["inputs"].push_back(path); }
  void output(const std::string& path) { j_["outputs"].push_back(path); }
  template <class T>
  void param(const std::string& key, const T& v) { j_["parameters"][key] = v; }
  json finish() {
    j_["tool_version"] = kToolVersion;
    if (!j_.contains("inputs")) j_["inputs"] = json::array();
    if (!j_.contains("outputs")) j_["outputs"] = json::array();
    if (!j_.contains("parameters")) j_["parameters"] = json::object();
    j_["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return j_;
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"netforge: weighted networks, configurations and field diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  CommonFlags cf;
  std::string input, out_path, windows = "anchors", points_list, require = "flexible", dump_dir;
  std::optional<double> ell, kappa;
  double delta = -0.5, band_delta = 0.05, tol_rank = 1e3, tol_newton = 1e-10, force_scale = 0.0, kmin = 14.0, kmax = 17.0, kstep = 1.0;
  double perturb = 1e-3, h = 0.1;
  unsigned seed = 1;

  auto* certify_cmd = app.add_subcommand("certify", "certify a network (flexible, closable, balanced)");
  certify_cmd->add_option("input", input, "network JSON file");
  add_catalog_flags(certify_cmd, cf);
  certify_cmd->add_option("--require", require, "comma list of flexible,closable,balanced")->capture_default_str();
  certify_cmd->add_option("--tol-rank", tol_rank, "rank safety factor")->capture_default_str();
  certify_cmd->add_option("--out", out_path, "certificate JSON path");

  auto* balance_cmd = app.add_subcommand("balance", "balance a perturbed network nearby");
  balance_cmd->add_option("input", input, "network JSON file");
  add_catalog_flags(balance_cmd, cf);
  balance_cmd->add_option("--perturb", perturb, "position perturbation size")->capture_default_str();
  balance_cmd->add_option("--seed", seed, "perturbation seed")->capture_default_str();
  balance_cmd->add_option("--tol-newton", tol_newton, "relative residual tolerance")->capture_default_str();
  balance_cmd->add_option("--out", out_path, "balanced network JSON path");

  auto* configure_cmd = app.add_subcommand("configure", "build a point configuration from an assembly");
  configure_cmd->add_option("input", input, "assembly JSON file");
  add_catalog_flags(configure_cmd, cf);
  configure_cmd->add_option("--ell", ell, "length scale");
  configure_cmd->add_option("--kappa", kappa, "dilation factor (scanned when omitted)");
  configure_cmd->add_option("--kappa-min", kmin, "scan start as a multiple of ell")->capture_default_str();
  configure_cmd->add_option("--kappa-max", kmax, "scan end as a multiple of ell")->capture_default_str();
  configure_cmd->add_option("--kappa-step", kstep, "scan step")->capture_default_str();
  configure_cmd->add_option("--force-scale", force_scale, "size of the deterministic sub-network forces")->capture_default_str();
  configure_cmd->add_option("--delta", band_delta, "relative gap of the far neighbor band")->capture_default_str();
  configure_cmd->add_option("--tol-newton", tol_newton, "master solve tolerance")->capture_default_str();
  configure_cmd->add_option("--out", out_path, "point cloud CSV path")->required();

  auto* assemble_cmd = app.add_subcommand("assemble", "field diagnostics on a point cloud");
  assemble_cmd->add_option("input", input, "point cloud CSV")->required();
  assemble_cmd->add_option("--ell", ell, "length scale (default: from <input>.report.json)");
  assemble_cmd->add_option("--windows", windows, "anchors|all|list")->capture_default_str();
  assemble_cmd->add_option("--points", points_list, "comma separated point indices for --windows list");
  assemble_cmd->add_option("--delta", delta, "weight exponent of the weighted norm")->capture_default_str();
  assemble_cmd->add_option("--grid", h, "grid spacing")->capture_default_str();
  assemble_cmd->add_option("--dump", dump_dir, "directory for per-window residual CSV dumps");
  assemble_cmd->add_option("--out", out_path, "diagnostics JSON path");

  auto* plot_cmd = app.add_subcommand("plot", "render a cloud or field CSV as SVG");
  plot_cmd->add_option("input", input, "cloud or field CSV")->required();
  plot_cmd->add_option("--out", out_path, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_code::parse_error;
  }

  auto write_manifest = [&](Manifest& m, const std::string& base) {
    if (base.empty()) return;
    write_text_file(base + ".manifest.json", m.finish().dump(2) + "\n");
  };

  try {
    if (certify_cmd->parsed()) {
      Manifest man("certify");
      WeightedNetwork net = [&] {
        if (cf.catalog) {
          man.param("catalog", *cf.catalog);
          return catalog(*cf.catalog, cf.params());
        }
        if (input.empty()) throw InputError("certify needs a network file or --catalog");
        man.input(input);
        return network_from_json(read_json_file(input));
      }();
      CertifyOptions copt;
      copt.rank_safety = tol_rank;
      man.param("tol_rank", tol_rank);
      man.param("require", require);
      const Certificate c = certify(net, copt);
      json j = certificate_to_json(c);
      bool ok = true;
      std::stringstream rs(require);
      std::string what;
      while (std::getline(rs, what, ',')) {
        if (what == "flexible") ok = ok && c.flexible;
        else if (what == "closable") ok = ok && c.closable;
        else if (what == "balanced") ok = ok && c.balanced;
        else if (!what.empty()) throw InputError("unknown requirement '" + what + "'");
      }
      const int code = c.borderline ? exit_code::borderline : (ok ? exit_code::ok : exit_code::failed);
      j["exit_code"] = code;
      if (!out_path.empty()) {
        write_text_file(out_path, j.dump(2) + "\n");
        man.output(out_path);
        write_manifest(man, out_path);
      } else {
        j["manifest"] = man.finish();
      }
      out << j.dump(2) << "\n";
      return code;
    }

    if (balance_cmd->parsed()) {
      Manifest man("balance");
      WeightedNetwork net = cf.catalog ? catalog(*cf.catalog, cf.params())
                                       : (input.empty() ? throw InputError("balance needs a network file or --catalog")
                                                        : network_from_json(read_json_file(input)));
      if (cf.catalog) man.param("catalog", *cf.catalog);
      if (!input.empty()) man.input(input);
      man.param("perturb", perturb);
      man.param("seed", seed);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> U(-1.0, 1.0);
      std::vector<cplx> phi = net.positions();
      for (auto& z : phi) z += perturb * cplx(U(rng), U(rng));
      SolverOptions sopt;
      sopt.rel_tol = tol_newton;
      const PerturbationResult r = balance_nearby(net, phi, sopt);
      const WeightedNetwork bal = net.with_positions(r.phi).with_weights(r.a_tilde);
      json j = {{"network", network_to_json(bal)}, {"e", cplx_json(r.e)}, {"t", r.t},
                {"residual", r.residual}, {"max_force", max_force(bal)}};
      if (!out_path.empty()) {
        write_text_file(out_path, j.dump(2) + "\n");
        man.output(out_path);
        write_manifest(man, out_path);
      }
      out << j.dump(2) << "\n";
      return exit_code::ok;
    }

    if (configure_cmd->parsed()) {
      Manifest man("configure");
      SubAssembly A = [&] {
        if (cf.catalog) {
          man.param("catalog", *cf.catalog);
          return assembly_catalog(*cf.catalog, cf.params());
        }
        if (input.empty()) throw InputError("configure needs an assembly file or --catalog");
        man.input(input);
        return assembly_from_json(read_json_file(input));
      }();
      ConfigureOptions copt;
      copt.ell = ell.value_or(60.0);
      copt.kappa = kappa;
      copt.kappa_min_factor = kmin;
      copt.kappa_max_factor = kmax;
      copt.kappa_step = kstep;
      copt.force_scale = force_scale;
      copt.neighbors.delta = band_delta;
      copt.solver.tol = tol_newton;
      man.param("ell", copt.ell);
      if (kappa) man.param("kappa", *kappa);
      man.param("delta", band_delta);
      man.param("tol_newton", tol_newton);
      man.param("force_scale", force_scale);
      const ConfigureResult r = configure_assembly(A, copt, default_table());
      if (r.cloud) {
        write_text_file(out_path, cloud_to_csv(r.cloud->points));
        man.output(out_path);
      }
      write_text_file(out_path + ".report.json", configure_report_json(r).dump(2) + "\n");
      man.output(out_path + ".report.json");
      write_manifest(man, out_path);
      if (r.code != exit_code::ok) err << "configure: " << r.message << "\n";
      out << "points " << (r.cloud ? r.cloud->points.size() : 0) << ", exit " << r.code << "\n";
      return r.code;
    }

    if (assemble_cmd->parsed()) {
      Manifest man("assemble");
      man.input(input);
      const std::vector<CloudPoint> pts = cloud_from_csv(read_text_file(input));
      AssembleOptions aopt;
      aopt.delta = delta;
      aopt.h = h;
      const std::string sidecar = input + ".report.json";
      if (std::filesystem::exists(sidecar)) {
        man.input(sidecar);
        const json rep = read_json_file(sidecar);
        if (rep.contains("ell")) aopt.ell = rep["ell"].get<double>();
        if (rep.contains("targets"))
          for (const auto& [k, v] : rep["targets"].items()) aopt.targets[k] = cplx(v.at(0).get<double>(), v.at(1).get<double>());
      }
      if (ell) aopt.ell = *ell;
      if (!(aopt.ell > 0.0)) throw InputError("assemble needs --ell or a report sidecar");
      if (windows == "anchors") aopt.windows = WindowMode::anchors;
      else if (windows == "all") aopt.windows = WindowMode::all;
      else if (windows == "list") {
        aopt.windows = WindowMode::list;
        std::stringstream ls(points_list);
        std::string tok;
        while (std::getline(ls, tok, ',')) {
          std::size_t used = 0;
          long v = -1;
          try {
            v = std::stol(tok, &used);
          } catch (const std::exception&) {
            used = 0;
          }
          if (used != tok.size() || v < 0) throw InputError("bad point index '" + tok + "'");
          aopt.list.push_back(std::size_t(v));
        }
      } else {
        throw InputError("--windows must be anchors, all or list");
      }
      man.param("ell", aopt.ell);
      man.param("windows", windows);
      man.param("delta", delta);
      man.param("h", h);
      const AssembleResult r = assemble_cloud(pts, aopt, default_table(), !dump_dir.empty());
      const json j = assemble_report_json(r);
      if (!dump_dir.empty()) {
        std::filesystem::create_directories(dump_dir);
        for (std::size_t w = 0; w < r.windows.size(); ++w) {
          const std::string p = dump_dir + "/window_" + std::to_string(r.rows[w].index) + ".csv";
          write_text_file(p, field_to_csv(r.windows[w].grid, r.windows[w].E));
          man.output(p);
        }
      }
      if (!out_path.empty()) {
        write_text_file(out_path, j.dump(2) + "\n");
        man.output(out_path);
        write_manifest(man, out_path);
      } else {
        out << j.dump(2) << "\n";
      }
      return r.pass ? exit_code::ok : exit_code::failed;
    }

    if (plot_cmd->parsed()) {
      Manifest man("plot");
      man.input(input);
      const std::string text = read_text_file(input);
      const std::string header = text.substr(0, text.find('\n'));
      if (header.rfind("x,y,sign,provenance", 0) == 0)
        write_text_file(out_path, cloud_to_svg(cloud_from_csv(text)));
      else
        write_text_file(out_path, field_to_svg(field_from_csv(text)));
      man.output(out_path);
      write_manifest(man, out_path);
      return exit_code::ok;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::parse_error;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::failed;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return exit_code::failed;
  }
  return exit_code::failed;
}

}  // namespace netforge
