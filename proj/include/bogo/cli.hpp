#pragma once

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "flow_solver.hpp"
#include "holo_moduli.hpp"
#include "random.hpp"
#include "scalar_solver.hpp"
#include "transport.hpp"

namespace bogo::cli {

using nlohmann::json;

// Exit codes
constexpr int kOk = 0, kNonConvergence = 1, kInvalid = 2;

struct Report {
  std::string command;
  json inputs = json::object(), metrics = json::object(), checks = json::object();

  void check(const std::string& name, bool ok) { checks[name] = ok; }
  json to_json() const {
    bool pass = true;
    for (auto& [k, v] : checks.items()) pass = pass && v.get<bool>();
    return {{"command", command}, {"inputs", inputs}, {"metrics", metrics}, {"checks", checks}, {"pass", pass}};
  }
};

// plain key=value lines, '#' comments
inline std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadConfig("config: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int no = 0;
  auto strip = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++no;
    line = strip(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw BadConfig("config line " + std::to_string(no) + ": expected key=value");
    std::string key = strip(line.substr(0, eq));
    while (!key.empty() && key[0] == '-') key.erase(0, 1);
    if (key.empty()) throw BadConfig("config line " + std::to_string(no) + ": empty key");
    kv[key] = strip(line.substr(eq + 1));
  }
  return kv;
}

inline std::pair<int, int> parse_grid(const std::string& s, const char* key) {
  int a = 0, b = 0;
  char x = 0, extra = 0;
  std::istringstream in(s);
  if (!(in >> a >> x >> b) || (x != 'x' && x != 'X') || (in >> extra))
    throw BadConfig(std::string(key) + ": expected NxM, got \"" + s + "\"");
  if (a < 4 || b < 4) throw BadConfig(std::string(key) + ": need at least 4 samples per axis");
  return {a, b};
}

inline Section parse_section(const std::string& s, const char* key) {
  std::vector<double> v;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw BadConfig(std::string(key) + ": bad number \"" + item + "\"");
    }
  }
  if (v.size() == 2) return {v[0], v[1]};
  if (v.size() == 4) return {cplx(v[0], v[1]), cplx(v[2], v[3])};
  throw BadConfig(std::string(key) + ": expected \"a,b\" or \"re_a,im_a,re_b,im_b\"");
}

namespace detail {

inline AxiGrid axi_grid(int nr, int ny, double lo_r, double hi_r, double lo_y, double hi_y, const std::string& spacing) {
  return spacing == "uniform" ? AxiGrid::uniform(nr, lo_r, hi_r, ny, lo_y, hi_y)
                              : AxiGrid::geometric(nr, lo_r, hi_r, ny, lo_y, hi_y);
}

// sup of a refined pointwise field over the nodes shared with the coarse grid
inline double common_sup(const std::vector<double>& fine, const AxiGrid& coarse, const AxiGrid& f) {
  double s = 0;
  for (std::size_t i = 1; i + 1 < coarse.nr(); ++i)
    for (std::size_t j = 1; j + 1 < coarse.ny(); ++j) s = std::max(s, fine[f.index(2 * i, 2 * j)]);
  return s;
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream o(path);
  if (!o) throw DomainError("cannot open " + path);
  o << j.dump(2) << '\n';
}

}  // namespace detail

// Subcommand state; every option is bound here so the resolved config can be
// echoed into the report.
struct Options {
  std::string config, out;
  int k = 0;
  std::string grid = "128x128", spacing = "geometric";
  double r_min = 0.1, r_max = 4, y_min = 0.1, y_max = 4;
  double tol = 1e-6, solve_tol = 1e-10;
  bool richardson = false;
  std::string csv, log, checkpoint, history;
  int max_iter = 50;
  std::string linear = "auto";
  // flow
  int nx = 64, n3 = 1, ny = 64;
  double period = 4, g0 = 1, amp = 0.2, flow_y_min = 1, flow_y_max = 2;
  long max_steps = 200000;
  std::uint64_t seed = 1;
  // transport
  double x2 = 0.5, x3 = 0, y_start = 1, t_y_min = 1e-3, rho = 0.5, theta = 0;
  int per_decade = 16;
  std::string s0 = "1,1";
  bool knot = false, from_plane = false;
  // holo
  std::string poly;
  int genus = 0, rank_l = 2, rank_nplus = 2, deg_nplus = 0;
  int samples = 100, cells = 4;
  // chain
  int chain_n = 64;
  double lo = 0.1, hi = 4;
};

inline Report verify_model(const Options& o) {
  auto [nr, ny] = parse_grid(o.grid, "grid");
  check_charge(o.k);
  AxiGrid g = detail::axi_grid(nr, ny, o.r_min, o.r_max, o.y_min, o.y_max, o.spacing);
  ScalarResidual r = scalar_residual(sample_model(o.k, g), g);
  Report rep{"verify-model"};
  rep.inputs = {{"k", o.k}, {"grid", o.grid}, {"spacing", o.spacing}, {"r_min", o.r_min}, {"r_max", o.r_max},
                {"y_min", o.y_min}, {"y_max", o.y_max}, {"tol", o.tol}, {"richardson", o.richardson}};
  rep.metrics = residual_report("scalar", r.norms, g);
  rep.check("sup_below_tol", r.norms.sup < o.tol);
  if (o.richardson) {
    AxiGrid f = detail::axi_grid(2 * nr - 1, 2 * ny - 1, o.r_min, o.r_max, o.y_min, o.y_max, o.spacing);
    ScalarResidual rf = scalar_residual(sample_model(o.k, f), f);
    double fine = detail::common_sup(rf.pointwise, g, f);
    double ratio = r.norms.sup / fine;
    rep.metrics["richardson_ratio"] = ratio;
    rep.metrics["refined_sup_on_common_nodes"] = fine;
    rep.check("richardson_ratio_4", std::abs(ratio - 4.0) <= 0.3);
  }
  if (!o.csv.empty()) write_profile_csv(o.csv, sample_model(o.k, g), g);
  return rep;
}

inline Report solve_scalar_cmd(const Options& o) {
  auto [nr, ny] = parse_grid(o.grid, "grid");
  check_charge(o.k);
  AxiGrid g = detail::axi_grid(nr, ny, o.r_min, o.r_max, o.y_min, o.y_max, o.spacing);
  SolveOptions so;
  so.tol = o.solve_tol;
  so.max_iter = o.max_iter;
  so.linear = o.linear == "banded" ? LinearSolver::banded : o.linear == "cg" ? LinearSolver::cg : LinearSolver::automatic;
  SolveResult s = solve_scalar(o.k, g, model_boundary(o.k, g), so);
  ScalarProfile exact = sample_model(o.k, g);
  double err = 0;
  for (std::size_t q = 0; q < g.size(); ++q) err = std::max(err, std::abs(s.profile.u[q] - exact.u[q]));
  bool monotone = true;
  for (std::size_t i = 1; i < s.log.size(); ++i) monotone = monotone && s.log[i].residual <= s.log[i - 1].residual;
  Report rep{"solve-scalar"};
  rep.inputs = {{"k", o.k}, {"grid", o.grid}, {"spacing", o.spacing}, {"r_min", o.r_min}, {"r_max", o.r_max},
                {"y_min", o.y_min}, {"y_max", o.y_max}, {"tol", o.solve_tol}, {"max_iter", o.max_iter},
                {"linear", o.linear}};
  rep.metrics = {{"iterations", s.log.empty() ? 0 : s.log.back().iter},
                 {"final_residual", s.log.empty() ? 0.0 : s.log.back().residual},
                 {"effective_tol", s.effective_tol},
                 {"max_error_vs_model", err},
                 {"grid", grid_json(g)}};
  rep.check("converged", s.converged);
  rep.check("residual_monotone", monotone);
  if (!o.log.empty()) write_iteration_log(o.log, s.log);
  if (!o.csv.empty()) write_profile_csv(o.csv, s.profile, g);
  return rep;
}

inline Report flow_cmd(const Options& o) {
  check_charge(o.k);
  if (o.nx < 3 || o.ny < 3 || o.n3 < 1) throw BadConfig("nx/ny: need at least 3 samples, n3 at least 1");
  if (!(o.period > 0) || !(o.g0 > 0)) throw BadConfig("period/g0: must be positive");
  if (!(o.flow_y_min > 0) || !(o.flow_y_max > o.flow_y_min)) throw BadConfig("y-min/y-max: need 0 < y-min < y-max");
  auto ys = uniform_samples(o.ny, o.flow_y_min, o.flow_y_max);
  // z^k is periodic only for k = 0; charged models use a chart centred on the knot
  TorusGrid g = o.k == 0 ? TorusGrid::torus(o.nx, o.n3, o.period, o.period, ys, o.g0)
                         : TorusGrid::chart(o.nx, o.nx, -o.period / 2, o.period / 2, -o.period / 2, o.period / 2, ys, o.g0);
  MetricField model = model_metric(o.k, g);
  MetricField h0 = model;
  SplitMix64 rng(o.seed);
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3)
      for (std::size_t j = 1; j + 1 < g.ny(); ++j) {
        if (!g.x_interior(i2, i3)) continue;
        std::size_t q = g.index(i2, i3, j);
        double s = o.amp * rng.uniform(-1, 1);
        h0.h[q] = HermMetric(model.h[q].mat() * exp_traceless(Mat2::diag(s, -s)));
      }
  FlowParams p;
  p.tol = o.tol;
  p.max_steps = o.max_steps;
  FlowResult r = flow_moment_map(h0, model_higgs(o.k, g), g, p);
  double err = 0;
  for (std::size_t q = 0; q < g.size(); ++q) err = std::max(err, (r.h.h[q].mat() - model.h[q].mat()).max_abs());
  Report rep{"flow"};
  rep.inputs = {{"k", o.k}, {"nx", o.nx}, {"n3", o.n3}, {"ny", o.ny}, {"period", o.period}, {"g0", o.g0},
                {"y_min", o.flow_y_min}, {"y_max", o.flow_y_max}, {"amp", o.amp}, {"seed", o.seed},
                {"tol", o.tol}, {"max_steps", o.max_steps}};
  rep.metrics = {{"steps", r.steps},
                 {"rejected_steps", r.rejected},
                 {"final_sup", r.history.back().sup},
                 {"final_l2", r.history.back().l2},
                 {"max_error_vs_model", err},
                 {"max_det_error", r.max_det_error},
                 {"max_hermiticity_error", r.max_herm_error},
                 {"grid", grid_json(g)}};
  rep.check("converged", r.converged);
  rep.check("det_and_hermiticity", r.max_det_error < 1e-12 && r.max_herm_error == 0);
  if (!o.checkpoint.empty()) write_checkpoint(o.checkpoint, r.h, g);
  if (!o.history.empty()) write_flow_history(o.history, r.history);
  if (!r.converged) throw NonConvergence("flow: max_steps reached with sup " + std::to_string(r.history.back().sup));
  return rep;
}

inline Report transport_cmd(const Options& o) {
  check_charge(o.k);
  Section s0 = parse_section(o.s0, "s0");
  auto f = model_unitary_triple(o.k);
  FundamentalTrace ft;
  if (o.knot) {
    KnotArc arc;
    arc.rho = o.rho;
    arc.theta = o.theta;
    arc.psi_start = o.y_start;
    arc.psi_min = o.t_y_min;
    arc.per_decade = o.per_decade;
    arc.from_plane = o.from_plane;
    ft = fundamental_knot(f, arc);
  } else {
    ft = fundamental_d3(f, {o.x2, o.x3, o.y_start, o.t_y_min, o.per_decade});
  }
  SectionTrace t = ft.section(s0);
  ExponentFit fit = growth_exponent(t);
  SmallSectionReport ss = small_section_test(ft);
  Report rep{"transport"};
  rep.inputs = {{"k", o.k}, {"knot", o.knot}, {"from_plane", o.from_plane}, {"x2", o.x2}, {"x3", o.x3},
                {"rho", o.rho}, {"theta", o.theta}, {"start", o.y_start}, {"min", o.t_y_min},
                {"per_decade", o.per_decade}, {"s0", o.s0}};
  rep.metrics = {{"variable", t.variable},
                 {"exponent", fit.exponent},
                 {"exponent_stderr", fit.stderr_},
                 {"exponent_large", ss.exponent_large},
                 {"exponent_small", ss.exponent_small},
                 {"singular_value_ratio", ss.separation},
                 {"small_section", ss.verdict},
                 {"direction", {{{"re", ss.direction[0].real()}, {"im", ss.direction[0].imag()}},
                                {{"re", ss.direction[1].real()}, {"im", ss.direction[1].imag()}}}}};
  rep.check("small_section_found", ss.verdict);
  if (!o.csv.empty()) write_trace_csv(o.csv, t);
  return rep;
}

inline Report divisor_cmd(const Options& o) {
  if (o.poly.empty()) throw BadConfig("poly: required");
  Poly p = parse_poly(o.poly);
  Divisor d = extract_divisor({Poly(), Poly(), p, Poly()});
  Report rep{"divisor"};
  rep.inputs = {{"poly", o.poly}, {"genus", o.genus}};
  rep.metrics = {{"divisor", divisor_json(d)}, {"degree", d.degree()}, {"even", d.even()}};
  int total = 0;
  for (auto& q : d.points) total += q.mult;
  rep.check("multiplicities_sum_to_degree", total == p.degree());
  if (o.genus) {
    LineBundleDegree lb = line_bundle_degree(o.genus, d);
    rep.metrics["line_bundle_degree"] = lb.degree;
    rep.metrics["regime"] = regime_name(lb.regime);
  }
  return rep;
}

inline Report index_cmd(const Options& o) {
  IndexReport r = index_dimension({o.genus, o.rank_l, o.rank_nplus, o.deg_nplus});
  Report rep{"index"};
  rep.inputs = {{"genus", o.genus}, {"rank_l", o.rank_l}, {"rank_nplus", o.rank_nplus}, {"deg_nplus", o.deg_nplus}};
  rep.metrics = {{"dimension", r.dimension}, {"index_dbar0", r.index0}, {"index_dbar1", r.index1}};
  if (o.rank_l == 2 && o.rank_nplus == 2) rep.check("equals_6g_minus_6", r.dimension == 6L * o.genus - 6);
  return rep;
}

inline Report pairing_cmd(const Options& o) {
  if (o.samples < 1 || o.cells < 1) throw BadConfig("samples/cells: must be positive");
  TorusGrid g = TorusGrid::torus(o.cells, o.cells, 1.0, 1.0, {1.0, 2.0});
  SplitMix64 rng(o.seed);
  auto random_mat = [&] {
    return Mat2(rng.complex_normal(), rng.complex_normal(), rng.complex_normal(), rng.complex_normal()).traceless_part();
  };
  auto block_pair = [&] {
    TangentPair t;
    for (std::size_t q = 0; q < g.size(); ++q) {
      t.beta.push_back(rng.complex_normal() * Mat2::e12());
      cplx a = rng.complex_normal();
      t.phi.push_back(Mat2::diag(a, -a) + rng.complex_normal() * Mat2::e12());
    }
    return t;
  };
  double iso = 0, anti = 0, quat = 0;
  for (int s = 0; s < o.samples; ++s) {
    TangentPair a = block_pair(), b = block_pair();
    iso = std::max(iso, std::abs(symplectic_pairing(a, b, g)));
    TangentPair x, y;
    std::vector<HermMetric> h;
    for (std::size_t q = 0; q < g.size(); ++q) {
      x.beta.push_back(random_mat()), x.phi.push_back(random_mat());
      y.beta.push_back(random_mat()), y.phi.push_back(random_mat());
      Mat2 m = 0.5 * random_mat();
      h.push_back(HermMetric(exp_traceless(0.5 * (m + m.adjoint()))));
    }
    anti = std::max(anti, std::abs(symplectic_pairing(x, y, g) + symplectic_pairing(y, x, g)));
    QuaternionImages im = complex_structures(x, h);
    TangentPair ii = apply_i(im.i, h), jj = apply_j(im.j, h), kk = apply_k(im.k, h), ij = apply_i(im.j, h);
    for (std::size_t q = 0; q < g.size(); ++q)
      quat = std::max({quat, (ii.beta[q] + x.beta[q]).max_abs(), (ii.phi[q] + x.phi[q]).max_abs(),
                       (jj.beta[q] + x.beta[q]).max_abs(), (jj.phi[q] + x.phi[q]).max_abs(),
                       (kk.beta[q] + x.beta[q]).max_abs(), (kk.phi[q] + x.phi[q]).max_abs(),
                       (ij.beta[q] - im.k.beta[q]).max_abs(), (ij.phi[q] - im.k.phi[q]).max_abs()});
  }
  TangentPair t1{std::vector<Mat2>(g.size(), Mat2::e21()), std::vector<Mat2>(g.size(), Mat2::zero())};
  TangentPair t2{std::vector<Mat2>(g.size(), Mat2::zero()), std::vector<Mat2>(g.size(), Mat2::e12())};
  cplx w12 = symplectic_pairing(t1, t2, g), w21 = symplectic_pairing(t2, t1, g);
  Report rep{"pairing"};
  rep.inputs = {{"samples", o.samples}, {"cells", o.cells}, {"seed", o.seed}};
  rep.metrics = {{"isotropy_max", iso},
                 {"antisymmetry_max", anti},
                 {"quaternion_max", quat},
                 {"test_pair", {{"re", w12.real()}, {"im", w12.imag()}}}};
  rep.check("isotropic", iso < 1e-12);
  rep.check("antisymmetric", anti < 1e-12 && w12 == -w21);
  rep.check("nondegenerate_test_pair", std::abs(w12 - I_unit) < 1e-12);
  rep.check("quaternion_identities", quat < 1e-12);
  return rep;
}

inline Report reduce_chain_cmd(const Options& o) {
  ChainReport c = reduction_chain_check(o.k, {o.chain_n, o.lo, o.hi});
  Report rep{"reduce-chain"};
  rep.inputs = {{"k", o.k}, {"n", o.chain_n}, {"lo", o.lo}, {"hi", o.hi}};
  json links = json::array();
  bool ratios = true;
  for (auto& l : c.links) {
    links.push_back({{"name", l.name}, {"sup_coarse", l.sup_coarse}, {"sup_fine", l.sup_fine}, {"ratio", l.ratio}});
    ratios = ratios && std::abs(l.ratio - 4.0) <= 0.3;
  }
  rep.metrics = {{"links", links},
                 {"matching_error", c.matching_error},
                 {"axis_slope_error", c.axis_slope_error},
                 {"wrong_b_slope_error", c.wrong_b_slope_error},
                 {"scale_error", c.scale_error}};
  rep.check("links_second_order", ratios);
  rep.check("b_matching", c.matching_error < 1e-10 && c.axis_slope_error < 1e-6 && c.wrong_b_slope_error > 0.1);
  if (o.k == 1) {
    rep.metrics["identity_error"] = c.identity_error;
    rep.check("k1_identity", c.identity_error < 1e-12);
  }
  return rep;
}

// Runs one subcommand. The report goes to --out or `out`; diagnostics to `err`.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  static const std::vector<std::string> commands = {"verify-model", "solve-scalar", "flow", "transport",
                                                    "divisor", "index", "pairing", "reduce-chain"};
  Options o;
  CLI::App app{"Numerical toolkit for the extended Bogomolny equations", "bogo"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "key=value file; flags take precedence");
    s->add_option("--out", o.out, "report path (default stdout)");
  };
  auto scalar_grid = [&](CLI::App* s) {
    s->add_option("--k", o.k, "charge")->check(CLI::Range(0, 3));
    s->add_option("--grid", o.grid, "NrxNy samples");
    s->add_option("--spacing", o.spacing)->check(CLI::IsMember({"geometric", "uniform"}));
    s->add_option("--r-min", o.r_min)->check(CLI::PositiveNumber);
    s->add_option("--r-max", o.r_max)->check(CLI::PositiveNumber);
    s->add_option("--y-min", o.y_min)->check(CLI::PositiveNumber);
    s->add_option("--y-max", o.y_max)->check(CLI::PositiveNumber);
    s->add_option("--csv", o.csv, "profile CSV");
  };

  auto* vm = app.add_subcommand("verify-model", "scalar residual of the closed-form model");
  common(vm);
  scalar_grid(vm);
  vm->add_option("--tol", o.tol)->check(CLI::PositiveNumber);
  vm->add_flag("--richardson", o.richardson, "also evaluate on the 2n-1 refinement");

  auto* ss = app.add_subcommand("solve-scalar", "Newton solve with model boundary data");
  common(ss);
  scalar_grid(ss);
  ss->add_option("--tol", o.solve_tol)->check(CLI::PositiveNumber);
  ss->add_option("--max-iter", o.max_iter)->check(CLI::PositiveNumber);
  ss->add_option("--linear", o.linear)->check(CLI::IsMember({"auto", "banded", "cg"}));
  ss->add_option("--log", o.log, "iteration log (JSON lines)");

  auto* fl = app.add_subcommand("flow", "metric flow from a perturbed model");
  common(fl);
  fl->add_option("--k", o.k)->check(CLI::Range(0, 3));
  fl->add_option("--nx", o.nx);
  fl->add_option("--n3", o.n3);
  fl->add_option("--ny", o.ny);
  fl->add_option("--period", o.period);
  fl->add_option("--g0", o.g0);
  fl->add_option("--y-min", o.flow_y_min);
  fl->add_option("--y-max", o.flow_y_max);
  fl->add_option("--amp", o.amp)->check(CLI::Range(0.0, 2.0));
  fl->add_option("--seed", o.seed);
  fl->add_option("--tol", o.tol)->check(CLI::PositiveNumber);
  fl->add_option("--max-steps", o.max_steps)->check(CLI::PositiveNumber);
  fl->add_option("--checkpoint", o.checkpoint, "binary metric checkpoint");
  fl->add_option("--history", o.history, "residual history (JSON lines)");

  auto* tr = app.add_subcommand("transport", "D3 transport and growth exponents");
  common(tr);
  tr->add_option("--k", o.k)->check(CLI::Range(0, 3));
  tr->add_option("--x2", o.x2);
  tr->add_option("--x3", o.x3);
  tr->add_option("--start", o.y_start, "y (or angle) where s0 is given")->check(CLI::PositiveNumber);
  tr->add_option("--min", o.t_y_min, "smallest y (or angle)")->check(CLI::PositiveNumber);
  tr->add_option("--per-decade", o.per_decade)->check(CLI::Range(1, 1000));
  tr->add_option("--s0", o.s0, "a,b or re_a,im_a,re_b,im_b");
  tr->add_flag("--knot", o.knot, "transport along an arc of constant rho");
  tr->add_flag("--from-plane", o.from_plane, "fit against the elevation above the boundary");
  tr->add_option("--rho", o.rho)->check(CLI::PositiveNumber);
  tr->add_option("--theta", o.theta);
  tr->add_option("--csv", o.csv, "trace CSV");

  auto* dv = app.add_subcommand("divisor", "divisor of the lower-left entry");
  common(dv);
  dv->add_option("--poly", o.poly, "polynomial in z, e.g. z^2*(z-1)");
  dv->add_option("--genus", o.genus, "also report deg L and the regime")->check(CLI::Range(2, 1000000));

  auto* ix = app.add_subcommand("index", "index count");
  common(ix);
  ix->add_option("--genus", o.genus)->required()->check(CLI::Range(2, 1000000));
  ix->add_option("--rank-l", o.rank_l)->check(CLI::PositiveNumber);
  ix->add_option("--rank-nplus", o.rank_nplus)->check(CLI::PositiveNumber);
  ix->add_option("--deg-nplus", o.deg_nplus);

  auto* pr = app.add_subcommand("pairing", "isotropy, antisymmetry and quaternion checks");
  common(pr);
  pr->add_option("--samples", o.samples);
  pr->add_option("--cells", o.cells);
  pr->add_option("--seed", o.seed);

  auto* rc = app.add_subcommand("reduce-chain", "links of the reduction to the ODE");
  common(rc);
  rc->add_option("--k", o.k)->check(CLI::Range(0, 3));
  rc->add_option("--n", o.chain_n)->check(CLI::Range(5, 100000));
  rc->add_option("--lo", o.lo)->check(CLI::PositiveNumber);
  rc->add_option("--hi", o.hi)->check(CLI::PositiveNumber);

  try {
    if (args.empty()) throw UnknownCommand("missing subcommand; expected one of verify-model, solve-scalar, flow, transport, divisor, index, pairing, reduce-chain");
    if (args[0] == "--help" || args[0] == "-h") {
      out << app.help();
      return kOk;
    }
    if (std::find(commands.begin(), commands.end(), args[0]) == commands.end())
      throw UnknownCommand("unknown subcommand '" + args[0] + "'");
    CLI::App* sub = app.get_subcommand(args[0]);
    // config values fill in options not given as flags
    for (std::size_t i = 1; i < args.size(); ++i) {
      const std::string& a = args[i];
      if (a == "--config" && i + 1 < args.size()) o.config = args[i + 1];
      else if (a.rfind("--config=", 0) == 0) o.config = a.substr(9);
    }
    if (!o.config.empty()) {
      for (auto& [key, value] : read_config(o.config)) {
        if (key == "config") throw BadConfig("config: nested config files are not supported");
        if (!sub->get_option_no_throw("--" + key))
          throw BadConfig("config key '" + key + "' is not an option of " + args[0]);
        bool given = false;
        for (std::size_t i = 1; i < args.size(); ++i)
          given = given || args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0;
        if (!given) args.push_back("--" + key + "=" + value);
      }
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out << sub->help();
      return kOk;
    } catch (const CLI::ParseError& e) {
      throw BadConfig(std::string(e.what()));
    }
    Report rep;
    const std::string& c = args[0];
    if (c == "verify-model") rep = verify_model(o);
    else if (c == "solve-scalar") rep = solve_scalar_cmd(o);
    else if (c == "flow") rep = flow_cmd(o);
    else if (c == "transport") rep = transport_cmd(o);
    else if (c == "divisor") rep = divisor_cmd(o);
    else if (c == "index") rep = index_cmd(o);
    else if (c == "pairing") rep = pairing_cmd(o);
    else rep = reduce_chain_cmd(o);
    json j = rep.to_json();
    if (o.out.empty()) out << j.dump(2) << '\n';
    else detail::write_json(o.out, j);
    return kOk;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const StepRejected& e) {
    err << "error: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  }
}

inline int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

}  // namespace bogo::cli
