#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cli/config.hpp"
#include "codim/beam.hpp"
#include "codim/errors.hpp"
#include "codim/findim.hpp"
#include "codim/geometry.hpp"
#include "codim/lqoc.hpp"
#include "codim/numerics.hpp"
#include "codim/pde.hpp"

namespace codim::cli {

namespace {

using nlohmann::json;
using geometry::Vec2;

struct Context {
  Config cfg;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct Output {
  json results = json::object();
  std::string verdict;
  std::map<std::string, std::string> tables;  // file name -> CSV text
};

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    os_ << std::setprecision(17);
    row(header);
  }
  template <typename... Ts>
  void add(const Ts&... values) {
    bool first = true;
    ((os_ << (first ? "" : ",") << values, first = false), ...);
    os_ << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
  }
  void comment(const std::string& line) { os_ << "# " << line << "\n"; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
json to_json(const Vec2& v) { return std::vector<double>{v.x(), v.y()}; }
json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

Vec2 parse_point(const Config& cfg, const std::string& key) {
  const auto v = cfg.get_doubles(key);
  if (v.size() != 2) throw ConfigError(key, "key '" + key + "': expected two numbers");
  return Vec2(v[0], v[1]);
}

geometry::Domain2D parse_domain(const Config& cfg) {
  std::istringstream is(cfg.get("domain"));
  std::string kind;
  is >> kind;
  std::string rest;
  std::getline(is, rest);
  const auto v = parse_numbers("domain", rest);
  if (kind == "rect" && v.size() == 4) {
    return geometry::Domain2D::rectangle(Vec2(v[0], v[1]), Vec2(v[2], v[3]));
  }
  if (kind == "disk" && v.size() == 3) return geometry::Domain2D::disk(Vec2(v[0], v[1]), v[2]);
  if (kind == "polygon" && v.size() >= 6 && v.size() % 2 == 0) {
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < v.size(); i += 2) pts.emplace_back(v[i], v[i + 1]);
    return geometry::Domain2D::polygon(pts);
  }
  throw ConfigError("domain", "key 'domain': expected 'rect X0 Y0 W H', 'disk CX CY R' or "
                              "'polygon X1 Y1 ...', got '" + cfg.get("domain") + "'");
}

geometry::ControlRegion parse_omega(const Config& cfg, const geometry::Domain2D& dom) {
  std::vector<geometry::ControlRegion::Disk> disks;
  std::vector<geometry::ControlRegion::Rect> rects;
  for (const auto& part : split_parts(cfg.get("omega"))) {
    std::istringstream is(part);
    std::string kind;
    is >> kind;
    std::string rest;
    std::getline(is, rest);
    const auto v = parse_numbers("omega", rest);
    if (kind == "disk" && v.size() == 3) {
      disks.push_back({Vec2(v[0], v[1]), v[2]});
    } else if (kind == "rect" && v.size() == 4) {
      rects.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3])});
    } else if (kind == "frame" && v.size() == 1) {
      const auto f = geometry::ControlRegion::frame(dom, v[0]);
      rects.insert(rects.end(), f.rects().begin(), f.rects().end());
    } else {
      throw ConfigError("omega", "key 'omega': cannot parse part '" + part + "'");
    }
  }
  if (disks.empty() && rects.empty()) throw ConfigError("omega", "key 'omega' is empty");
  return geometry::ControlRegion(dom, disks, rects);
}

std::vector<std::pair<double, double>> parse_intervals(const Config& cfg, const std::string& key) {
  const auto v = cfg.get_doubles(key);
  if (v.empty() || v.size() % 2 != 0) {
    throw ConfigError(key, "key '" + key + "': expected pairs 'a b'");
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < v.size(); i += 2) out.emplace_back(v[i], v[i + 1]);
  return out;
}

Eigen::MatrixXd parse_matrix(const Config& cfg, const std::string& key) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : split_parts(cfg.get(key))) rows.push_back(parse_numbers(key, r));
  if (rows.empty()) throw ConfigError(key, "key '" + key + "' is empty");
  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw ConfigError(key, "key '" + key + "': rows have different lengths");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

pde::PotentialField constant_field(double c) {
  if (c == 0.0) return pde::PotentialField::zero();
  return pde::PotentialField::from_function([c](double, double, double) { return c; });
}

pde::Equation parse_equation(const Config& cfg, const std::string& key) {
  const std::string& v = cfg.get(key);
  if (v == "wave") return pde::Equation::Wave;
  if (v == "heat") return pde::Equation::Heat;
  throw ConfigError(key, "key '" + key + "': expected wave or heat, got '" + v + "'");
}

json ray_json(const geometry::GeneralizedRay& ray) {
  json impacts = json::array();
  for (const auto& im : ray.impacts) {
    impacts.push_back({{"time", im.time},
                       {"point", to_json(im.point)},
                       {"normal", to_json(im.normal)},
                       {"edge", im.edge},
                       {"transversality", im.transversality}});
  }
  return {{"start_time", ray.start_time()},
          {"end_time", ray.end_time()},
          {"segments", ray.segments.size()},
          {"impacts", impacts},
          {"end_point", to_json(ray.position(ray.end_time()))},
          {"path_length", ray.path_length()},
          {"min_transversality", ray.min_transversality()},
          {"ends_on_boundary", ray.ends_on_boundary},
          {"truncated_by_max_reflections", ray.truncated_by_max_reflections}};
}

// findim

Output cmd_findim(const Context& ctx) {
  const Config& c = ctx.cfg;
  const int steps = c.get_int("findim.steps");
  const double tol = c.get_double("findim.tol");
  const double T = c.get_double("findim.T");
  Output out;
  if (!c.get("findim.A").empty() || !c.get("findim.B").empty()) {
    const auto sys =
        findim::LinearSystem::time_invariant(parse_matrix(c, "findim.A"), parse_matrix(c, "findim.B"), T);
    const auto eq = findim::verify_equivalences(sys, steps, tol, ctx.seed, 100);
    const auto reach = findim::reachability_report(sys, steps, tol);
    out.results = {{"n", eq.n},
                   {"codimension", eq.codimension},
                   {"kernel_dim", eq.kernel_dim},
                   {"kalman_rank", eq.kalman_rank ? json(*eq.kalman_rank) : json(nullptr)},
                   {"codim_matches_kernel", eq.codim_matches_kernel},
                   {"kalman_matches", eq.kalman_matches},
                   {"weak_observability", eq.weak_observability},
                   {"compact_term_estimate", eq.compact_term_estimate},
                   {"best_constant", eq.best_constant},
                   {"worst_observability_ratio", eq.worst_observability_ratio},
                   {"worst_compact_ratio", eq.worst_compact_ratio},
                   {"ill_separated", eq.ill_separated},
                   {"gramian_eigenvalues", to_json(reach.eigenvalues)},
                   {"tolerance", reach.tolerance}};
    out.verdict = eq.all_pass() ? "EQUIVALENT" : "MISMATCH";
    Csv csv({"index", "eigenvalue"});
    for (Eigen::Index i = 0; i < reach.eigenvalues.size(); ++i) csv.add(i, reach.eigenvalues(i));
    out.tables["findim_eigenvalues.csv"] = csv.str();
    return out;
  }
  const int samples = c.get_int("findim.samples");
  if (samples < 1) throw ValidationError("findim.samples must be positive");
  findim::RandomFamilyOptions opts;
  opts.n_max = c.get_int("findim.n_max");
  opts.m_max = c.get_int("findim.m_max");
  opts.max_pieces = c.get_int("findim.pieces");
  opts.T = T;
  std::mt19937_64 rng(ctx.seed);
  std::vector<findim::RandomSystem> systems;
  for (int i = 0; i < samples; ++i) systems.push_back(findim::random_system(rng, opts));
  std::vector<findim::EquivalenceReport> reps(systems.size());
  parallel_for(systems.size(), ctx.threads, [&](std::size_t i) {
    reps[i] = findim::verify_equivalences(systems[i].system, steps, tol, ctx.seed + i, 20);
  });
  Csv csv({"index", "n", "m", "pieces", "planted_codimension", "codimension", "kernel_dim",
           "kalman_codimension", "all_pass", "ill_separated"});
  int agree = 0, lti = 0, ill = 0, planted_ok = 0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    const auto& s = systems[i];
    const int planted = s.system.n() - s.planted_rank;
    agree += r.all_pass() ? 1 : 0;
    lti += r.kalman_rank ? 1 : 0;
    ill += r.ill_separated ? 1 : 0;
    planted_ok += r.codimension == planted ? 1 : 0;
    csv.add(i, s.system.n(), s.system.m(), s.system.pieces(), planted, r.codimension, r.kernel_dim,
            r.kalman_rank ? std::to_string(r.n - *r.kalman_rank) : std::string("NA"),
            r.all_pass() ? "true" : "false", r.ill_separated ? "true" : "false");
  }
  out.results = {{"samples", samples},
                 {"all_pass", agree},
                 {"disagreements", samples - agree},
                 {"time_invariant", lti},
                 {"ill_separated", ill},
                 {"matches_planted_codimension", planted_ok}};
  out.verdict = agree == samples ? "ALL_AGREE" : "DISAGREEMENT";
  out.tables["findim_systems.csv"] = csv.str();
  return out;
}

// gcc

Output cmd_gcc(const Context& ctx) {
  const Config& c = ctx.cfg;
  const auto dom = parse_domain(c);
  const auto omega = parse_omega(c, dom);
  geometry::SamplingSpec spec{c.get_int("gcc.positions"), c.get_int("gcc.angles")};
  const auto rep = geometry::check_gcc(dom, omega, c.get_double("gcc.T"), spec,
                                       c.get_double("gcc.tangency_tol"), ctx.threads);
  Output out;
  out.verdict = geometry::to_string(rep.verdict);
  out.results = {{"verdict", out.verdict},
                 {"max_entry_time", rep.max_entry_time},
                 {"seeds_traced", rep.seeds_traced},
                 {"skipped", rep.skipped}};
  if (rep.witness && rep.witness_seed) {
    out.results["witness"] = {{"x0", to_json(rep.witness_seed->x0)},
                              {"p0", to_json(rep.witness_seed->p0)},
                              {"ray", ray_json(*rep.witness)}};
  } else {
    out.results["witness"] = nullptr;
  }
  Csv csv({"x0", "y0", "px", "py", "status", "entry_time", "min_transversality", "skip_reason"});
  for (const auto& o : rep.outcomes) {
    const char* st = o.status == geometry::SeedOutcome::Status::Met      ? "met"
                     : o.status == geometry::SeedOutcome::Status::Missed ? "missed"
                                                                         : "skipped";
    csv.add(o.seed.x0.x(), o.seed.x0.y(), o.seed.p0.x(), o.seed.p0.y(), st,
            o.entry_time ? std::to_string(*o.entry_time) : std::string("NA"),
            o.min_transversality, o.skip_reason.empty() ? "NA" : o.skip_reason);
  }
  out.tables["gcc_outcomes.csv"] = csv.str();
  return out;
}

// ray

Output cmd_ray(const Context& ctx) {
  const Config& c = ctx.cfg;
  const auto dom = parse_domain(c);
  const auto omega = parse_omega(c, dom);
  const geometry::RaySeed seed{parse_point(c, "ray.x0"), parse_point(c, "ray.p0")};
  const double T = c.get_double("ray.T");
  const int maxr = c.get_int("ray.max_reflections");
  const auto ray = c.get_bool("ray.two_sided") ? geometry::trace_ray_two_sided(dom, seed, T, maxr)
                                               : geometry::trace_ray(dom, seed, T, maxr);
  Output out;
  out.results = ray_json(ray);
  const auto entry = geometry::ray_meets_region(ray, omega);
  out.results["omega_entry_time"] = opt_json(entry);
  out.verdict = entry ? "MEETS_OMEGA" : "MISSES_OMEGA";
  Csv seg({"s_begin", "s_end", "x_begin", "y_begin", "px", "py"});
  for (const auto& s : ray.segments) {
    seg.add(s.s_begin, s.s_end, s.x_begin.x(), s.x_begin.y(), s.p.x(), s.p.y());
  }
  out.tables["ray_segments.csv"] = seg.str();
  Csv imp({"time", "x", "y", "nx", "ny", "edge", "transversality"});
  for (const auto& im : ray.impacts) {
    imp.add(im.time, im.point.x(), im.point.y(), im.normal.x(), im.normal.y(), im.edge,
            im.transversality);
  }
  out.tables["ray_impacts.csv"] = imp.str();
  return out;
}

// beam

Output cmd_beam(const Context& ctx) {
  const Config& c = ctx.cfg;
  beam::ScalingConfig sc;
  sc.domain = parse_domain(c);
  sc.omega = parse_omega(c, sc.domain);
  sc.T = c.get_double("beam.T");
  const auto re = c.get_doubles("beam.M0_real");
  const auto im = c.get_doubles("beam.M0_imag");
  if (re.size() != 4) throw ConfigError("beam.M0_real", "key 'beam.M0_real': expected 4 numbers");
  if (im.size() != 4) throw ConfigError("beam.M0_imag", "key 'beam.M0_imag': expected 4 numbers");
  sc.M0 << beam::cplx(re[0], im[0]), beam::cplx(re[1], im[1]), beam::cplx(re[2], im[2]),
      beam::cplx(re[3], im[3]);
  sc.c0 = c.get_double("beam.c0");
  sc.epsilons = c.get_doubles("beam.epsilons");
  sc.points_per_width = c.get_int("beam.points_per_width");
  sc.max_grid = c.get_int("beam.max_grid");
  sc.time_samples = c.get_int("beam.time_samples");
  sc.cutoff_radius = c.get_double("beam.cutoff_radius");
  sc.threads = ctx.threads;
  if (c.get("beam.x0").empty() != c.get("beam.p0").empty()) {
    throw ConfigError("beam.p0", "keys 'beam.x0' and 'beam.p0' must be given together");
  }
  if (c.get("beam.x0").empty()) {
    const auto seed = geometry::find_trapped_ray(sc.domain, sc.omega);
    if (!seed) throw ValidationError("no bouncing ray avoids omega");
    sc.seed = *seed;
  } else {
    sc.seed = {parse_point(c, "beam.x0"), parse_point(c, "beam.p0")};
  }
  const auto rep = beam::scaling_report(sc);

  Output out;
  json rows = json::array();
  std::vector<std::string> header{"epsilon", "grid_n"};
  for (const auto& n : beam::scaling_metric_names()) header.push_back(n);
  Csv csv(header);
  for (const auto& r : rep.rows) {
    json row = {{"epsilon", r.epsilon}, {"grid_n", r.grid_n}};
    std::ostringstream line;
    line << std::setprecision(17) << r.epsilon << "," << r.grid_n;
    for (const auto& n : beam::scaling_metric_names()) {
      row[n] = beam::metric_value(r, n);
      line << "," << beam::metric_value(r, n);
    }
    rows.push_back(row);
    csv.row({line.str()});
  }
  json slopes = json::object();
  for (const auto& [k, v] : rep.slopes) {
    slopes[k] = opt_json(v);
    csv.comment("slope " + k + " " + (v ? std::to_string(*v) : std::string("NA")));
  }
  auto at_least = [&](const std::string& k, double bound) {
    const auto s = rep.slope(k);
    return s && *s >= bound;
  };
  const json checks = {{"velocity_ratio_ge_0.5", rep.velocity_ratio >= 0.5},
                       {"omega_H1_slope_ge_0.45", at_least("omega_H1_energy", 0.45)},
                       {"initial_L2_Hm1_slope_ge_0.45",
                        at_least("init_pos_L2_plus_vel_Hminus1", 0.45)},
                       {"boundary_H1_slope_ge_0.45", at_least("boundary_H1", 0.45)},
                       {"off_ray_slope_ge_1.8", at_least("off_ray_energy", 1.8)},
                       {"correction_slope_ge_0.45", at_least("correction_energy", 0.45)},
                       {"rayleigh_slope_ge_0.9", at_least("rayleigh_quotient", 0.9)}};
  bool all = true;
  for (const auto& [k, v] : checks.items()) all = all && v.get<bool>();
  out.results = {{"rows", rows},
                 {"slopes", slopes},
                 {"velocity_ratio", rep.velocity_ratio},
                 {"cutoff_radius", rep.cutoff_radius},
                 {"ray_seed", {{"x0", to_json(sc.seed.x0)}, {"p0", to_json(sc.seed.p0)}}},
                 {"checks", checks}};
  out.verdict = all ? "SCALING_CONSISTENT" : "SCALING_INCONSISTENT";
  out.tables["beam_scaling.csv"] = csv.str();
  return out;
}

// gramian

json gramian_json(const pde::GramianReport& r) {
  return {{"equation", pde::to_string(r.equation)},
          {"observation", r.observation},
          {"N", r.N},
          {"verdict", pde::to_string(r.verdict)},
          {"threshold", r.threshold},
          {"n_small", r.n_small},
          {"lambda_max", r.lambda_max},
          {"lambda_min", r.lambda_min},
          {"lambda_min_above", r.lambda_min_above},
          {"gap_ratio", r.gap_ratio},
          {"decay_slope", r.decay_slope},
          {"decay_r2", r.decay_r2},
          {"symmetry_error", r.symmetry_error},
          {"eigenvalues", to_json(r.eigenvalues)},
          {"solver", {{"nx", r.nx}, {"ny", r.ny}, {"steps", r.steps}, {"dt", r.dt}, {"T", r.T}}}};
}

Output cmd_gramian(const Context& ctx) {
  const Config& c = ctx.cfg;
  const auto eq = parse_equation(c, "gramian.equation");
  const std::string obs = c.get("gramian.observation");
  if (obs != "position" && obs != "velocity") {
    throw ConfigError("gramian.observation", "key 'gramian.observation': expected position or velocity");
  }
  if (obs == "velocity" && eq == pde::Equation::Heat) {
    throw ValidationError("velocity observation applies to the wave equation only");
  }
  const int dim = c.get_int("gramian.dim");
  if (dim != 1 && dim != 2) throw ConfigError("gramian.dim", "key 'gramian.dim': expected 1 or 2");
  const double T = c.get_double("gramian.T");
  std::vector<int> Ns = c.get_ints("gramian.ladder");
  const bool ladder = !Ns.empty();
  if (!ladder) Ns = {c.get_int("gramian.N")};
  const int n_top = *std::max_element(Ns.begin(), Ns.end());
  int nx = c.get_int("gramian.nx");

  pde::Box box;
  pde::Region region = pde::Region::everywhere();
  if (dim == 1) {
    box = pde::Box::interval(c.get_double("gramian.L"));
    region = pde::Region::intervals(parse_intervals(c, "gramian.intervals"));
    if (nx == 0) nx = std::max(64, 8 * n_top);
  } else {
    const auto dom = parse_domain(c);
    if (dom.shape() != geometry::Domain2D::Shape::Rectangle || dom.lower().norm() != 0.0) {
      throw ValidationError("2D Gramians need a rectangle domain with lower corner (0, 0)");
    }
    box = pde::Box::rectangle(dom.upper().x(), dom.upper().y());
    region = pde::Region::planar(parse_omega(c, dom));
    if (nx == 0) nx = std::max(64, 4 * n_top);
  }
  const int ny = dim == 2 ? nx : 1;
  pde::GridSpec grid = eq == pde::Equation::Wave
                           ? pde::GridSpec::wave(box, nx, ny, c.get_double("gramian.cfl"))
                           : (dim == 1 ? pde::GridSpec::interval(box.L1, nx, 0.0,
                                                                 pde::Scheme::ImplicitTrapezoid)
                                       : pde::GridSpec::rectangle(box.L1, box.L2, nx, ny, 0.0,
                                                                  pde::Scheme::ImplicitTrapezoid));
  pde::GramianOptions opts;
  opts.threshold_rel = c.get_double("gramian.threshold_rel");
  opts.gap_factor = c.get_double("gramian.gap_factor");
  opts.decay_slope = c.get_double("gramian.decay_slope");
  opts.decay_r2 = c.get_double("gramian.decay_r2");
  const auto a = constant_field(c.get_double("gramian.a"));

  std::vector<pde::GramianReport> reps;
  for (int N : Ns) {
    if (obs == "velocity") {
      reps.push_back(pde::velocity_observability_gramian(grid, a, region, T, N, opts));
    } else {
      reps.push_back(pde::observability_gramian(eq, grid, a, region, T, N, opts));
    }
  }
  Output out;
  json rungs = json::array();
  Csv csv({"N", "index", "eigenvalue"});
  for (const auto& r : reps) {
    rungs.push_back(gramian_json(r));
    for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) csv.add(r.N, i, r.eigenvalues(i));
  }
  out.results = {{"reports", rungs}};
  out.verdict = pde::to_string(reps.back().verdict);
  if (ladder) {
    const auto lv = pde::refine_verdict(reps);
    out.results["ladder"] = {{"verdict", pde::to_string(lv.verdict)},
                             {"lambda_min_stable", lv.lambda_min_stable},
                             {"n_small_stable", lv.n_small_stable},
                             {"Ns", lv.Ns},
                             {"normalized_lambda_min", lv.normalized_lambda_min},
                             {"n_small", lv.n_small},
                             {"note", lv.note}};
    out.verdict = pde::to_string(lv.verdict);
  }
  out.tables["gramian_eigenvalues.csv"] = csv.str();
  return out;
}

// lq

Output cmd_lq(const Context& ctx) {
  const Config& c = ctx.cfg;
  lqoc::LQProblem p;
  p.equation = parse_equation(c, "lq.equation");
  p.N = c.get_int("lq.N");
  p.K = c.get_int("lq.K");
  p.T = c.get_double("lq.T");
  p.L = c.get_double("lq.L");
  p.omega = parse_intervals(c, "lq.intervals");
  p.a = constant_field(c.get_double("lq.a"));
  p.q = constant_field(c.get_double("lq.q"));
  const double r = c.get_double("lq.r");
  p.r = pde::PotentialField::from_function([r](double, double, double) { return r; });
  p.r_min = c.get_double("lq.r_min");
  const auto y0 = c.get_doubles("lq.y0");
  const auto y1 = c.get_doubles("lq.y1");
  if (p.N < 2) throw ValidationError("N must be at least 2");
  p.y0 = Eigen::Map<const Eigen::VectorXd>(y0.data(), y0.size());
  if (y1.empty()) {
    p.y1 = Eigen::VectorXd::Zero(p.state_dim());
    p.y1(0) = 0.1;
  } else {
    p.y1 = Eigen::Map<const Eigen::VectorXd>(y1.data(), y1.size());
  }
  const auto qp = lqoc::discretize(p);
  const auto sol = lqoc::solve_endpoint_lq(qp);
  const auto pmp = lqoc::verify_pmp(sol, qp);

  const double eps = c.get_double("lq.perturbation");
  std::mt19937_64 rng(ctx.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd u = sol.u;
  const double umax = sol.u.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) += eps * umax * unif(rng);
  const double perturbed = lqoc::stationarity_residual(qp, u, sol.psi, sol.psi0).second;

  Output out;
  out.verdict = lqoc::to_string(sol.status);
  out.results = {
      {"status", out.verdict},
      {"endpoint_residual", sol.endpoint_residual},
      {"endpoint_tolerance", sol.endpoint_tolerance},
      {"stationarity_residual", sol.stationarity_residual},
      {"kkt_residual", sol.kkt_residual},
      {"kkt_condition_number", sol.kkt_condition_number},
      {"effective_condition", sol.effective_condition},
      {"min_pivot", sol.min_pivot},
      {"psi0", sol.psi0},
      {"psi_norm", sol.psi_norm},
      {"variables", qp.variables()},
      {"rows", qp.rows()},
      {"touched_modes", qp.touched_modes},
      {"pmp",
       {{"adjoint_deviation_discrete", pmp.adjoint_deviation_discrete},
        {"adjoint_deviation_continuous", pmp.adjoint_deviation_continuous},
        {"stationarity_residual", pmp.stationarity_residual},
        {"stationarity_absolute", pmp.stationarity_absolute},
        {"control_recovery_mismatch", pmp.control_recovery_mismatch},
        {"psi_sup", pmp.psi_sup},
        {"nontrivial", pmp.nontrivial},
        {"trivially_satisfied", pmp.trivially_satisfied}}},
      {"perturbation",
       {{"relative_noise", eps},
        {"stationarity_residual", perturbed},
        {"inflation", sol.stationarity_residual > 0 ? json(perturbed / sol.stationarity_residual)
                                                    : json(nullptr)}}}};
  std::vector<std::string> header{"n", "t"};
  for (int k = 1; k <= p.N; ++k) header.push_back("c" + std::to_string(k));
  Csv uc(header), pc(header);
  for (int n = 0; n < p.K; ++n) {
    std::ostringstream lu, lp;
    lu << std::setprecision(17) << n << "," << sol.mid_times[n];
    lp << std::setprecision(17) << n << "," << sol.mid_times[n];
    for (int k = 0; k < p.N; ++k) {
      lu << "," << sol.u(k, n);
      lp << "," << sol.psi(k, n);
    }
    uc.row({lu.str()});
    pc.row({lp.str()});
  }
  out.tables["lq_control.csv"] = uc.str();
  out.tables["lq_adjoint.csv"] = pc.str();
  return out;
}

// scan

Output cmd_scan(const Context& ctx) {
  const Config& c = ctx.cfg;
  lqoc::LQProblem p;
  p.equation = pde::Equation::Heat;
  p.K = c.get_int("scan.K");
  p.T = c.get_double("scan.T");
  p.L = c.get_double("scan.L");
  p.omega = parse_intervals(c, "scan.intervals");
  const double r = c.get_double("scan.r");
  p.r = pde::PotentialField::from_function([r](double, double, double) { return r; });
  p.r_min = std::min(1e-3, r);
  const std::string target = c.get("scan.target");
  if (target != "rough" && target != "smooth") {
    throw ConfigError("scan.target", "key 'scan.target': expected rough or smooth");
  }
  const auto rep = lqoc::multiplier_degeneracy_scan(
      p, c.get_ints("scan.Ns"),
      target == "rough" ? lqoc::TargetKind::Rough : lqoc::TargetKind::SmoothReachable, ctx.threads);
  Output out;
  json rows = json::array();
  Csv csv({"N", "status", "kkt_singular", "kkt_condition_number", "effective_condition",
           "psi_norm", "endpoint_residual", "min_pivot"});
  for (const auto& row : rep.rows) {
    rows.push_back({{"N", row.N},
                    {"status", lqoc::to_string(row.status)},
                    {"kkt_singular", row.kkt_singular},
                    {"kkt_condition_number", row.kkt_condition_number},
                    {"effective_condition", row.effective_condition},
                    {"psi_norm", row.psi_norm},
                    {"endpoint_residual", row.endpoint_residual},
                    {"min_pivot", row.min_pivot}});
    csv.add(row.N, lqoc::to_string(row.status), row.kkt_singular ? "true" : "false",
            row.kkt_condition_number, row.effective_condition, row.psi_norm,
            row.endpoint_residual, row.min_pivot);
  }
  out.results = {{"rows", rows},
                 {"target", target},
                 {"monotone_growth", rep.monotone_growth},
                 {"min_growth_factor", rep.min_growth_factor}};
  out.verdict = rep.monotone_growth ? "MONOTONE_GROWTH" : "NO_MONOTONE_GROWTH";
  out.tables["scan.csv"] = csv.str();
  return out;
}

const std::map<std::string, std::function<Output(const Context&)>>& commands() {
  static const std::map<std::string, std::function<Output(const Context&)>> table = {
      {"findim", cmd_findim}, {"gcc", cmd_gcc},   {"ray", cmd_ray}, {"beam", cmd_beam},
      {"gramian", cmd_gramian}, {"lq", cmd_lq}, {"scan", cmd_scan}};
  return table;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("--out", "cannot write '" + path.string() + "'");
  f << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"codimctl: finite-codimensional controllability experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "codim_out";
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "config file (key = value)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "seed for random families");
  app.add_option("--threads", threads, "worker threads; 1 is the reference mode")
      ->check(CLI::Range(1, 1024));
  app.add_option("--set", overrides, "override KEY=VALUE (repeatable)");
  const std::map<std::string, std::string> about = {
      {"findim", "finite-dimensional reachability / dual kernel / Kalman agreement"},
      {"gcc", "sample generalized rays and test the geometric control condition"},
      {"ray", "trace one generalized ray and its first entry into omega"},
      {"beam", "Gaussian beam scaling study along a ray that avoids omega"},
      {"gramian", "observability Gramian spectrum and GAP / DECAY verdict"},
      {"lq", "endpoint-constrained LQ problem with maximum principle checks"},
      {"scan", "KKT conditioning of heat endpoint problems over N"}};
  for (const auto& [name, fn] : commands()) app.add_subcommand(name, about.at(name))->fallthrough();
  app.add_subcommand("schema", "print the configuration schema")->fallthrough();

  std::string command;
  json error;
  int code = kOk;
  Context ctx;
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    command = app.get_subcommands().front()->get_name();
    if (command == "schema") {
      out << schema_text();
      return kOk;
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
      throw ConfigError("--out", "output directory '" + out_dir + "' is not writable");
    }
    ctx.cfg = config_path.empty() ? Config() : Config::load(config_path);
    for (const auto& o : overrides) ctx.cfg.apply_override(o);
    ctx.seed = seed;
    ctx.threads = threads;
    const Output res = commands().at(command)(ctx);
    json report = {{"command", command},
                   {"seed", ctx.seed},
                   {"config", ctx.cfg.values()},
                   {"verdict", res.verdict},
                   {"results", res.results}};
    const std::filesystem::path dir(out_dir);
    write_file(dir / "report.json", report.dump(2) + "\n");
    for (const auto& [name, text] : res.tables) write_file(dir / name, text);
    out << command << ": " << res.verdict << " (report " << (dir / "report.json").string()
        << ")\n";
    return kOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    code = kConfigError;
    error = {{"kind", "config"}, {"key", nullptr}, {"message", e.what()}};
  } catch (const ConfigError& e) {
    code = kConfigError;
    error = {{"kind", "config"}, {"key", e.key()}, {"message", e.what()}};
  } catch (const ValidationError& e) {
    code = kValidationError;
    error = {{"kind", "validation"}, {"message", e.what()}};
  } catch (const NumericalError& e) {
    code = kNumericalError;
    error = {{"kind", "numerical"}, {"code", e.code()}, {"message", e.what()}};
  } catch (const std::exception& e) {
    code = kNumericalError;
    error = {{"kind", "internal"}, {"message", e.what()}};
  }
  const json doc = {{"command", command.empty() ? json(nullptr) : json(command)},
                    {"exit_code", code},
                    {"error", error}};
  err << doc.dump() << "\n";
  std::error_code ec;
  if (!command.empty() && std::filesystem::is_directory(out_dir, ec)) {
    std::ofstream f(std::filesystem::path(out_dir) / "error.json", std::ios::binary);
    if (f) f << doc.dump(2) << "\n";
  }
  return code;
}

}  // namespace codim::cli
