// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "codim/beam.hpp"
#include "codim/findim.hpp"
#include "codim/geometry.hpp"
#include "codim/lqoc.hpp"
#include "codim/numerics.hpp"
#include "codim/pde.hpp"

namespace {

using namespace codim;
using geometry::Vec2;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

geometry::ControlRegion interior_disk(const geometry::Domain2D& dom) {
  return geometry::ControlRegion(dom, {{Vec2(0.2, 0.5), 0.1}}, {});
}

void findim_suite(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  findim::RandomFamilyOptions opts;  // n <= 6, m <= 3, T = 1
  int agree = 0, lti = 0;
  const int samples = 200;
  for (int i = 0; i < samples; ++i) {
    const auto rs = findim::random_system(rng, opts);
    const auto& sys = rs.system;
    const auto reach = findim::reachability_report(sys, 200);
    const auto dual = findim::dual_kernel(sys, 200);
    bool ok = reach.codimension == dual.kernel_dim;
    if (sys.is_time_invariant()) {
      ++lti;
      ok = ok && reach.codimension == sys.n() - findim::kalman_rank(sys.A(0), sys.B(0));
    }
    agree += ok ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  o.detail << agree << "/" << samples << " agree (" << lti << " time-invariant), " << secs << " s";
  o.check(agree == samples, "codimension / kernel / Kalman disagreement");
  o.check(secs <= 30.0, "runtime above 30 s");
}

void reflection_law(Outcome& o) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  double iso = 0, tang = 0, invol = 0;
  const int pairs = 100000;
  for (int i = 0; i < pairs; ++i) {
    const Vec2 p(u(rng), u(rng));
    const double a = ang(rng);
    const Vec2 nu(std::cos(a), std::sin(a));
    const Vec2 q = geometry::reflect(p, nu);
    const Vec2 tau(-nu.y(), nu.x());
    iso = std::max(iso, std::abs(q.norm() - p.norm()));
    tang = std::max(tang, std::abs(q.dot(tau) - p.dot(tau)));
    invol = std::max(invol, (geometry::reflect(q, nu) - p).norm());
  }
  o.detail << pairs << " pairs, isometry " << iso << ", tangential " << tang << ", involution "
           << invol;
  o.check(iso <= 1e-12, "isometry");
  o.check(tang <= 1e-12, "tangential component");
  o.check(invol <= 1e-12, "involution");
}

void gcc_dichotomy(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto sq = geometry::Domain2D::rectangle(Vec2(0, 0), Vec2(1, 1));
  const geometry::SamplingSpec spec{25, 16};
  const auto frame = geometry::check_gcc(sq, geometry::ControlRegion::frame(sq, 0.1), 2.0, spec);
  const auto disk =
      geometry::check_gcc(sq, interior_disk(sq), 2.0, spec);
  const double secs = seconds_since(t0);
  double worst_dev = 0.0;
  bool transversal = disk.witness.has_value() && !disk.witness->impacts.empty();
  if (disk.witness) {
    for (const auto& im : disk.witness->impacts) {
      worst_dev = std::max(worst_dev, std::abs(im.transversality - 0.5));
    }
  }
  o.detail << "frame " << geometry::to_string(frame.verdict) << " over " << frame.seeds_traced
           << " seeds, max entry " << frame.max_entry_time << "; disk "
           << geometry::to_string(disk.verdict) << ", witness |nu.p| deviation " << worst_dev
           << "; " << secs << " s";
  o.check(frame.verdict == geometry::GCCVerdict::SatisfiedOnSamples, "frame verdict");
  o.check(frame.seeds_traced >= 10000, "fewer than 1e4 seeds");
  o.check(frame.max_entry_time <= 2.0, "frame entry time");
  o.check(disk.verdict == geometry::GCCVerdict::Violated, "disk verdict");
  o.check(transversal && worst_dev <= 1e-12, "witness not transversal");
  o.check(secs <= 60.0, "runtime above 60 s");
}

void eikonal_oracle(Outcome& o) {
  const beam::cplx I(0.0, 1.0);
  beam::Mat2c M0;
  M0 << beam::cplx(0.3, 1.0), beam::cplx(-0.2, 0.1), beam::cplx(-0.2, 0.1), beam::cplx(0.1, 0.7);
  const geometry::RaySegment seg{0.0, 1.0, Vec2(0.3, 0.4), 0.5 * Vec2(0.6, 0.8)};
  const auto phase = beam::propagate_phase(seg, M0, 0.005);
  const auto amp = beam::propagate_amplitude(phase, beam::cplx(1.0, 0.2));
  const std::vector<double> rhos{0.1, 0.05, 0.025, 0.0125};
  double min_slope = 1e300, max_transport = 0.0;
  for (double t : {0.1, 0.45, 0.8}) {
    std::vector<double> res;
    for (double rho : rhos) res.push_back(beam::eikonal_residual(phase, t, rho));
    min_slope = std::min(min_slope, fit_loglog(rhos, res).slope);
  }
  for (int k = 1; k < 20; ++k) {
    max_transport = std::max(max_transport, beam::transport_residual(phase, amp, k / 20.0));
  }
  o.detail << "eikonal slope " << min_slope << ", transport residual " << max_transport;
  o.check(min_slope >= 2.7, "eikonal slope");
  o.check(max_transport <= 1e-8, "transport residual");
}

void beam_scaling(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  beam::ScalingConfig sc;
  sc.omega = interior_disk(sc.domain);
  const auto seed = geometry::find_trapped_ray(sc.domain, sc.omega);
  if (!seed) {
    o.check(false, "no trapped ray");
    return;
  }
  sc.seed = *seed;
  sc.T = 1.0;
  sc.M0 << beam::cplx(0, 0.5), 0, 0, beam::cplx(0, 1.0);
  for (int k = 4; k <= 10; ++k) sc.epsilons.push_back(std::ldexp(1.0, -k));
  const auto rep = beam::scaling_report(sc);
  const double secs = seconds_since(t0);
  auto slope = [&](const std::string& key) { return rep.slope(key).value_or(-1e300); };
  o.detail << "velocity ratio " << rep.velocity_ratio << ", omega H1 "
           << slope("omega_H1_energy") << ", init " << slope("init_pos_L2_plus_vel_Hminus1")
           << ", boundary " << slope("boundary_H1") << ", off-ray " << slope("off_ray_energy")
           << "; " << secs << " s";
  o.check(rep.velocity_ratio >= 0.5, "velocity ratio");
  o.check(slope("omega_H1_energy") >= 0.45, "omega H1 slope");
  o.check(slope("init_pos_L2_plus_vel_Hminus1") >= 0.45, "initial data slope");
  o.check(slope("boundary_H1") >= 0.45, "boundary slope");
  o.check(slope("off_ray_energy") >= 1.8, "off-ray slope");
  o.check(secs <= 300.0, "runtime above 5 min");
}

void gramian_dichotomy(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto zero = pde::PotentialField::zero();
  const auto omega1 = pde::Region::intervals({{0.2, 0.8}});
  const auto line = pde::Box::interval(1.0);

  std::vector<pde::GramianReport> wave;
  const pde::GridSpec wg = pde::GridSpec::wave(line, 320, 1);
  for (int N : {10, 20, 40}) {
    wave.push_back(pde::observability_gramian(pde::Equation::Wave, wg, zero, omega1, 2.5, N));
  }
  const auto wave_ladder = pde::refine_verdict(wave);

  const pde::GridSpec hg = pde::GridSpec::interval(1.0, 160, 0.0, pde::Scheme::ImplicitTrapezoid);
  const auto heat = pde::observability_gramian(pde::Equation::Heat, hg, zero, omega1, 2.5, 20);

  const auto sq = geometry::Domain2D::rectangle(Vec2(0, 0), Vec2(1, 1));
  const pde::GridSpec g2 = pde::GridSpec::wave(pde::Box::rectangle(1, 1), 64, 64);
  auto ladder2d = [&](const geometry::ControlRegion& w) {
    std::vector<pde::GramianReport> r;
    for (int N : {8, 12, 15}) {
      r.push_back(pde::velocity_observability_gramian(g2, zero, pde::Region::planar(w), 4.0, N));
    }
    return pde::refine_verdict(r);
  };
  const auto frame = ladder2d(geometry::ControlRegion::frame(sq, 0.1));
  const auto disk = ladder2d(interior_disk(sq));
  const double secs = seconds_since(t0);

  o.detail << "1D wave " << pde::to_string(wave_ladder.verdict) << "; 1D heat "
           << pde::to_string(heat.verdict) << " (slope " << heat.decay_slope << ", R^2 "
           << heat.decay_r2 << "); 2D frame " << pde::to_string(frame.verdict) << ", 2D disk "
           << pde::to_string(disk.verdict) << "; " << secs << " s";
  o.check(wave_ladder.verdict == pde::Verdict::Gap && wave_ladder.lambda_min_stable,
          "1D wave gap");
  o.check(heat.verdict == pde::Verdict::Decay && heat.decay_slope <= -0.5 &&
              heat.decay_r2 >= 0.9,
          "1D heat decay");
  o.check(frame.verdict == pde::Verdict::Gap, "2D frame gap");
  o.check(disk.verdict != pde::Verdict::Gap, "2D disk non-gap");
  o.check(secs <= 300.0, "runtime above 5 min");
}

void lq_pmp(Outcome& o) {
  lqoc::LQProblem p;  // wave, N = 6, K = 200, T = 2.5, omega = (0.2, 0.8)
  p.a = pde::PotentialField::zero();
  p.q = pde::PotentialField::zero();
  p.y1 = Eigen::VectorXd::Zero(p.state_dim());
  p.y1(0) = 0.1;
  const auto qp = lqoc::discretize(p);
  const auto sol = lqoc::solve_endpoint_lq(qp);
  const auto pmp = lqoc::verify_pmp(sol, qp);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd pert = sol.u;
  const double umax = sol.u.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < pert.size(); ++i) pert(i) += 0.01 * umax * u(rng);
  const double perturbed = lqoc::stationarity_residual(qp, pert, sol.psi, sol.psi0).second;
  const double inflation = perturbed / std::max(sol.stationarity_residual, 1e-300);
  const double endpoint_rel = sol.endpoint_residual / p.y1.norm();

  lqoc::LQProblem h;
  h.equation = pde::Equation::Heat;
  h.K = 64;
  h.T = 1.0;
  const auto scan = lqoc::multiplier_degeneracy_scan(h, {4, 8, 16}, lqoc::TargetKind::Rough);
  double min_growth = 1e300;
  for (std::size_t i = 1; i < scan.rows.size(); ++i) {
    min_growth = std::min(min_growth, scan.rows[i].kkt_condition_number /
                                          scan.rows[i - 1].kkt_condition_number);
  }
  o.detail << "wave " << lqoc::to_string(sol.status) << ", endpoint " << endpoint_rel
           << ", stationarity " << pmp.stationarity_residual << ", inflation " << inflation
           << "; heat condition growth " << min_growth << " per doubling";
  o.check(sol.status == lqoc::Status::Feasible, "wave status");
  o.check(endpoint_rel <= 1e-6, "endpoint");
  o.check(pmp.stationarity_residual <= 1e-6, "stationarity");
  o.check(pmp.nontrivial && !pmp.trivially_satisfied, "multiplier nontriviality");
  o.check(inflation >= 100.0, "perturbation inflation");
  o.check(scan.rows.size() == 3 && min_growth >= 10.0, "heat condition growth");
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

void determinism(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "codim_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> runs = {
      {"findim"},
      {"gcc"},
      {"ray", "--set", "ray.two_sided=true"},
      {"beam", "--set", "beam.epsilons=0.0625 0.03125 0.015625"},
      {"gramian"},
      {"lq"},
      {"scan"},
  };
  int identical = 0;
  for (const auto& r : runs) {
    std::string bytes[2];
    bool ok = true;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (r[0] + std::to_string(rep));
      std::vector<std::string> args = r;
      args.insert(args.end(), {"--threads", "1", "--seed", "11", "--out", dir.string()});
      std::ostringstream out, err;
      ok = ok && cli::run(args, out, err) == cli::kOk;
      bytes[rep] = slurp(dir / "report.json");
    }
    const bool same = ok && !bytes[0].empty() && bytes[0] == bytes[1];
    identical += same ? 1 : 0;
    o.check(same, r[0]);
  }
  fs::remove_all(root);
  o.detail << identical << "/" << runs.size() << " commands byte-identical";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"finite-dimensional equivalence", findim_suite},
      {"reflection law", reflection_law},
      {"GCC dichotomy", gcc_dichotomy},
      {"eikonal and transport", eikonal_oracle},
      {"beam scaling", beam_scaling},
      {"Gramian dichotomy", gramian_dichotomy},
      {"LQ / PMP", lq_pmp},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << ": " << o.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
