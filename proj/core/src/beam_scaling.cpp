#include <algorithm>
#include <cmath>
#include <limits>

#include "codim/beam.hpp"
#include "codim/errors.hpp"
#include "codim/numerics.hpp"

namespace codim::beam {

namespace {

bool smooth_size(int m) {
  for (int f : {2, 3, 5}) {
    while (m % f == 0) m /= f;
  }
  return m == 1;
}

// FD energy ||grad_h v||^2 + ||v_t||^2 with zero Dirichlet values.
double fd_energy(const pde::GridSpec& g, const Eigen::VectorXd& v, const Eigen::VectorXd& vt) {
  const int nx = g.nx;
  const int ny = g.box.dim == 2 ? g.ny : 1;
  const double hx = g.hx(), hy = g.hy(), cell = g.cell();
  auto at = [&](int i, int j) {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return 0.0;
    return v(j * nx + i);
  };
  double e = cell * vt.squaredNorm();
  for (int j = 0; j < ny; ++j) {
    for (int i = -1; i < nx; ++i) {
      const double d = (at(i + 1, j) - at(i, j)) / hx;
      e += cell * d * d;
    }
  }
  if (g.box.dim == 2) {
    for (int i = 0; i < nx; ++i) {
      for (int j = -1; j < ny; ++j) {
        const double d = (at(i, j + 1) - at(i, j)) / hy;
        e += cell * d * d;
      }
    }
  }
  return std::sqrt(e);
}

void sample_field(const FieldFn& field, const pde::GridSpec& g, double t, Eigen::MatrixXd& y,
                  Eigen::MatrixXd& yt) {
  const int ny = g.box.dim == 2 ? g.ny : 1;
  y.resize(g.nx, ny);
  yt.resize(g.nx, ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const FieldSample s = field(Vec2(g.x(i), g.box.dim == 2 ? g.y(j) : 0.0), t);
      y(i, j) = s.value.real();
      yt(i, j) = s.dt.real();
    }
  }
}

}  // namespace

int grid_size_for(double eps, double length, int points_per_width) {
  if (!(eps > 0) || !(length > 0) || points_per_width < 1) {
    throw ValidationError("grid_size_for needs positive arguments");
  }
  int m = static_cast<int>(std::ceil(points_per_width * length / std::sqrt(eps)));
  while (!smooth_size(m)) ++m;
  return m - 1;
}

std::vector<std::string> scaling_metric_names() {
  return {"pde_residual_sup", "boundary_H1",       "init_velocity_L2",
          "init_pos_H1",      "init_pos_L2_plus_vel_Hminus1", "omega_H1_energy",
          "off_ray_energy",   "correction_energy", "rayleigh_quotient"};
}

double metric_value(const ScalingRow& r, const std::string& name) {
  if (name == "pde_residual_sup") return r.pde_residual_sup;
  if (name == "boundary_H1") return r.boundary_H1;
  if (name == "init_velocity_L2") return r.init_velocity_L2;
  if (name == "init_pos_H1") return r.init_pos_H1;
  if (name == "init_pos_L2_plus_vel_Hminus1") return r.init_pos_L2_plus_vel_Hminus1;
  if (name == "omega_H1_energy") return r.omega_H1_energy;
  if (name == "off_ray_energy") return r.off_ray_energy;
  if (name == "correction_energy") return r.correction_energy;
  if (name == "rayleigh_quotient") return r.rayleigh_quotient;
  throw ValidationError("unknown scaling metric: " + name);
}

std::optional<double> BeamScalingReport::slope(const std::string& name) const {
  for (const auto& [k, v] : slopes) {
    if (k == name) return v;
  }
  throw ValidationError("unknown scaling metric: " + name);
}

CorrectionResult correct_to_exact(const FieldFn& field, double T, const SpectralHandle& handle,
                                  int time_samples, bool keep_exact) {
  if (handle.box.dim != 2) throw ValidationError("spectral correction needs a rectangle box");
  if (handle.n < 2 || time_samples < 1 || !(T > 0)) {
    throw ValidationError("invalid correction parameters");
  }
  pde::SpectralWave sw(handle.box, handle.n, handle.n);
  const pde::GridSpec g = sw.grid();
  Eigen::MatrixXd y0, y1;
  sample_field(field, g, 0.0, y0, y1);
  sw.set_data(y0, y1);
  CorrectionResult out;
  Eigen::MatrixXd y, yt, f, ft;
  for (int k = 0; k <= time_samples; ++k) {
    const double t = T * k / time_samples;
    sw.evaluate(t, &y, &yt);
    sample_field(field, g, t, f, ft);
    const double e = std::hypot(sw.gradient_norm(y - f), sw.l2_norm(yt - ft));
    out.times.push_back(t);
    out.energy.push_back(e);
    out.max_energy = std::max(out.max_energy, e);
    if (keep_exact) out.exact.push_back(y);
  }
  return out;
}

CorrectionResult correct_to_exact(const FieldFn& field, double T,
                                  const FiniteDifferenceHandle& handle, int time_samples,
                                  bool keep_exact) {
  const pde::GridSpec& g = handle.grid;
  g.validate();
  if (time_samples < 1 || !(T > 0)) throw ValidationError("invalid correction parameters");
  Eigen::MatrixXd y0, y1;
  sample_field(field, g, 0.0, y0, y1);
  const int steps = std::max(1, static_cast<int>(std::ceil(T / g.dt - 1e-9)));
  const int stride = std::max(1, steps / time_samples);
  pde::WaveOptions opts;
  opts.memory = handle.memory;
  CorrectionResult out;
  const Eigen::VectorXd v0 = Eigen::Map<const Eigen::VectorXd>(y0.data(), y0.size());
  const Eigen::VectorXd v1 = Eigen::Map<const Eigen::VectorXd>(y1.data(), y1.size());
  pde::march_wave(g, handle.a, opts, v0, v1, T,
                  [&](int n, double t, const Eigen::MatrixXd& y, const Eigen::MatrixXd& yt) {
                    if (n % stride != 0 && n != steps) return;
                    Eigen::MatrixXd f, ft;
                    sample_field(field, g, t, f, ft);
                    const Eigen::VectorXd fv = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
                    const Eigen::VectorXd ftv =
                        Eigen::Map<const Eigen::VectorXd>(ft.data(), ft.size());
                    const double e = fd_energy(g, y.col(0) - fv, yt.col(0) - ftv);
                    out.times.push_back(t);
                    out.energy.push_back(e);
                    out.max_energy = std::max(out.max_energy, e);
                    if (keep_exact) out.exact.push_back(y.col(0));
                  });
  return out;
}

namespace {

ScalingRow measure(const ScalingConfig& cfg, const geometry::GeneralizedRay& ray, double eps) {
  const Vec2 lo = cfg.domain.lower();
  const Vec2 hi = cfg.domain.upper();
  const double L1 = hi.x() - lo.x(), L2 = hi.y() - lo.y();
  const int nx = grid_size_for(eps, L1, cfg.points_per_width);
  const int ny = grid_size_for(eps, L2, cfg.points_per_width);

  const GaussianBeam beam = time_symmetrize(
      build_beam(ray, eps, cfg.M0, cfg.c0, CutoffSpec{cfg.cutoff_radius}, 1, {}, 0.0), true);

  ScalingRow row;
  row.epsilon = eps;
  row.grid_n = std::max(nx, ny);

  pde::SpectralWave sw(pde::Box::rectangle(L1, L2), nx, ny);
  const pde::GridSpec g = sw.grid();
  const double cell = g.cell();
  auto point = [&](int i, int j) { return Vec2(lo.x() + g.x(i), lo.y() + g.y(j)); };

  // initial data
  Eigen::MatrixXd Y0(nx, ny), Y1(nx, ny);
  {
    const BeamSnapshot s0 = beam.snapshot(0.0);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const FieldSample f = s0.sample(point(i, j));
        Y0(i, j) = f.value.real();
        Y1(i, j) = f.dt.real();
      }
    }
  }
  row.init_velocity_L2 = sw.l2_norm(Y1);
  const double y0_l2 = sw.l2_norm(Y0);
  row.init_pos_H1 = std::hypot(y0_l2, sw.gradient_norm(Y0));
  row.init_pos_L2_plus_vel_Hminus1 = y0_l2 + sw.hminus1_norm(Y1);
  sw.set_data(Y0, Y1);

  // omega-localized H^1(0, T; L^2(omega)) norm of the exact solution
  {
    Eigen::MatrixXd w(nx, ny);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) w(i, j) = cfg.omega.contains(point(i, j)) ? cell : 0.0;
    }
    const double omax = sw.max_active_frequency(1e-10);
    const double dt_w = std::min(cfg.T / 64.0, omax > 0 ? 0.5 / omax : cfg.T / 64.0);
    const int K = static_cast<int>(std::ceil(cfg.T / dt_w - 1e-9));
    const Eigen::VectorXd tw = trapezoid_weights(K + 1, cfg.T / K);
    double acc = 0.0;
    Eigen::MatrixXd y, yt;
    for (int k = 0; k <= K; ++k) {
      sw.evaluate(cfg.T * k / K, &y, &yt);
      acc += tw(k) * (w.array() * (y.array().square() + yt.array().square())).sum();
    }
    row.omega_H1_energy = std::sqrt(acc);
  }
  const double data_norm2 = row.init_pos_H1 * row.init_pos_H1 +
                            row.init_velocity_L2 * row.init_velocity_L2;
  row.rayleigh_quotient =
      data_norm2 > 0 ? row.omega_H1_energy * row.omega_H1_energy / data_norm2 : 0.0;

  // residual, off-ray and correction at shared time samples
  const double off_radius = std::pow(eps, 0.25);
  Eigen::MatrixXd F(nx, ny), Ft(nx, ny), y, yt;
  for (int k = 1; k <= cfg.time_samples; ++k) {
    const double t = cfg.T * k / cfg.time_samples;
    const BeamSnapshot snap = beam.snapshot(t);
    const std::vector<Vec2> centers = beam.centers(t);
    double res = 0.0, off = 0.0;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const Vec2 x = point(i, j);
        const FieldSample f = snap.sample(x);
        F(i, j) = f.value.real();
        Ft(i, j) = f.dt.real();
        res += cell * std::norm(f.wave.real());
        bool near = false;
        for (const auto& c : centers) near = near || (x - c).norm() <= off_radius;
        if (!near) {
          const FieldSample u = snap.sample_uncut(x);
          off += cell * (std::norm(u.value.real()) + std::norm(u.dt.real()) +
                         std::norm(u.dx.real()) + std::norm(u.dy.real()));
        }
      }
    }
    row.pde_residual_sup = std::max(row.pde_residual_sup, std::sqrt(res));
    row.off_ray_energy = std::max(row.off_ray_energy, off);
    sw.evaluate(t, &y, &yt);
    row.correction_energy =
        std::max(row.correction_energy, std::hypot(sw.gradient_norm(y - F), sw.l2_norm(yt - Ft)));
  }

  // lateral boundary H^1 norm: value, time and tangential derivatives
  {
    const double hb = std::min(std::min(g.hx(), g.hy()), M_PI * eps / 2.0);
    const int Kt = static_cast<int>(std::ceil(cfg.T / std::min(cfg.T / 64.0, M_PI * eps / 2.0)));
    const double dtb = cfg.T / Kt;
    struct Side {
      Vec2 start;
      Vec2 dir;
      double len;
    };
    const Side sides[4] = {{lo, Vec2(1, 0), L1},
                           {Vec2(hi.x(), lo.y()), Vec2(0, 1), L2},
                           {hi, Vec2(-1, 0), L1},
                           {Vec2(lo.x(), hi.y()), Vec2(0, -1), L2}};
    double acc = 0.0;
    for (int k = 0; k < Kt; ++k) {
      const BeamSnapshot snap = beam.snapshot((k + 0.5) * dtb);
      for (const auto& s : sides) {
        const int m = static_cast<int>(std::ceil(s.len / hb));
        const double ds = s.len / m;
        for (int q = 0; q < m; ++q) {
          const FieldSample f = snap.sample(s.start + (q + 0.5) * ds * s.dir);
          const double tang = s.dir.x() * f.dx.real() + s.dir.y() * f.dy.real();
          acc += dtb * ds *
                 (std::norm(f.value.real()) + std::norm(f.dt.real()) + tang * tang);
        }
      }
    }
    row.boundary_H1 = std::sqrt(acc);
  }
  return row;
}

}  // namespace

BeamScalingReport scaling_report(const ScalingConfig& cfg) {
  if (cfg.domain.shape() != geometry::Domain2D::Shape::Rectangle) {
    throw ValidationError("beam scaling needs a rectangle domain");
  }
  if (cfg.epsilons.size() < 3) throw ValidationError("need at least three epsilons");
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
    const double e = cfg.epsilons[k];
    if (!(e > 0 && e < 1)) throw ValidationError("epsilons must lie in (0, 1)");
    if (k > 0 && !(e < cfg.epsilons[k - 1])) {
      throw ValidationError("epsilons must be strictly decreasing");
    }
  }
  if (!(cfg.T > 0)) throw ValidationError("T must be positive");
  if (cfg.time_samples < 1) throw ValidationError("time_samples must be positive");
  geometry::validate_seed(cfg.domain, cfg.seed);
  const geometry::GeneralizedRay ray = geometry::trace_ray_two_sided(cfg.domain, cfg.seed, cfg.T);
  if (!cfg.omega.empty() && geometry::ray_meets_region(ray, cfg.omega)) {
    throw ValidationError("the beam ray meets omega; choose a GCC-violating ray");
  }
  const Vec2 ext = cfg.domain.upper() - cfg.domain.lower();
  const double e_min = cfg.epsilons.back();
  const int n_need = grid_size_for(e_min, std::max(ext.x(), ext.y()), cfg.points_per_width);
  if (n_need > cfg.max_grid) {
    throw NumericalError("under-resolved", "epsilon " + std::to_string(e_min) + " needs " +
                                               std::to_string(n_need) + " points per axis (max " +
                                               std::to_string(cfg.max_grid) + ")");
  }

  BeamScalingReport rep;
  rep.epsilons = cfg.epsilons;
  rep.rows.resize(cfg.epsilons.size());
  // largest grids first for load balance
  const std::size_t n = cfg.epsilons.size();
  parallel_for(n, cfg.threads, [&](std::size_t k) {
    const std::size_t idx = n - 1 - k;
    rep.rows[idx] = measure(cfg, ray, cfg.epsilons[idx]);
  });
  rep.cutoff_radius = build_beam(ray, cfg.epsilons.front(), cfg.M0, cfg.c0,
                                 CutoffSpec{cfg.cutoff_radius}, 1)
                          .cutoff_radius();

  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (const auto& r : rep.rows) {
    vmin = std::min(vmin, r.init_velocity_L2);
    vmax = std::max(vmax, r.init_velocity_L2);
  }
  rep.velocity_ratio = vmax > 0 ? vmin / vmax : 0.0;

  for (const auto& name : scaling_metric_names()) {
    std::vector<double> xs, ys;
    bool positive = true;
    for (std::size_t k = 1; k < n; ++k) {
      const double v = metric_value(rep.rows[k], name);
      positive = positive && v > 0 && std::isfinite(v);
      xs.push_back(rep.rows[k].epsilon);
      ys.push_back(v);
    }
    std::optional<double> s;
    if (positive && xs.size() >= 2) s = fit_loglog(xs, ys).slope;
    rep.slopes.emplace_back(name, s);
  }
  return rep;
}

double memory_residual_sup(const GaussianBeam& beam, const pde::PotentialField& ahat,
                           double t_end, int time_samples, const pde::GridSpec& grid) {
  if (beam.segments().size() != 1 || beam.orientation() != Orientation::Forward) {
    throw ValidationError("memory residual needs a forward single-segment beam");
  }
  if (!(t_end > 0) || time_samples < 1) throw ValidationError("invalid residual sampling");
  if (grid.box.dim != 2) throw ValidationError("memory residual needs a planar grid");
  const BeamSegment& seg = beam.segments().front();
  const double eps = beam.epsilon();
  const std::complex<double> ie(0.0, 1.0 / eps);
  const double k2 = correction_scale(eps);
  const Vec2c pc = seg.ray.p.cast<cplx>();
  auto dot = [](const Vec2c& a, const Vec2c& b) { return a.x() * b.x() + a.y() * b.y(); };

  // steps resolving e^{i s / (2 eps)} with ~20 nodes per period and hitting every sample
  const int per_sample = std::max(
      1, static_cast<int>(std::ceil(t_end / time_samples / (4.0 * M_PI * eps / 20.0))));
  const int Q = per_sample * time_samples;
  const double h = t_end / Q;

  const int P = grid.points();
  std::vector<Vec2> xs(P);
  for (int idx = 0; idx < P; ++idx) {
    const auto [x, y] = grid.point(idx);
    xs[idx] = Vec2(x, y);
  }
  std::vector<cplx> I(P, 0.0), lapI(P, 0.0), F(P, 0.0), prev_int(P, 0.0), prev_lap(P, 0.0),
      prev_force(P, 0.0);
  std::vector<Vec2c> gradI(P, Vec2c::Zero()), prev_grad(P, Vec2c::Zero());
  double worst = 0.0;

  for (int m = 0; m <= Q; ++m) {
    const double s = m * h;
    const BeamSnapshot snap = beam.snapshot(s, false);
    const Vec2 center = seg.ray.position(s);
    const Mat2c M = seg.phase.M(s);
    const Mat2c dM = riccati_rhs(M, seg.ray.p);
    const cplx A = seg.amplitude.A(s);
    const double eta = 1e-5;
    const cplx dA = m == 0 ? (seg.amplitude.A(s + eta) - A) / eta
                           : (seg.amplitude.A(s + eta) - seg.amplitude.A(s - eta)) / (2 * eta);
    double res = 0.0;
    for (int idx = 0; idx < P; ++idx) {
      const Vec2& x = xs[idx];
      const Vec2c d = (x - center).cast<cplx>();
      const Vec2c Md = M * d;
      const cplx psi = dot(pc, d) + 0.5 * dot(d, Md);
      const cplx psi_t = 2.0 * seg.ray.p.squaredNorm() + 2.0 * dot(pc, Md) + 0.5 * dot(d, dM * d);
      const Vec2c gp = pc + Md;
      const cplx E = std::exp(ie * psi);
      const cplx w_int = A * E;
      const Vec2c w_grad = (A * ie * E) * gp;
      const cplx w_lap = A * E * (ie * M.trace() - dot(gp, gp) / (eps * eps));
      if (m > 0) {
        I[idx] += 0.5 * h * (prev_int[idx] + w_int);
        gradI[idx] += 0.5 * h * (prev_grad[idx] + w_grad);
        lapI[idx] += 0.5 * h * (prev_lap[idx] + w_lap);
      }
      prev_int[idx] = w_int;
      prev_grad[idx] = w_grad;
      prev_lap[idx] = w_lap;

      const Cutoff::Value cv = seg.cutoff.evaluate(seg.ray, s, x);
      const FieldSample L = snap.sample(x);
      const cplx J = k2 * I[idx];
      const cplx J_t = k2 * A * E;
      const cplx J_tt = k2 * (dA + ie * A * psi_t) * E;
      const Vec2c gJ = k2 * gradI[idx];
      const cplx WJ = J_tt - k2 * lapI[idx];
      const cplx phi_t = L.dt + cv.rho_t * J + cv.rho * J_t;
      const cplx Wphi = L.wave + cv.rho * WJ +
                        2.0 * (cv.rho_t * J_t - cv.grad.x() * gJ.x() - cv.grad.y() * gJ.y()) +
                        J * (cv.rho_tt - cv.lap);
      const cplx force = ahat(x.x(), x.y(), s) * phi_t;
      if (m > 0) F[idx] += 0.5 * h * (prev_force[idx] + force);
      prev_force[idx] = force;
      if (m > 0 && m % per_sample == 0) res += grid.cell() * std::norm((Wphi + F[idx]).real());
    }
    if (m > 0 && m % per_sample == 0) worst = std::max(worst, std::sqrt(res));
  }
  return worst;
}

}  // namespace codim::beam
