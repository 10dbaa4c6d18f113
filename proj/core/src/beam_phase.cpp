#include <algorithm>
#include <cmath>

#include "codim/beam.hpp"
#include "codim/errors.hpp"

namespace codim::beam {

namespace {

const cplx I1(0.0, 1.0);

Mat2c outer(const Vec2& p) {
  Mat2c P;
  P << p.x() * p.x(), p.x() * p.y(), p.y() * p.x(), p.y() * p.y();
  return P;
}

Mat2c symmetrize(const Mat2c& M) { return 0.5 * (M + M.transpose()); }

struct Hermite {
  double h00, h10, h01, h11;
  explicit Hermite(double s)
      : h00(2 * s * s * s - 3 * s * s + 1),
        h10(s * s * s - 2 * s * s + s),
        h01(-2 * s * s * s + 3 * s * s),
        h11(s * s * s - s * s) {}
};

// Index i with times[i] <= t <= times[i+1], clamped.
std::size_t bracket(const std::vector<double>& times, double t) {
  if (t <= times.front()) return 0;
  if (t >= times.back()) return times.size() - 2;
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return static_cast<std::size_t>(it - times.begin()) - 1;
}

void check_range(const std::vector<double>& times, double t) {
  const double slack = 1e-9 * std::max(1.0, std::abs(t));
  if (t < times.front() - slack || t > times.back() + slack) {
    throw ValidationError("beam phase evaluated outside its propagated range");
  }
}

Mat2c rk4_step(const Mat2c& M, const Vec2& p, double h) {
  const Mat2c k1 = riccati_rhs(M, p);
  const Mat2c k2 = riccati_rhs(M + 0.5 * h * k1, p);
  const Mat2c k3 = riccati_rhs(M + 0.5 * h * k2, p);
  const Mat2c k4 = riccati_rhs(M + h * k3, p);
  return symmetrize(M + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

void check_definite(const Mat2c& M, double t) {
  if (!(min_imag_eigenvalue(M) >= 1e-12)) {
    throw NumericalError("loss-of-definiteness",
                         "Im M lost positive definiteness at t = " + std::to_string(t));
  }
}

}  // namespace

double leading_scale(double eps) { return std::pow(eps, 1.0 - kSpaceDim / 4.0); }
double correction_scale(double eps) { return std::pow(eps, 2.0 - kSpaceDim / 4.0); }

Mat2c riccati_rhs(const Mat2c& M, const Vec2& p) {
  return 2.0 * M * M - 8.0 * M * outer(p) * M;
}

Mat2c riccati_second(const Mat2c& M, const Mat2c& dM, const Vec2& p) {
  const Mat2c P = outer(p);
  return 2.0 * (dM * M + M * dM) - 8.0 * (dM * P * M + M * P * dM);
}

double min_imag_eigenvalue(const Mat2c& M) {
  const double a = 0.5 * (M(0, 0).imag() + M(0, 0).imag());
  const double d = M(1, 1).imag();
  const double b = 0.5 * (M(0, 1).imag() + M(1, 0).imag());
  const double mean = 0.5 * (a + d);
  const double rad = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  return mean - rad;
}

Mat2c BeamPhase::M(double t) const {
  check_range(times_, t);
  const std::size_t i = bracket(times_, t);
  const double h = times_[i + 1] - times_[i];
  const Hermite H((t - times_[i]) / h);
  const Vec2& p = segment_.p;
  return H.h00 * M_[i] + (H.h10 * h) * riccati_rhs(M_[i], p) + H.h01 * M_[i + 1] +
         (H.h11 * h) * riccati_rhs(M_[i + 1], p);
}

Mat2c BeamPhase::d2M(double t) const {
  const Mat2c m = M(t);
  return riccati_second(m, riccati_rhs(m, segment_.p), segment_.p);
}

double BeamPhase::min_imag_eigenvalue() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : M_) m = std::min(m, beam::min_imag_eigenvalue(s));
  return m;
}

double BeamPhase::max_asymmetry() const {
  double m = 0.0;
  for (const auto& s : M_) m = std::max(m, (s - s.transpose()).norm());
  return m;
}

BeamPhase propagate_phase(const geometry::RaySegment& segment, const Mat2c& M_anchor,
                          double t_anchor, double t_lo, double t_hi, double dt) {
  if (!(dt > 0)) throw ValidationError("phase step must be positive");
  if (!(t_lo <= t_anchor && t_anchor <= t_hi) || !(t_hi > t_lo)) {
    throw ValidationError("phase anchor must lie in the propagation range");
  }
  if ((M_anchor - M_anchor.transpose()).norm() > 1e-10 * std::max(1.0, M_anchor.norm())) {
    throw ValidationError("initial phase matrix must be symmetric");
  }
  if (!(min_imag_eigenvalue(M_anchor) > 0)) {
    throw ValidationError("initial phase matrix needs positive definite imaginary part");
  }
  const Vec2& p = segment.p;
  BeamPhase out;
  out.segment_ = segment;

  std::vector<double> back_t;
  std::vector<Mat2c> back_M;
  if (t_anchor > t_lo) {
    const int n = static_cast<int>(std::ceil((t_anchor - t_lo) / dt - 1e-9));
    const double h = (t_anchor - t_lo) / n;
    Mat2c M = symmetrize(M_anchor);
    for (int k = 1; k <= n; ++k) {
      M = rk4_step(M, p, -h);
      const double t = k == n ? t_lo : t_anchor - k * h;
      check_definite(M, t);
      back_t.push_back(t);
      back_M.push_back(M);
    }
  }
  for (std::size_t k = back_t.size(); k-- > 0;) {
    out.times_.push_back(back_t[k]);
    out.M_.push_back(back_M[k]);
  }
  out.times_.push_back(t_anchor);
  out.M_.push_back(symmetrize(M_anchor));
  if (t_hi > t_anchor) {
    const int n = static_cast<int>(std::ceil((t_hi - t_anchor) / dt - 1e-9));
    const double h = (t_hi - t_anchor) / n;
    Mat2c M = symmetrize(M_anchor);
    for (int k = 1; k <= n; ++k) {
      M = rk4_step(M, p, h);
      const double t = k == n ? t_hi : t_anchor + k * h;
      check_definite(M, t);
      out.times_.push_back(t);
      out.M_.push_back(M);
    }
  }
  return out;
}

BeamPhase propagate_phase(const geometry::RaySegment& segment, const Mat2c& M0, double dt) {
  const double len = segment.s_end - segment.s_begin;
  if (dt > len / 64.0 * (1.0 + 1e-12)) {
    throw ValidationError("phase step must not exceed segment length / 64");
  }
  return propagate_phase(segment, M0, segment.s_begin, segment.s_begin, segment.s_end, dt);
}

cplx BeamAmplitude::transport_rate(double t) const {
  const Mat2c M = phase_.M(t);
  const Vec2& p = phase_.segment().p;
  const Vec2c pc = p.cast<cplx>();
  return 4.0 * (pc.transpose() * M * pc)(0, 0) - M.trace();
}

cplx BeamAmplitude::c(double t) const {
  check_range(times_, t);
  const std::size_t i = bracket(times_, t);
  const double h = times_[i + 1] - times_[i];
  const Hermite H((t - times_[i]) / h);
  // log c' = -g
  auto g_at = [&](std::size_t k) {
    const Mat2c& M = phase_.samples()[k];
    const Vec2c pc = phase_.segment().p.cast<cplx>();
    return 4.0 * (pc.transpose() * M * pc)(0, 0) - M.trace();
  };
  const cplx logc = H.h00 * logc_[i] - (H.h10 * h) * g_at(i) + H.h01 * logc_[i + 1] -
                    (H.h11 * h) * g_at(i + 1);
  return std::exp(logc);
}

cplx BeamAmplitude::dc(double t) const { return -transport_rate(t) * c(t); }

cplx BeamAmplitude::d2c(double t) const {
  const Mat2c M = phase_.M(t);
  const Mat2c dM = riccati_rhs(M, phase_.segment().p);
  const Vec2c pc = phase_.segment().p.cast<cplx>();
  const cplx g = 4.0 * (pc.transpose() * M * pc)(0, 0) - M.trace();
  const cplx dg = 4.0 * (pc.transpose() * dM * pc)(0, 0) - dM.trace();
  return c(t) * (g * g - dg);
}

cplx BeamAmplitude::A(double s) const {
  if (ahat_.is_zero()) return 0.0;
  const Vec2 x = phase_.center(s);
  return 2.0 * I1 * c(s) * ahat_(x.x(), x.y(), s);
}

BeamAmplitude propagate_amplitude(const BeamPhase& phase, cplx c_anchor, double t_anchor,
                                  const pde::PotentialField& ahat) {
  if (c_anchor == 0.0) throw ValidationError("amplitude seed c0 must be nonzero");
  BeamAmplitude amp;
  amp.phase_ = phase;
  amp.c_anchor_ = c_anchor;
  amp.t_anchor_ = t_anchor;
  amp.ahat_ = ahat;
  amp.times_ = phase.times();
  const auto& ts = amp.times_;
  const std::size_t n = ts.size();
  std::size_t anchor = n;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(ts[k] - t_anchor) <= 1e-12 * std::max(1.0, std::abs(t_anchor))) anchor = k;
  }
  if (anchor == n) throw ValidationError("amplitude anchor must be a phase sample time");

  auto rate = [&](double t) { return amp.transport_rate(t); };
  amp.logc_.assign(n, 0.0);
  amp.logc_[anchor] = std::log(c_anchor);
  // Simpson increments of -g, midpoint from the Hermite phase
  for (std::size_t k = anchor; k + 1 < n; ++k) {
    const double h = ts[k + 1] - ts[k];
    amp.logc_[k + 1] =
        amp.logc_[k] - h / 6.0 * (rate(ts[k]) + 4.0 * rate(ts[k] + 0.5 * h) + rate(ts[k + 1]));
  }
  for (std::size_t k = anchor; k > 0; --k) {
    const double h = ts[k] - ts[k - 1];
    amp.logc_[k - 1] =
        amp.logc_[k] + h / 6.0 * (rate(ts[k - 1]) + 4.0 * rate(ts[k - 1] + 0.5 * h) + rate(ts[k]));
  }
  for (std::size_t k = 0; k < n; ++k) {
    amp.c_.push_back(std::exp(amp.logc_[k]));
    amp.A_.push_back(amp.A(ts[k]));
  }
  return amp;
}

BeamAmplitude propagate_amplitude(const BeamPhase& phase, cplx c0) {
  return propagate_amplitude(phase, c0, phase.t_lo());
}

PhaseDerivatives phase_derivatives(const BeamPhase& phase, double t, const Vec2& x) {
  const Vec2& p = phase.segment().p;
  const Vec2c pc = p.cast<cplx>();
  const Vec2c d = (x - phase.center(t)).cast<cplx>();
  const Mat2c M = phase.M(t);
  const Mat2c dM = riccati_rhs(M, p);
  const Mat2c d2M = riccati_second(M, dM, p);
  PhaseDerivatives out;
  out.psi = pc.dot(d) + 0.5 * (d.transpose() * M * d)(0, 0);
  out.psi_t = 2.0 * p.squaredNorm() + 2.0 * (pc.transpose() * M * d)(0, 0) +
              0.5 * (d.transpose() * dM * d)(0, 0);
  out.psi_tt = 4.0 * (pc.transpose() * M * pc)(0, 0) + 4.0 * (pc.transpose() * dM * d)(0, 0) +
               0.5 * (d.transpose() * d2M * d)(0, 0);
  out.grad_psi = pc + M * d;
  out.lap_psi = M.trace();
  return out;
}

double eikonal_residual(const BeamPhase& phase, double t, double rho, int samples) {
  const Vec2 c = phase.center(t);
  double worst = 0.0;
  for (int r = 1; r <= 2; ++r) {
    const double radius = rho * r / 2.0;
    for (int k = 0; k < samples; ++k) {
      const double th = 2.0 * M_PI * k / samples;
      const Vec2 x = c + radius * Vec2(std::cos(th), std::sin(th));
      const PhaseDerivatives d = phase_derivatives(phase, t, x);
      const cplx res = d.psi_t * d.psi_t - (d.grad_psi.transpose() * d.grad_psi)(0, 0);
      worst = std::max(worst, std::abs(res));
    }
  }
  return worst;
}

double transport_residual(const BeamPhase& phase, const BeamAmplitude& amp, double t) {
  const double eta = 1e-5;
  const double lo = amp.times().front() + 2 * eta;
  const double hi = amp.times().back() - 2 * eta;
  const double tc = std::clamp(t, lo, hi);
  const cplx dc = (-amp.c(tc + 2 * eta) + 8.0 * amp.c(tc + eta) - 8.0 * amp.c(tc - eta) +
                   amp.c(tc - 2 * eta)) /
                  (12.0 * eta);
  const PhaseDerivatives d = phase_derivatives(phase, tc, phase.center(tc));
  const cplx c = amp.c(tc);
  return std::abs(2.0 * dc * d.psi_t + c * (d.psi_tt - d.lap_psi)) / std::abs(c);
}

ReflectedData reflect_beam(const BeamPhase& incoming, const BeamAmplitude& incoming_amp,
                           const geometry::Impact& impact, const geometry::RaySegment& next,
                           double t_lo, double t_hi, double dt, double tangency_tol) {
  const Vec2& nu = impact.normal;
  const double trans = std::abs(nu.dot(incoming.segment().p));
  if (trans < tangency_tol) {
    throw NumericalError("non-transversal-impact",
                         "beam reflection needs a transversal impact at t = " +
                             std::to_string(impact.time));
  }
  const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() - 2.0 * nu * nu.transpose();
  const Mat2c Rc = R.cast<cplx>();
  ReflectedData out;
  out.M_matched = symmetrize(Rc * incoming.M(impact.time) * Rc);
  if (!(min_imag_eigenvalue(out.M_matched) > 0)) {
    throw NumericalError("definiteness-violation",
                         "matched phase matrix lost positive imaginary part");
  }
  out.c_matched = -incoming_amp.c(impact.time);
  out.phase = propagate_phase(next, out.M_matched, impact.time, t_lo, t_hi, dt);
  return out;
}

double bump(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  const double z = 2.0 * s - 1.0;
  return 1.0 - z * z * z * (10.0 - 15.0 * z + 6.0 * z * z);
}

double bump_d1(double s) {
  if (s <= 0.5 || s >= 1.0) return 0.0;
  const double z = 2.0 * s - 1.0;
  return -2.0 * 30.0 * z * z * (1.0 - z) * (1.0 - z);
}

double bump_d2(double s) {
  if (s <= 0.5 || s >= 1.0) return 0.0;
  const double z = 2.0 * s - 1.0;
  return -4.0 * 60.0 * z * (1.0 - z) * (1.0 - 2.0 * z);
}

Cutoff::Value Cutoff::evaluate(const geometry::RaySegment& seg, double t, const Vec2& x) const {
  Value v;
  if (!active_time(t)) return v;
  const Eigen::Vector3d u(1.0, -2.0 * seg.p.x(), -2.0 * seg.p.y());
  const Vec2 xa = seg.position(a);
  const Eigen::Vector3d w(t - a, x.x() - xa.x(), x.y() - xa.y());
  const double uu = u.squaredNorm();
  double tau = w.dot(u) / uu;
  bool interior = true;
  if (tau <= 0.0) {
    tau = 0.0;
    interior = false;
  } else if (tau >= b - a) {
    tau = b - a;
    interior = false;
  }
  const Eigen::Vector3d diff = w - tau * u;
  const double d = diff.norm();
  if (d >= radius) return v;
  if (d <= 0.5 * radius) {
    v.rho = 1.0;
    return v;
  }
  const double s = d / radius;
  v.rho = bump(s);
  const double b1 = bump_d1(s) / radius;
  const double b2 = bump_d2(s) / (radius * radius);
  const Eigen::Vector3d n = diff / d;
  Eigen::Matrix3d Hd = Eigen::Matrix3d::Identity() - n * n.transpose();
  if (interior) Hd -= u * u.transpose() / uu;
  Hd /= d;
  const Eigen::Matrix3d H = b2 * n * n.transpose() + b1 * Hd;
  v.rho_t = b1 * n(0);
  v.grad = b1 * Vec2(n(1), n(2));
  v.rho_tt = H(0, 0);
  v.lap = H(1, 1) + H(2, 2);
  return v;
}

}  // namespace codim::beam
