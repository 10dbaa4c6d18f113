#include <algorithm>
#include <cmath>
#include <limits>

#include "codim/beam.hpp"
#include "codim/errors.hpp"

namespace codim::beam {

namespace {

const cplx I1(0.0, 1.0);

cplx dot(const Vec2c& a, const Vec2c& b) { return a.x() * b.x() + a.y() * b.y(); }

cplx derivative(const BeamAmplitude& amp, double t) {
  const double eta = 1e-5;
  const double lo = amp.times().front();
  const double hi = amp.times().back();
  if (t - eta < lo) return (amp.A(t + eta) - amp.A(t)) / eta;
  if (t + eta > hi) return (amp.A(t) - amp.A(t - eta)) / eta;
  return (amp.A(t + eta) - amp.A(t - eta)) / (2.0 * eta);
}

}  // namespace

FieldSample BeamSnapshot::frame_sample(const Frame& f, const Vec2& x, bool cut) const {
  FieldSample out;
  const BeamSegment& seg = *f.seg;
  Cutoff::Value cv;
  if (cut) {
    cv = seg.cutoff.evaluate(seg.ray, f.t, x);
    if (cv.rho == 0.0) return out;
  } else {
    if (f.t < seg.ray.s_begin || f.t > seg.ray.s_end) return out;
    cv.rho = 1.0;
  }

  const double eps = eps_;
  const cplx ie = I1 / eps;
  const Vec2c pc = seg.ray.p.cast<cplx>();
  const Vec2c d = (x - f.center).cast<cplx>();
  const Vec2c Md = f.M * d;
  const cplx psi = dot(pc, d) + 0.5 * dot(d, Md);
  const cplx psi_t = 2.0 * seg.ray.p.squaredNorm() + 2.0 * dot(pc, Md) + 0.5 * dot(d, f.dM * d);
  const cplx psi_tt = 4.0 * dot(pc, f.M * pc) + 4.0 * dot(pc, f.dM * d) + 0.5 * dot(d, f.d2M * d);
  const Vec2c grad_psi = pc + Md;
  const cplx lap_psi = f.M.trace();
  const cplx E = std::exp(ie * psi);
  const double kappa = leading_scale(eps);

  cplx u = kappa * f.c * E;
  cplx u_t = kappa * (f.dc + ie * f.c * psi_t) * E;
  Vec2c grad_u = (kappa * f.c * ie * E) * grad_psi;
  cplx wave_u = kappa * E *
                (f.d2c + ie * (2.0 * f.dc * psi_t + f.c * (psi_tt - lap_psi)) +
                 (f.c / (eps * eps)) * (dot(grad_psi, grad_psi) - psi_t * psi_t));

  if (cut && !f.quad.empty()) {
    cplx I = 0.0, lapI = 0.0;
    Vec2c gradI = Vec2c::Zero();
    for (const auto& q : f.quad) {
      if (q.weight == 0.0 || q.A == 0.0) continue;
      const Vec2c ds = (x - q.center).cast<cplx>();
      const Vec2c Mds = q.M * ds;
      const cplx ps = dot(pc, ds) + 0.5 * dot(ds, Mds);
      const Vec2c gs = pc + Mds;
      const cplx w = q.weight * q.A * std::exp(ie * ps);
      I += w;
      gradI += (w * ie) * gs;
      lapI += w * (ie * q.M.trace() - dot(gs, gs) / (eps * eps));
    }
    const double k2 = correction_scale(eps);
    u += k2 * I;
    u_t += k2 * f.A * E;
    grad_u += k2 * gradI;
    wave_u += k2 * ((f.dA + ie * f.A * psi_t) * E - lapI);
  }

  const cplx rho = cv.rho;
  out.value = rho * u;
  out.dt = cv.rho_t * u + rho * u_t;
  out.dx = cv.grad.x() * u + rho * grad_u.x();
  out.dy = cv.grad.y() * u + rho * grad_u.y();
  out.wave = rho * wave_u + 2.0 * (cv.rho_t * u_t - cv.grad.x() * grad_u.x() -
                                   cv.grad.y() * grad_u.y()) +
             u * (cv.rho_tt - cv.lap);
  if (f.reversed) out.dt = -out.dt;
  if (f.sign != 1.0) {
    out.value *= f.sign;
    out.dt *= f.sign;
    out.dx *= f.sign;
    out.dy *= f.sign;
    out.wave *= f.sign;
  }
  return out;
}

FieldSample BeamSnapshot::sample(const Vec2& x) const {
  FieldSample sum;
  for (const auto& f : frames_) {
    const FieldSample s = frame_sample(f, x);
    sum.value += s.value;
    sum.dt += s.dt;
    sum.dx += s.dx;
    sum.dy += s.dy;
    sum.wave += s.wave;
  }
  return sum;
}

FieldSample BeamSnapshot::sample_uncut(const Vec2& x) const {
  FieldSample sum;
  for (const auto& f : frames_) {
    const FieldSample s = frame_sample(f, x, false);
    sum.value += s.value;
    sum.dt += s.dt;
    sum.dx += s.dx;
    sum.dy += s.dy;
    sum.wave += s.wave;
  }
  return sum;
}

void GaussianBeam::add_frames(BeamSnapshot& snap, double t, double sign, bool reversed,
                              bool include_integral) const {
  const double tt = reversed ? -t : t;
  for (const auto& seg : segments_) {
    if (!seg.cutoff.active_time(tt)) continue;
    BeamSnapshot::Frame f;
    f.seg = &seg;
    f.t = tt;
    f.sign = sign;
    f.reversed = reversed;
    f.center = seg.ray.position(tt);
    f.M = seg.phase.M(tt);
    f.dM = riccati_rhs(f.M, seg.ray.p);
    f.d2M = riccati_second(f.M, f.dM, seg.ray.p);
    f.c = seg.amplitude.c(tt);
    f.dc = seg.amplitude.dc(tt);
    f.d2c = seg.amplitude.d2c(tt);
    if (seg.carries_integral && include_integral) {
      f.A = seg.amplitude.A(tt);
      f.dA = derivative(seg.amplitude, tt);
      const int n = quad_steps_;
      const double h = tt / n;
      for (int k = 0; k <= n; ++k) {
        const double s = k * h;
        BeamSnapshot::QuadNode q;
        q.weight = (k == 0 || k == n) ? 0.5 * h : h;
        q.center = seg.ray.position(s);
        q.M = seg.phase.M(s);
        q.A = seg.amplitude.A(s);
        f.quad.push_back(q);
      }
    }
    snap.frames_.push_back(std::move(f));
  }
}

BeamSnapshot GaussianBeam::snapshot(double t, bool include_integral) const {
  BeamSnapshot snap;
  snap.eps_ = eps_;
  snap.t_ = t;
  switch (orientation_) {
    case Orientation::Forward:
      add_frames(snap, t, 1.0, false, include_integral);
      break;
    case Orientation::OddSymmetrized:
      add_frames(snap, t, 1.0, false, include_integral);
      add_frames(snap, t, -1.0, true, include_integral);
      break;
    case Orientation::EvenSymmetrized:
      add_frames(snap, t, 1.0, false, include_integral);
      add_frames(snap, t, 1.0, true, include_integral);
      break;
  }
  return snap;
}

std::vector<Vec2> GaussianBeam::centers(double t) const {
  std::vector<Vec2> out;
  auto add = [&](double s) {
    for (const auto& seg : segments_) {
      if (s >= seg.ray.s_begin && s <= seg.ray.s_end) {
        out.push_back(seg.ray.position(s));
        return;
      }
    }
  };
  add(t);
  if (orientation_ != Orientation::Forward) add(-t);
  return out;
}

GaussianBeam build_beam(const geometry::GeneralizedRay& ray, double epsilon, const Mat2c& M0,
                        cplx c0, const CutoffSpec& cutoffs, int quad_steps,
                        const pde::PotentialField& ahat, double phase_dt) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
  if (ray.segments.empty()) throw ValidationError("ray has no segments");
  if (quad_steps < 1) throw ValidationError("quad_steps must be positive");
  const auto& segs = ray.segments;
  const std::size_t ns = segs.size();
  if (ray.impacts.size() + 1 != ns) throw ValidationError("ray impacts do not match segments");

  double dwell = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j + 1 < ns; ++j) dwell = std::min(dwell, segs[j].s_end - segs[j].s_begin);
  if (!std::isfinite(dwell)) {
    for (const auto& s : segs) dwell = std::max(0.0, std::min(dwell, s.s_end - s.s_begin));
  }
  if (!(dwell > 0)) throw ValidationError("ray has a degenerate segment");
  const double r_max = dwell / 4.0;
  double r = r_max;
  if (cutoffs.radius > 0.0) {
    if (cutoffs.radius > r_max * (1.0 + 1e-12)) {
      throw NumericalError("cutoff-overlap",
                           "cutoff radius " + std::to_string(cutoffs.radius) +
                               " exceeds a quarter of the dwell time " + std::to_string(dwell));
    }
    r = cutoffs.radius;
  } else if (cutoffs.radius < 0.0) {
    throw ValidationError("cutoff radius must be nonnegative");
  }
  const double dt = phase_dt > 0.0 ? phase_dt : std::min(0.005, r / 32.0);

  std::size_t anchor = 0;
  double t_anchor = segs.front().s_begin;
  for (std::size_t j = 0; j < ns; ++j) {
    if (segs[j].s_begin <= 0.0 && 0.0 <= segs[j].s_end) {
      anchor = j;
      t_anchor = 0.0;
      break;
    }
  }

  GaussianBeam beam;
  beam.eps_ = epsilon;
  beam.radius_ = r;
  beam.quad_steps_ = quad_steps;
  beam.segments_.resize(ns);
  auto setup = [&](std::size_t j) {
    BeamSegment& b = beam.segments_[j];
    b.ray = segs[j];
    b.cutoff = Cutoff{segs[j].s_begin, segs[j].s_end, r};
  };
  setup(anchor);
  {
    BeamSegment& b = beam.segments_[anchor];
    b.phase = propagate_phase(segs[anchor], M0, t_anchor, segs[anchor].s_begin - r,
                              segs[anchor].s_end + r, dt);
    b.amplitude = propagate_amplitude(b.phase, c0, t_anchor, ahat);
    b.carries_integral = !ahat.is_zero();
  }
  for (std::size_t j = anchor + 1; j < ns; ++j) {
    setup(j);
    const BeamSegment& prev = beam.segments_[j - 1];
    const auto& impact = ray.impacts[j - 1];
    ReflectedData rd = reflect_beam(prev.phase, prev.amplitude, impact, segs[j],
                                    segs[j].s_begin - r, segs[j].s_end + r, dt);
    beam.segments_[j].phase = rd.phase;
    beam.segments_[j].amplitude = propagate_amplitude(rd.phase, rd.c_matched, impact.time);
  }
  for (std::size_t j = anchor; j-- > 0;) {
    setup(j);
    const BeamSegment& next = beam.segments_[j + 1];
    const auto& impact = ray.impacts[j];
    ReflectedData rd = reflect_beam(next.phase, next.amplitude, impact, segs[j],
                                    segs[j].s_begin - r, segs[j].s_end + r, dt);
    beam.segments_[j].phase = rd.phase;
    beam.segments_[j].amplitude = propagate_amplitude(rd.phase, rd.c_matched, impact.time);
  }
  return beam;
}

GaussianBeam time_symmetrize(const GaussianBeam& beam, bool odd) {
  if (beam.orientation_ != Orientation::Forward) {
    throw ValidationError("beam is already symmetrized");
  }
  if (!(beam.segments_.front().ray.s_begin < 0.0)) {
    throw ValidationError("time symmetrization needs a ray traced over negative times");
  }
  GaussianBeam out = beam;
  out.orientation_ = odd ? Orientation::OddSymmetrized : Orientation::EvenSymmetrized;
  return out;
}

}  // namespace codim::beam
