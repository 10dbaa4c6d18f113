#include "codim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "codim/numerics.hpp"

namespace codim::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

std::optional<double> segment_disk_entry(const Vec2& xb, const Vec2& d, double len,
                                         const ControlRegion::Disk& disk) {
  const Vec2 q = xb - disk.center;
  const double c = q.squaredNorm() - disk.radius * disk.radius;
  if (c <= 0) return 0.0;
  const double b = q.dot(d);
  const double disc = b * b - c;
  if (disc < 0) return std::nullopt;
  const double tau = -b - std::sqrt(disc);
  if (tau >= 0 && tau <= len) return tau;
  return std::nullopt;
}

std::optional<double> segment_rect_entry(const Vec2& xb, const Vec2& d, double len,
                                         const ControlRegion::Rect& r) {
  double lo = 0.0, hi = len;
  for (int i = 0; i < 2; ++i) {
    if (d(i) == 0.0) {
      if (xb(i) < r.lower(i) || xb(i) > r.upper(i)) return std::nullopt;
      continue;
    }
    double t1 = (r.lower(i) - xb(i)) / d(i);
    double t2 = (r.upper(i) - xb(i)) / d(i);
    if (t1 > t2) std::swap(t1, t2);
    lo = std::max(lo, t1);
    hi = std::min(hi, t2);
    if (lo > hi) return std::nullopt;
  }
  return lo;
}

GeneralizedRay reverse_in_time(const GeneralizedRay& back) {
  GeneralizedRay out;
  for (auto it = back.segments.rbegin(); it != back.segments.rend(); ++it) {
    RaySegment seg;
    seg.s_begin = -it->s_end;
    seg.s_end = -it->s_begin;
    seg.x_begin = it->position(it->s_end);
    seg.p = -it->p;
    out.segments.push_back(seg);
  }
  for (auto it = back.impacts.rbegin(); it != back.impacts.rend(); ++it) {
    Impact imp = *it;
    imp.time = -it->time;
    out.impacts.push_back(imp);
  }
  return out;
}

}  // namespace

Domain2D Domain2D::rectangle(const Vec2& corner, const Vec2& widths) {
  if (!(widths.x() > 0 && widths.y() > 0)) {
    throw ValidationError("rectangle widths must be positive");
  }
  const Vec2 hi = corner + widths;
  Domain2D d = polygon({corner, Vec2(hi.x(), corner.y()), hi, Vec2(corner.x(), hi.y())});
  d.shape_ = Shape::Rectangle;
  return d;
}

Domain2D Domain2D::disk(const Vec2& center, double radius) {
  if (!(radius > 0)) throw ValidationError("disk radius must be positive");
  Domain2D d;
  d.shape_ = Shape::Disk;
  d.center_ = center;
  d.radius_ = radius;
  d.lower_ = center - Vec2::Constant(radius);
  d.upper_ = center + Vec2::Constant(radius);
  return d;
}

Domain2D Domain2D::polygon(std::vector<Vec2> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) throw ValidationError("polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e1 = vertices[(i + 1) % n] - vertices[i];
    const Vec2 e2 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
    if (!(cross(e1, e2) > 0)) {
      throw ValidationError("polygon must be counterclockwise and strictly convex");
    }
  }
  Domain2D d;
  d.shape_ = Shape::Polygon;
  d.vertices_ = std::move(vertices);
  d.lower_ = d.upper_ = d.vertices_[0];
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = d.vertices_[(i + 1) % n] - d.vertices_[i];
    const Vec2 nu = Vec2(e.y(), -e.x()).normalized();
    d.normals_.push_back(nu);
    d.offsets_.push_back(nu.dot(d.vertices_[i]));
    d.lower_ = d.lower_.cwiseMin(d.vertices_[i]);
    d.upper_ = d.upper_.cwiseMax(d.vertices_[i]);
  }
  Vec2 c = Vec2::Zero();
  for (const auto& v : d.vertices_) c += v;
  d.center_ = c / static_cast<double>(n);
  return d;
}

double Domain2D::inner_distance(const Vec2& x) const {
  if (shape_ == Shape::Disk) return radius_ - (x - center_).norm();
  double dist = kInf;
  for (std::size_t e = 0; e < normals_.size(); ++e) {
    dist = std::min(dist, offsets_[e] - normals_[e].dot(x));
  }
  return dist;
}

bool Domain2D::contains(const Vec2& x) const { return inner_distance(x) >= 0.0; }

Vec2 Domain2D::outward_normal(const Vec2& x) const {
  if (shape_ == Shape::Disk) return (x - center_).normalized();
  std::size_t best = 0;
  double gap = kInf;
  for (std::size_t e = 0; e < normals_.size(); ++e) {
    const double g = std::abs(offsets_[e] - normals_[e].dot(x));
    if (g < gap) {
      gap = g;
      best = e;
    }
  }
  return normals_[best];
}

Domain2D::Exit Domain2D::exit_point(const Vec2& x, const Vec2& dir) const {
  Exit ex;
  if (shape_ == Shape::Disk) {
    const Vec2 q = x - center_;
    const double b = q.dot(dir);
    const double c = q.squaredNorm() - radius_ * radius_;
    const double disc = std::max(0.0, b * b - c);
    ex.distance = std::max(0.0, -b + std::sqrt(disc));
    ex.point = x + ex.distance * dir;
    ex.normal = (ex.point - center_).normalized();
    ex.edge = -1;
    ex.corner_distance = kInf;
    return ex;
  }
  ex.distance = kInf;
  for (std::size_t e = 0; e < normals_.size(); ++e) {
    const double nd = normals_[e].dot(dir);
    if (nd <= 0) continue;
    const double s = std::max(0.0, (offsets_[e] - normals_[e].dot(x)) / nd);
    if (s < ex.distance) {
      ex.distance = s;
      ex.edge = static_cast<int>(e);
    }
  }
  if (ex.edge < 0) throw NumericalError("no-exit", "ray direction has no boundary exit");
  ex.point = x + ex.distance * dir;
  ex.normal = normals_[ex.edge];
  const std::size_t n = vertices_.size();
  const Vec2& a = vertices_[ex.edge];
  const Vec2& b = vertices_[(ex.edge + 1) % n];
  ex.corner_distance = std::min((ex.point - a).norm(), (ex.point - b).norm());
  return ex;
}

ControlRegion::ControlRegion(const Domain2D& dom, std::vector<Disk> disks, std::vector<Rect> rects)
    : disks_(std::move(disks)), rects_(std::move(rects)) {
  auto meets_interior = [&](auto&& inside_part, const Vec2& lo, const Vec2& hi) {
    constexpr int kSamples = 16;
    for (int i = 0; i <= kSamples; ++i) {
      for (int j = 0; j <= kSamples; ++j) {
        const Vec2 x(lo.x() + (hi.x() - lo.x()) * i / kSamples,
                     lo.y() + (hi.y() - lo.y()) * j / kSamples);
        if (inside_part(x) && dom.inner_distance(x) > 0) return true;
      }
    }
    return false;
  };
  for (const auto& d : disks_) {
    if (!(d.radius > 0)) throw ValidationError("control disk radius must be positive");
    const bool ok = dom.inner_distance(d.center) > 0 ||
                    meets_interior([&](const Vec2& x) { return (x - d.center).norm() < d.radius; },
                                   d.center - Vec2::Constant(d.radius),
                                   d.center + Vec2::Constant(d.radius));
    if (!ok) throw ValidationError("control disk does not meet the domain interior");
  }
  for (const auto& r : rects_) {
    if (!(r.upper.x() > r.lower.x() && r.upper.y() > r.lower.y())) {
      throw ValidationError("control rectangle must have positive widths");
    }
    const Vec2 mid = 0.5 * (r.lower + r.upper);
    const bool ok = dom.inner_distance(mid) > 0 ||
                    meets_interior(
                        [&](const Vec2& x) {
                          return (x.array() > r.lower.array()).all() &&
                                 (x.array() < r.upper.array()).all();
                        },
                        r.lower, r.upper);
    if (!ok) throw ValidationError("control rectangle does not meet the domain interior");
  }
}

ControlRegion ControlRegion::frame(const Domain2D& dom, double width) {
  if (dom.shape() != Domain2D::Shape::Rectangle) {
    throw ValidationError("frame control region needs a rectangle domain");
  }
  const Vec2 lo = dom.lower(), hi = dom.upper();
  if (!(width > 0) || 2 * width >= std::min(hi.x() - lo.x(), hi.y() - lo.y())) {
    throw ValidationError("frame width must be positive and below half the side length");
  }
  std::vector<Rect> rects{
      {lo, Vec2(hi.x(), lo.y() + width)},
      {Vec2(lo.x(), hi.y() - width), hi},
      {Vec2(lo.x(), lo.y() + width), Vec2(lo.x() + width, hi.y() - width)},
      {Vec2(hi.x() - width, lo.y() + width), Vec2(hi.x(), hi.y() - width)},
  };
  return ControlRegion(dom, {}, std::move(rects));
}

bool ControlRegion::contains(const Vec2& x) const {
  for (const auto& d : disks_) {
    if ((x - d.center).squaredNorm() <= d.radius * d.radius) return true;
  }
  for (const auto& r : rects_) {
    if ((x.array() >= r.lower.array()).all() && (x.array() <= r.upper.array()).all()) return true;
  }
  return false;
}

void validate_seed(const Domain2D& dom, const RaySeed& seed) {
  if (std::abs(seed.p0.norm() - 0.5) > 1e-12) {
    throw ValidationError("ray seed momentum must have |p0| = 1/2");
  }
  if (!(dom.inner_distance(seed.x0) > 0)) {
    throw ValidationError("ray seed position must be strictly interior");
  }
}

Vec2 reflect(const Vec2& p, const Vec2& nu) {
  if (std::abs(nu.norm() - 1.0) > 1e-9) throw ValidationError("reflect: normal must be unit");
  return p - 2.0 * nu.dot(p) * nu;
}

int GeneralizedRay::segment_index(double t) const {
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    if (t < segments[i].s_end) return static_cast<int>(i);
  }
  return static_cast<int>(segments.size()) - 1;
}

Vec2 GeneralizedRay::position(double t) const { return segments[segment_index(t)].position(t); }

Vec2 GeneralizedRay::momentum(double t) const { return segments[segment_index(t)].p; }

std::vector<double> GeneralizedRay::reflected_instants() const {
  std::vector<double> out;
  for (const auto& imp : impacts) out.push_back(imp.time);
  return out;
}

std::vector<double> GeneralizedRay::transversality() const {
  std::vector<double> out;
  for (const auto& imp : impacts) out.push_back(imp.transversality);
  return out;
}

double GeneralizedRay::min_transversality() const {
  double m = 0.5;
  for (const auto& imp : impacts) m = std::min(m, imp.transversality);
  return m;
}

double GeneralizedRay::path_length() const {
  double len = 0;
  for (const auto& s : segments) len += (s.s_end - s.s_begin) * 2.0 * s.p.norm();
  return len;
}

GeneralizedRay trace_ray(const Domain2D& dom, const RaySeed& seed, double T, int max_reflections,
                         double tangency_tol, double corner_tol) {
  validate_seed(dom, seed);
  if (!(T > 0)) throw ValidationError("trace_ray: T must be positive");
  GeneralizedRay ray;
  Vec2 x = seed.x0;
  Vec2 p = seed.p0;
  double s = 0.0;
  int reflections = 0;
  while (true) {
    const Vec2 dir = -2.0 * p;
    const Domain2D::Exit ex = dom.exit_point(x, dir.normalized());
    const double dt = ex.distance / dir.norm();
    if (s + dt >= T) {
      ray.segments.push_back({s, T, x, p});
      ray.ends_on_boundary = std::abs(s + dt - T) <= 1e-12 * std::max(1.0, T);
      break;
    }
    const double t_hit = s + dt;
    ray.segments.push_back({s, t_hit, x, p});
    const double trans = std::abs(ex.normal.dot(p));
    if (trans < tangency_tol) {
      throw RayTraceError("tangential-hit",
                          "tangential boundary hit at t = " + std::to_string(t_hit), ray, t_hit);
    }
    if (ex.corner_distance < corner_tol) {
      throw RayTraceError("corner-hit", "corner hit at t = " + std::to_string(t_hit), ray, t_hit);
    }
    ray.impacts.push_back({t_hit, ex.point, ex.normal, ex.edge, trans});
    if (++reflections >= max_reflections) {
      ray.truncated_by_max_reflections = true;
      break;
    }
    p = reflect(p, ex.normal);
    x = ex.point;
    s = t_hit;
  }
  return ray;
}

GeneralizedRay trace_ray_two_sided(const Domain2D& dom, const RaySeed& seed, double T,
                                   int max_reflections, double tangency_tol, double corner_tol) {
  const GeneralizedRay fwd = trace_ray(dom, seed, T, max_reflections, tangency_tol, corner_tol);
  const GeneralizedRay back =
      trace_ray(dom, {seed.x0, -seed.p0}, T, max_reflections, tangency_tol, corner_tol);
  GeneralizedRay out = reverse_in_time(back);
  // the pieces adjacent to t = 0 lie on one line with one momentum
  RaySegment& joint = out.segments.back();
  joint.s_end = fwd.segments.front().s_end;
  for (std::size_t i = 1; i < fwd.segments.size(); ++i) out.segments.push_back(fwd.segments[i]);
  for (const auto& imp : fwd.impacts) out.impacts.push_back(imp);
  out.truncated_by_max_reflections =
      fwd.truncated_by_max_reflections || back.truncated_by_max_reflections;
  out.ends_on_boundary = fwd.ends_on_boundary || back.ends_on_boundary;
  return out;
}

std::optional<double> ray_meets_region(const GeneralizedRay& ray, const ControlRegion& omega) {
  for (const auto& seg : ray.segments) {
    const double speed = 2.0 * seg.p.norm();
    const Vec2 d = -2.0 * seg.p / speed;
    const double len = (seg.s_end - seg.s_begin) * speed;
    double best = kInf;
    for (const auto& disk : omega.disks()) {
      if (auto tau = segment_disk_entry(seg.x_begin, d, len, disk)) best = std::min(best, *tau);
    }
    for (const auto& rect : omega.rects()) {
      if (auto tau = segment_rect_entry(seg.x_begin, d, len, rect)) best = std::min(best, *tau);
    }
    if (best < kInf) return seg.s_begin + best / speed;
  }
  return std::nullopt;
}

std::string to_string(GCCVerdict v) {
  return v == GCCVerdict::Violated ? "VIOLATED" : "SATISFIED_ON_SAMPLES";
}

GCCReport check_gcc(const Domain2D& dom, const ControlRegion& omega, double T,
                    const SamplingSpec& grid, double tangency_tol, int threads) {
  if (grid.positions_per_axis < 4 || grid.angles < 4) {
    throw ValidationError("check_gcc: sampling needs >= 4 positions per axis and >= 4 angles");
  }
  std::vector<RaySeed> seeds;
  const Vec2 lo = dom.lower(), hi = dom.upper();
  const int P = grid.positions_per_axis;
  for (int i = 0; i < P; ++i) {
    for (int j = 0; j < P; ++j) {
      const Vec2 x(lo.x() + (hi.x() - lo.x()) * (i + 0.5) / P,
                   lo.y() + (hi.y() - lo.y()) * (j + 0.5) / P);
      if (!(dom.inner_distance(x) > 1e-9)) continue;
      for (int k = 0; k < grid.angles; ++k) {
        const double th = 2.0 * M_PI * k / grid.angles;
        seeds.push_back({x, Vec2(0.5 * std::cos(th), 0.5 * std::sin(th))});
      }
    }
  }

  GCCReport rep;
  rep.outcomes.resize(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t idx) {
    SeedOutcome out;
    out.seed = seeds[idx];
    try {
      const GeneralizedRay ray = trace_ray(dom, seeds[idx], T, 100000, tangency_tol);
      out.entry_time = ray_meets_region(ray, omega);
      out.status = out.entry_time ? SeedOutcome::Status::Met : SeedOutcome::Status::Missed;
      out.min_transversality = ray.min_transversality();
    } catch (const RayTraceError& err) {
      out.entry_time = ray_meets_region(err.partial(), omega);
      if (out.entry_time) {
        out.status = SeedOutcome::Status::Met;
      } else {
        out.status = SeedOutcome::Status::Skipped;
        out.skip_reason = err.code();
        out.skip_time = err.time();
      }
    }
    rep.outcomes[idx] = out;
  });

  rep.seeds_traced = static_cast<int>(seeds.size());
  std::optional<std::size_t> witness;
  for (std::size_t i = 0; i < rep.outcomes.size(); ++i) {
    const auto& o = rep.outcomes[i];
    switch (o.status) {
      case SeedOutcome::Status::Met:
        rep.max_entry_time = std::max(rep.max_entry_time, *o.entry_time);
        break;
      case SeedOutcome::Status::Skipped:
        ++rep.skipped;
        break;
      case SeedOutcome::Status::Missed:
        if (!witness || o.min_transversality > rep.outcomes[*witness].min_transversality) {
          witness = i;
        }
        break;
    }
  }
  if (witness) {
    rep.verdict = GCCVerdict::Violated;
    rep.witness_seed = rep.outcomes[*witness].seed;
    rep.witness = trace_ray(dom, *rep.witness_seed, T, 100000, tangency_tol);
  } else {
    rep.verdict = GCCVerdict::SatisfiedOnSamples;
  }
  return rep;
}

std::optional<RaySeed> find_trapped_ray(const Domain2D& dom, const ControlRegion& omega,
                                        double margin) {
  if (dom.shape() != Domain2D::Shape::Rectangle) {
    throw ValidationError("unsupported-shape: find_trapped_ray needs a rectangle domain");
  }
  const Vec2 lo = dom.lower(), hi = dom.upper();
  // axis 0: vertical lines x = c; axis 1: horizontal lines y = c
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<std::pair<double, double>> blocked;
    for (const auto& d : omega.disks()) {
      blocked.emplace_back(d.center(axis) - d.radius - margin, d.center(axis) + d.radius + margin);
    }
    for (const auto& r : omega.rects()) {
      blocked.emplace_back(r.lower(axis) - margin, r.upper(axis) + margin);
    }
    std::sort(blocked.begin(), blocked.end());
    double cursor = lo(axis);
    double best_len = 0.0, best_mid = 0.0;
    auto consider = [&](double a, double b) {
      if (b - a > best_len) {
        best_len = b - a;
        best_mid = 0.5 * (a + b);
      }
    };
    for (const auto& [a, b] : blocked) {
      if (a > cursor) consider(cursor, std::min(a, hi(axis)));
      cursor = std::max(cursor, b);
      if (cursor >= hi(axis)) break;
    }
    if (cursor < hi(axis)) consider(cursor, hi(axis));
    if (best_len > 0) {
      RaySeed seed;
      const int other = 1 - axis;
      seed.x0(axis) = best_mid;
      seed.x0(other) = 0.5 * (lo(other) + hi(other));
      seed.p0 = Vec2::Zero();
      seed.p0(other) = -0.5;
      return seed;
    }
  }
  return std::nullopt;
}

}  // namespace codim::geometry
