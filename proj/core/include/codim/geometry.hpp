#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "codim/errors.hpp"

namespace codim::geometry {

using Vec2 = Eigen::Vector2d;

/// Convex planar domain: rectangle, disk or convex polygon.
class Domain2D {
 public:
  enum class Shape { Rectangle, Disk, Polygon };

  static Domain2D rectangle(const Vec2& corner, const Vec2& widths);
  static Domain2D disk(const Vec2& center, double radius);
  /// Vertices counterclockwise, strictly convex.
  static Domain2D polygon(std::vector<Vec2> vertices);

  Shape shape() const { return shape_; }
  /// Closed-set membership.
  bool contains(const Vec2& x) const;
  /// Distance from x to the boundary when x is inside, negative outside.
  double inner_distance(const Vec2& x) const;
  /// Outward unit normal at the boundary piece nearest to x.
  Vec2 outward_normal(const Vec2& x) const;

  struct Exit {
    double distance;            // path length to the boundary
    Vec2 point;
    Vec2 normal;
    int edge = -1;              // polygon/rectangle edge index, -1 for disk
    double corner_distance = 0; // arclength to the nearest vertex (inf for disk)
  };
  /// First boundary point along x + s * dir (|dir| = 1), s > 0, for x in the closure.
  Exit exit_point(const Vec2& x, const Vec2& dir) const;

  Vec2 lower() const { return lower_; }
  Vec2 upper() const { return upper_; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  Vec2 center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Shape shape_ = Shape::Rectangle;
  std::vector<Vec2> vertices_;
  std::vector<Vec2> normals_;
  std::vector<double> offsets_;  // n_e . y <= offset_e
  Vec2 center_ = Vec2::Zero();
  double radius_ = 0;
  Vec2 lower_ = Vec2::Zero();
  Vec2 upper_ = Vec2::Zero();
};

/// Union of disks and axis-aligned rectangles, each intersected with the domain.
class ControlRegion {
 public:
  struct Disk {
    Vec2 center;
    double radius;
  };
  struct Rect {
    Vec2 lower;
    Vec2 upper;
  };

  ControlRegion() = default;
  ControlRegion(const Domain2D& dom, std::vector<Disk> disks, std::vector<Rect> rects);

  /// Strip of width w along the bounding box of a rectangle domain.
  static ControlRegion frame(const Domain2D& dom, double width);

  bool contains(const Vec2& x) const;
  bool empty() const { return disks_.empty() && rects_.empty(); }
  const std::vector<Disk>& disks() const { return disks_; }
  const std::vector<Rect>& rects() const { return rects_; }

 private:
  std::vector<Disk> disks_;
  std::vector<Rect> rects_;
};

struct RaySeed {
  Vec2 x0;
  Vec2 p0;
};

/// Validates |p0| = 1/2 and x0 strictly interior.
void validate_seed(const Domain2D& dom, const RaySeed& seed);

struct RaySegment {
  double s_begin;
  double s_end;
  Vec2 x_begin;
  Vec2 p;
  Vec2 position(double s) const { return x_begin - 2.0 * p * (s - s_begin); }
};

struct Impact {
  double time;
  Vec2 point;
  Vec2 normal;
  int edge;
  double transversality;  // |nu . p| before reflection
};

/// Piecewise straight billiard trajectory; segments ordered in time.
struct GeneralizedRay {
  std::vector<RaySegment> segments;
  std::vector<Impact> impacts;
  bool truncated_by_max_reflections = false;
  bool ends_on_boundary = false;

  double start_time() const { return segments.front().s_begin; }
  double end_time() const { return segments.back().s_end; }
  Vec2 position(double t) const;
  Vec2 momentum(double t) const;
  /// Index of the segment containing t (clamped to the ends).
  int segment_index(double t) const;
  std::vector<double> reflected_instants() const;
  std::vector<double> transversality() const;
  double min_transversality() const;
  double path_length() const;
};

/// Aborted trace; carries the trajectory up to the failing impact.
class RayTraceError : public NumericalError {
 public:
  RayTraceError(std::string code, const std::string& what, GeneralizedRay partial, double time)
      : NumericalError(std::move(code), what), partial_(std::move(partial)), time_(time) {}
  const GeneralizedRay& partial() const { return partial_; }
  double time() const { return time_; }

 private:
  GeneralizedRay partial_;
  double time_;
};

constexpr double kDefaultTangencyTol = 1e-8;
constexpr double kDefaultCornerTol = 1e-9;

/// p - 2 (nu . p) nu
Vec2 reflect(const Vec2& p, const Vec2& nu);

GeneralizedRay trace_ray(const Domain2D& dom, const RaySeed& seed, double T,
                         int max_reflections = 1000, double tangency_tol = kDefaultTangencyTol,
                         double corner_tol = kDefaultCornerTol);

/// Ray on [-T, T] through the seed at t = 0.
GeneralizedRay trace_ray_two_sided(const Domain2D& dom, const RaySeed& seed, double T,
                                   int max_reflections = 1000,
                                   double tangency_tol = kDefaultTangencyTol,
                                   double corner_tol = kDefaultCornerTol);

/// Earliest t >= ray start with position in omega; empty if never.
std::optional<double> ray_meets_region(const GeneralizedRay& ray, const ControlRegion& omega);

struct SamplingSpec {
  int positions_per_axis = 25;
  int angles = 16;
};

enum class GCCVerdict { SatisfiedOnSamples, Violated };
std::string to_string(GCCVerdict v);

struct SeedOutcome {
  RaySeed seed;
  enum class Status { Met, Missed, Skipped } status;
  std::optional<double> entry_time;
  std::string skip_reason;  // "tangential-hit" / "corner-hit"
  double skip_time = 0.0;
  double min_transversality = 0.0;
};

struct GCCReport {
  GCCVerdict verdict = GCCVerdict::SatisfiedOnSamples;
  std::optional<GeneralizedRay> witness;
  std::optional<RaySeed> witness_seed;
  double max_entry_time = 0.0;
  int seeds_traced = 0;
  int skipped = 0;
  std::vector<SeedOutcome> outcomes;
};

GCCReport check_gcc(const Domain2D& dom, const ControlRegion& omega, double T,
                    const SamplingSpec& grid, double tangency_tol = kDefaultTangencyTol,
                    int threads = 1);

/// Perpendicular bouncing-ball seed avoiding omega (rectangles only).
/// Throws ValidationError("unsupported-shape") for other domains.
std::optional<RaySeed> find_trapped_ray(const Domain2D& dom, const ControlRegion& omega,
                                        double margin = 1e-6);

}  // namespace codim::geometry
