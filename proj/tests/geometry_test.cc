#include "codim/geometry.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace codim {
namespace geometry {
namespace {

const Domain2D kSquare = Domain2D::rectangle(Vec2(0, 0), Vec2(1, 1));

GTEST_TEST(Reflect, HandExamples) {
  EXPECT_LT((reflect(Vec2(0, -0.5), Vec2(0, -1)) - Vec2(0, 0.5)).norm(), 1e-15);
  EXPECT_LT((reflect(Vec2(0.5, 0), Vec2(0, -1)) - Vec2(0.5, 0)).norm(), 1e-15);
  EXPECT_LT((reflect(Vec2(0.3, -0.4), Vec2(0, -1)) - Vec2(0.3, 0.4)).norm(), 1e-15);
  EXPECT_THROW(reflect(Vec2(0.3, -0.4), Vec2(0, -2)), ValidationError);
}

GTEST_TEST(Reflect, IsometryAndInvolutionProperty) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 10000; ++i) {
    const Vec2 p(u(rng), u(rng));
    const Vec2 nu = Vec2(u(rng), u(rng)).normalized();
    const Vec2 q = reflect(p, nu);
    const Vec2 tangent(-nu.y(), nu.x());
    EXPECT_NEAR(q.norm(), p.norm(), 1e-12);
    EXPECT_NEAR(q.dot(tangent), p.dot(tangent), 1e-12);
    EXPECT_NEAR(q.dot(nu), -p.dot(nu), 1e-12);
    EXPECT_LT((reflect(q, nu) - p).norm(), 1e-12);
  }
}

GTEST_TEST(Domain2D, PolygonMustBeConvexCounterclockwise) {
  EXPECT_NO_THROW(Domain2D::polygon({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}));
  EXPECT_THROW(Domain2D::polygon({Vec2(0, 0), Vec2(0, 1), Vec2(1, 0)}), ValidationError);
  EXPECT_THROW(Domain2D::polygon({Vec2(0, 0), Vec2(2, 0), Vec2(1, 0.1), Vec2(2, 2), Vec2(0, 2)}),
               ValidationError);
}

GTEST_TEST(Domain2D, UnitNormals) {
  const Domain2D disk = Domain2D::disk(Vec2(0.3, -0.2), 1.5);
  const Domain2D hex = Domain2D::polygon({Vec2(1, 0), Vec2(0.5, 0.9), Vec2(-0.5, 0.9),
                                          Vec2(-1, 0), Vec2(-0.5, -0.9), Vec2(0.5, -0.9)});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int i = 0; i < 200; ++i) {
    const Vec2 x(u(rng), u(rng));
    for (const Domain2D* d : {&kSquare, &disk, &hex}) {
      EXPECT_NEAR(d->outward_normal(x).norm(), 1.0, 1e-12);
    }
  }
}

GTEST_TEST(TraceRay, VerticalBouncingBall) {
  const auto ray = trace_ray(kSquare, {Vec2(0.5, 0.5), Vec2(0, -0.5)}, 2.0);
  ASSERT_EQ(ray.impacts.size(), 2u);
  EXPECT_NEAR(ray.impacts[0].time, 0.5, 1e-12);
  EXPECT_NEAR(ray.impacts[1].time, 1.5, 1e-12);
  // x_s = -2p moves the ray upward first
  EXPECT_NEAR(ray.impacts[0].point.y(), 1.0, 1e-12);
  EXPECT_NEAR(ray.impacts[1].point.y(), 0.0, 1e-12);
  EXPECT_LT((ray.position(2.0) - Vec2(0.5, 0.5)).norm(), 1e-12);
  EXPECT_NEAR(ray.path_length(), 2.0, 1e-9 * 2.0);
}

GTEST_TEST(TraceRay, DiskRadialRetroreflects) {
  const Domain2D disk = Domain2D::disk(Vec2(0, 0), 1.0);
  for (double angle : {0.0, 0.7, 2.1, 4.0}) {
    const Vec2 p0 = 0.5 * Vec2(std::cos(angle), std::sin(angle));
    const auto ray = trace_ray(disk, {Vec2(0, 0), p0}, 1.5);
    ASSERT_GE(ray.impacts.size(), 1u);
    EXPECT_NEAR(ray.impacts[0].time, 1.0, 1e-12);
    EXPECT_LT((ray.segments[1].p + p0).norm(), 1e-12);
  }
}

GTEST_TEST(TraceRay, DiagonalBilliardTransversality) {
  const Vec2 p0 = 0.5 * Vec2(1, 1) / std::sqrt(2.0);
  // offset seed so the diagonal orbit avoids corners
  const auto ray = trace_ray(kSquare, {Vec2(0.5, 0.3), p0}, 6.0);
  ASSERT_GT(ray.impacts.size(), 4u);
  for (const auto& im : ray.impacts) {
    EXPECT_NEAR(im.transversality, 1.0 / (2.0 * std::sqrt(2.0)), 1e-12);
  }
}

GTEST_TEST(TraceRay, CornerAndTangentialHitsAbort) {
  const Vec2 p0 = 0.5 * Vec2(1, 1) / std::sqrt(2.0);
  try {
    trace_ray(kSquare, {Vec2(0.5, 0.5), p0}, 2.0);
    FAIL() << "expected corner-hit";
  } catch (const RayTraceError& e) {
    EXPECT_EQ(e.code(), "corner-hit");
    EXPECT_NEAR(e.time(), std::sqrt(0.5), 1e-9);
  }
  // grazing approach to the bottom side: |nu . p| = 5e-9
  const Vec2 dir = Vec2(1.0, -1e-8).normalized();
  try {
    trace_ray(kSquare, {Vec2(0.5, 1e-9), -0.5 * dir}, 2.0);
    FAIL() << "expected tangential-hit";
  } catch (const RayTraceError& e) {
    EXPECT_EQ(e.code(), "tangential-hit");
  }
}

GTEST_TEST(TraceRay, ConservationProperties) {
  const Domain2D hex = Domain2D::polygon({Vec2(1, 0), Vec2(0.5, 0.9), Vec2(-0.5, 0.9),
                                          Vec2(-1, 0), Vec2(-0.5, -0.9), Vec2(0.5, -0.9)});
  const Domain2D disk = Domain2D::disk(Vec2(0, 0), 1.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(-0.4, 0.4), ang(0, 2 * M_PI);
  int traced = 0;
  for (const Domain2D* d : {&kSquare, &hex, &disk}) {
    for (int i = 0; i < 40; ++i) {
      const Vec2 x0 = d == &kSquare ? Vec2(0.5 + pos(rng), 0.5 + pos(rng)) : Vec2(pos(rng), pos(rng));
      const double a = ang(rng);
      const RaySeed seed{x0, 0.5 * Vec2(std::cos(a), std::sin(a))};
      GeneralizedRay ray;
      try {
        ray = trace_ray(*d, seed, 40.0);
      } catch (const RayTraceError&) {
        continue;
      }
      ++traced;
      EXPECT_NEAR(ray.path_length(), 40.0, 1e-9 * 40.0);
      for (const auto& s : ray.segments) EXPECT_NEAR(s.p.norm(), 0.5, 1e-10);
      for (std::size_t k = 1; k < ray.segments.size(); ++k) {
        const auto& prev = ray.segments[k - 1];
        EXPECT_LT((prev.position(prev.s_end) - ray.segments[k].x_begin).norm(), 1e-10);
      }
    }
  }
  EXPECT_GT(traced, 100);
}

GTEST_TEST(TraceRay, TwoSidedCoversSymmetricInterval) {
  const auto ray = trace_ray_two_sided(kSquare, {Vec2(0.65, 0.5), Vec2(0, -0.5)}, 1.0);
  EXPECT_NEAR(ray.start_time(), -1.0, 1e-14);
  EXPECT_NEAR(ray.end_time(), 1.0, 1e-14);
  EXPECT_LT((ray.position(0.0) - Vec2(0.65, 0.5)).norm(), 1e-12);
  EXPECT_LT((ray.position(-0.5) - Vec2(0.65, 0.0)).norm(), 1e-12);
}

GTEST_TEST(RayMeetsRegion, KinematicEntryTimes) {
  const auto ray = trace_ray(kSquare, {Vec2(0.5, 0.5), Vec2(0, 0.5)}, 2.0);
  const ControlRegion small(kSquare, {{Vec2(0.5, 0.1), 0.05}}, {});
  const auto t = ray_meets_region(ray, small);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t, 0.35, 1e-12);
  const ControlRegion all(kSquare, {}, {{Vec2(0, 0), Vec2(1, 1)}});
  EXPECT_EQ(ray_meets_region(ray, all).value_or(-1), 0.0);
  const ControlRegion aside(kSquare, {{Vec2(0.1, 0.5), 0.05}}, {});
  EXPECT_FALSE(ray_meets_region(ray, aside).has_value());
}

GTEST_TEST(CheckGcc, FrameSatisfied) {
  const auto frame = ControlRegion::frame(kSquare, 0.1);
  const auto rep = check_gcc(kSquare, frame, 4.0, {25, 16});
  EXPECT_EQ(rep.verdict, GCCVerdict::SatisfiedOnSamples);
  EXPECT_LE(rep.max_entry_time, 2.0);
  EXPECT_GE(rep.seeds_traced, 10000);
}

GTEST_TEST(CheckGcc, InteriorDiskViolatedWithTransversalWitness) {
  const ControlRegion omega(kSquare, {{Vec2(0.2, 0.5), 0.1}}, {});
  const auto rep = check_gcc(kSquare, omega, 4.0, {25, 16});
  ASSERT_EQ(rep.verdict, GCCVerdict::Violated);
  ASSERT_TRUE(rep.witness.has_value());
  EXPECT_NEAR(rep.witness->min_transversality(), 0.5, 1e-12);
  // independent retrace of the witness seed
  const auto again = trace_ray(kSquare, *rep.witness_seed, 4.0);
  EXPECT_FALSE(ray_meets_region(again, omega).has_value());
}

GTEST_TEST(CheckGcc, WholeDomainEntersImmediately) {
  const ControlRegion all(kSquare, {}, {{Vec2(0, 0), Vec2(1, 1)}});
  const auto rep = check_gcc(kSquare, all, 1.0, {6, 4});
  EXPECT_EQ(rep.verdict, GCCVerdict::SatisfiedOnSamples);
  EXPECT_EQ(rep.max_entry_time, 0.0);
}

GTEST_TEST(CheckGcc, ThreadCountDoesNotChangeOutcome) {
  const ControlRegion omega(kSquare, {{Vec2(0.2, 0.5), 0.1}}, {});
  const auto a = check_gcc(kSquare, omega, 3.0, {10, 8}, kDefaultTangencyTol, 1);
  const auto b = check_gcc(kSquare, omega, 3.0, {10, 8}, kDefaultTangencyTol, 3);
  ASSERT_EQ(a.outcomes.size(), b.outcomes.size());
  for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
    EXPECT_EQ(a.outcomes[i].status, b.outcomes[i].status);
  }
  EXPECT_EQ(a.max_entry_time, b.max_entry_time);
}

GTEST_TEST(FindTrappedRay, SquareWithDisk) {
  const ControlRegion omega(kSquare, {{Vec2(0.2, 0.5), 0.1}}, {});
  const auto seed = find_trapped_ray(kSquare, omega);
  ASSERT_TRUE(seed.has_value());
  EXPECT_FALSE(seed->x0.x() >= 0.1 - 1e-6 && seed->x0.x() <= 0.3 + 1e-6);
  EXPECT_NEAR(seed->p0.norm(), 0.5, 1e-15);
  const auto ray = trace_ray(kSquare, *seed, 5.0);
  EXPECT_FALSE(ray_meets_region(ray, omega).has_value());
  for (double tr : ray.transversality()) EXPECT_NEAR(tr, 0.5, 1e-15);
}

GTEST_TEST(FindTrappedRay, FrameHasNoneAndOtherShapesUnsupported) {
  EXPECT_FALSE(find_trapped_ray(kSquare, ControlRegion::frame(kSquare, 0.1)).has_value());
  const Domain2D disk = Domain2D::disk(Vec2(0, 0), 1.0);
  EXPECT_THROW(find_trapped_ray(disk, ControlRegion(disk, {{Vec2(0, 0), 0.1}}, {})),
               ValidationError);
}

GTEST_TEST(WhisperingGallery, NearTangentialSeedsAvoidConcentricDisk) {
  const Domain2D disk = Domain2D::disk(Vec2(0, 0), 1.0);
  const ControlRegion inner(disk, {{Vec2(0, 0), 0.5}}, {});
  for (int k = 0; k < 12; ++k) {
    const double a = 2 * M_PI * k / 12.0;
    const Vec2 radial(std::cos(a), std::sin(a));
    const Vec2 tangent(-radial.y(), radial.x());
    // chord at distance 0.9 from the center: inradius of the orbit is 0.9
    const RaySeed seed{0.9 * radial, 0.5 * tangent};
    const auto ray = trace_ray(disk, seed, 30.0);
    EXPECT_FALSE(ray_meets_region(ray, inner).has_value());
    for (const auto& s : ray.segments) {
      const Vec2 d = -2.0 * s.p;
      const double dist = std::abs(s.x_begin.x() * d.y() - s.x_begin.y() * d.x()) / d.norm();
      EXPECT_NEAR(dist, 0.9, 1e-9);
    }
  }
}

GTEST_TEST(RaySeed, Validation) {
  EXPECT_THROW(validate_seed(kSquare, {Vec2(0.5, 0.5), Vec2(0, 1)}), ValidationError);
  EXPECT_THROW(validate_seed(kSquare, {Vec2(1.0, 0.5), Vec2(0, 0.5)}), ValidationError);
  EXPECT_NO_THROW(validate_seed(kSquare, {Vec2(0.2, 0.5), Vec2(0, 0.5)}));
}

}  // namespace
}  // namespace geometry
}  // namespace codim
