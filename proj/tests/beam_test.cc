#include "codim/beam.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "codim/errors.hpp"
#include "codim/numerics.hpp"

namespace codim {
namespace beam {
namespace {

using geometry::Domain2D;
using geometry::RaySegment;

const cplx I(0.0, 1.0);
const Domain2D kSquare = Domain2D::rectangle(Vec2(0, 0), Vec2(1, 1));

RaySegment straight(const Vec2& x0, const Vec2& p, double len) { return {0.0, len, x0, p}; }

// Closed-form Riccati solution: (M^{-1})' = -(2 I - 8 p p^T).
Mat2c riccati_oracle(const Mat2c& M0, const Vec2& p, double t) {
  const Eigen::Matrix2d Q = 2.0 * Eigen::Matrix2d::Identity() - 8.0 * p * p.transpose();
  return (M0.inverse() - t * Q.cast<cplx>()).inverse();
}

GTEST_TEST(PropagatePhase, MatchesClosedFormRiccati) {
  Mat2c M0;
  M0 << cplx(0.3, 1.0), cplx(-0.2, 0.1),
        cplx(-0.2, 0.1), cplx(0.1, 0.7);
  for (double angle : {0.0, 0.6, 2.0}) {
    const Vec2 p = 0.5 * Vec2(std::cos(angle), std::sin(angle));
    const auto phase = propagate_phase(straight(Vec2(0.5, 0.5), p, 2.0), M0, 0.005);
    for (double t : {0.0, 0.37, 1.1, 2.0}) {
      EXPECT_LT((phase.M(t) - riccati_oracle(M0, p, t)).norm(), 1e-9) << "t = " << t;
    }
    EXPECT_LE(phase.max_asymmetry(), 1e-10);
    EXPECT_GT(phase.min_imag_eigenvalue(), 0.0);
  }
}

GTEST_TEST(PropagatePhase, RiccatiAnnihilatesSecondOrderTerm) {
  const Mat2c M0 = I * Mat2c::Identity();
  const Vec2 p = 0.5 * Vec2(0.6, -0.8);
  const auto phase = propagate_phase(straight(Vec2(0.5, 0.5), p, 1.0), M0, 0.01);
  const Eigen::Matrix2cd pp = (p * p.transpose()).cast<cplx>();
  const Mat2c r = M0 * M0 - 4.0 * M0 * pp * M0 - 0.5 * phase.dM(0.0);
  EXPECT_LE(r.norm(), 1e-8);
}

GTEST_TEST(PropagatePhase, RejectsBadInput) {
  const auto seg = straight(Vec2(0.5, 0.5), Vec2(0.5, 0), 1.0);
  Mat2c asym = I * Mat2c::Identity();
  asym(0, 1) = 0.3;
  EXPECT_THROW(propagate_phase(seg, asym, 0.01), ValidationError);
  EXPECT_THROW(propagate_phase(seg, -I * Mat2c::Identity(), 0.01), std::exception);
  EXPECT_THROW(propagate_phase(seg, I * Mat2c::Identity(), 0.1), ValidationError);
}

// psi(x, t) = p . d + d^T M(t) d / 2 with d = x - xhat(t), differentiated numerically.
double fd_eikonal_sup(const BeamPhase& phase, double t, double rho) {
  const Vec2 p = phase.segment().p;
  auto psi = [&](const Vec2& x, double s) {
    const Eigen::Vector2cd d = (x - phase.center(s)).cast<cplx>();
    return p.cast<cplx>().dot(d) + 0.5 * (d.transpose() * phase.M(s) * d)(0, 0);
  };
  const double h = 1e-4;
  double worst = 0;
  for (int i = -4; i <= 4; ++i) {
    for (int j = -4; j <= 4; ++j) {
      const Vec2 delta(rho * i / 4.0, rho * j / 4.0);
      if (delta.norm() > rho + 1e-15) continue;
      const Vec2 x = phase.center(t) + delta;
      const cplx pt = (psi(x, t + h) - psi(x, t - h)) / (2 * h);
      const cplx px = (psi(x + Vec2(h, 0), t) - psi(x - Vec2(h, 0), t)) / (2 * h);
      const cplx py = (psi(x + Vec2(0, h), t) - psi(x - Vec2(0, h), t)) / (2 * h);
      worst = std::max(worst, std::abs(pt * pt - px * px - py * py));
    }
  }
  return worst;
}

GTEST_TEST(EikonalResidual, CubicScalingOnDeltaGrid) {
  const auto phase = propagate_phase(straight(Vec2(0.3, 0.5), Vec2(0.5, 0), 1.0),
                                     I * Mat2c::Identity(), 0.005);
  const std::vector<double> rhos{0.1, 0.05, 0.025, 0.0125};
  for (double t : {0.05, 0.4}) {
    std::vector<double> fd, lib;
    for (double rho : rhos) {
      fd.push_back(fd_eikonal_sup(phase, t, rho));
      lib.push_back(eikonal_residual(phase, t, rho));
    }
    EXPECT_GE(fit_loglog(rhos, fd).slope, 2.7) << "t = " << t;
    EXPECT_GE(fit_loglog(rhos, lib).slope, 2.7) << "t = " << t;
  }
}

GTEST_TEST(PropagateAmplitude, ClosedFormDeterminantSolution) {
  Mat2c M0;
  M0 << cplx(0.1, 0.8), cplx(0.05, -0.1),
        cplx(0.05, -0.1), cplx(-0.2, 1.2);
  const Vec2 p = 0.5 * Vec2(0.8, 0.6);
  const cplx c0(0.7, -0.3);
  const auto phase = propagate_phase(straight(Vec2(0.5, 0.5), p, 1.5), M0, 0.005);
  const auto amp = propagate_amplitude(phase, c0);
  // c(t)^2 = c0^2 det M(t) / det M0 along the continuous branch
  cplx prev = c0;
  for (int k = 1; k <= 30; ++k) {
    const double t = 1.5 * k / 30;
    cplx root = c0 * std::sqrt(riccati_oracle(M0, p, t).determinant() / M0.determinant());
    if (std::abs(root - prev) > std::abs(root + prev)) root = -root;
    EXPECT_LT(std::abs(amp.c(t) - root), 1e-8 * std::abs(root)) << "t = " << t;
    prev = root;
  }
}

GTEST_TEST(PropagateAmplitude, TransportResidualAndLowerOrderAmplitude) {
  const auto phase = propagate_phase(straight(Vec2(0.2, 0.5), Vec2(-0.5, 0), 0.6),
                                     I * Mat2c::Identity(), 0.005);
  const auto zero = propagate_amplitude(phase, 1.0, 0.0, pde::PotentialField::zero());
  for (double s : {0.1, 0.3}) EXPECT_EQ(std::abs(zero.A(s)), 0.0);
  const auto a = pde::PotentialField::from_function([](double x, double, double t) {
    return 1.0 + x * t;
  });
  const auto amp = propagate_amplitude(phase, cplx(1.0, 0.5), 0.0, a);
  for (double t : amp.times()) {
    EXPECT_LE(transport_residual(phase, amp, t), 1e-8);
    EXPECT_GT(std::abs(amp.c(t)), 0.0);
    const Vec2 x = phase.center(t);
    EXPECT_LT(std::abs(amp.A(t) - 2.0 * I * amp.c(t) * a(x.x(), x.y(), t)), 1e-12);
  }
  EXPECT_THROW(propagate_amplitude(phase, 0.0), ValidationError);
}

GTEST_TEST(ReflectBeam, PerpendicularMirrorSymmetry) {
  // downward vertical ray hits y = 0 at t = 0.5
  const auto ray = geometry::trace_ray(kSquare, {Vec2(0.5, 0.5), Vec2(0, 0.5)}, 0.9);
  ASSERT_EQ(ray.impacts.size(), 1u);
  const auto& im = ray.impacts[0];
  const auto in = propagate_phase(ray.segments[0], I * Mat2c::Identity(), 0.5, 0.0, 0.5, 0.005);
  const auto amp = propagate_amplitude(in, cplx(0.4, 0.2), 0.5);
  const auto out = reflect_beam(in, amp, im, ray.segments[1], 0.5, 0.9, 0.005);
  EXPECT_LT((out.M_matched - I * Mat2c::Identity()).norm(), 1e-12);
  EXPECT_LT(std::abs(out.c_matched + amp.c(0.5)), 1e-15);
}

GTEST_TEST(ReflectBeam, TangentialPhaseMatchingOnFlatWall) {
  const auto ray = geometry::trace_ray(kSquare, {Vec2(0.5, 0.5), 0.5 * Vec2(0.6, 0.8)}, 0.8);
  ASSERT_GE(ray.impacts.size(), 1u);
  const auto& im = ray.impacts[0];
  Mat2c M;
  M << cplx(0.2, 0.9), cplx(0.3, 0.2),
       cplx(0.3, 0.2), cplx(-0.1, 0.6);
  const auto in = propagate_phase(ray.segments[0], M, 0.0, 0.0, im.time, 0.002);
  const auto amp = propagate_amplitude(in, 1.0);
  const auto out = reflect_beam(in, amp, im, ray.segments[1], im.time, ray.end_time(), 0.002);
  const Vec2 tangent(-im.normal.y(), im.normal.x());
  for (double s : {-0.05, -0.01, 0.02, 0.04}) {
    const Vec2 x = im.point + s * tangent;
    const auto a = phase_derivatives(in, im.time, x);
    const auto b = phase_derivatives(out.phase, im.time, x);
    EXPECT_LT(std::abs(a.psi - b.psi), 1e-12) << "s = " << s;
  }
  // tangential derivative of the phase at the impact point
  const auto a0 = phase_derivatives(in, im.time, im.point);
  const auto b0 = phase_derivatives(out.phase, im.time, im.point);
  EXPECT_LT(std::abs(a0.grad_psi.dot(tangent.cast<cplx>()) - b0.grad_psi.dot(tangent.cast<cplx>())),
            1e-12);
}

GTEST_TEST(ReflectBeam, TangentialImpactRejected) {
  const auto seg = straight(Vec2(0.5, 1e-9), -0.5 * Vec2(1.0, -1e-9).normalized(), 0.2);
  const auto in = propagate_phase(seg, I * Mat2c::Identity(), 0.002);
  const auto amp = propagate_amplitude(in, 1.0);
  geometry::Impact im{0.1, Vec2(0.6, 0.0), Vec2(0, -1), 0, 0.0};
  try {
    reflect_beam(in, amp, im, seg, 0.1, 0.2, 0.002);
    FAIL() << "expected non-transversal-impact";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), "non-transversal-impact");
  }
}

GTEST_TEST(Cutoff, BumpIsC2) {
  EXPECT_EQ(bump(0.0), 1.0);
  EXPECT_EQ(bump(0.5), 1.0);
  EXPECT_EQ(bump(1.0), 0.0);
  EXPECT_EQ(bump(3.0), 0.0);
  const double h = 1e-6;
  for (double s : {0.6, 0.75, 0.9}) {
    EXPECT_NEAR(bump_d1(s), (bump(s + h) - bump(s - h)) / (2 * h), 1e-6);
    EXPECT_NEAR(bump_d2(s), (bump_d1(s + h) - bump_d1(s - h)) / (2 * h), 1e-5);
  }
  for (double knot : {0.5, 1.0}) {
    EXPECT_NEAR(bump_d1(knot - 1e-9), bump_d1(knot + 1e-9), 1e-6);
    EXPECT_NEAR(bump_d2(knot - 1e-9), bump_d2(knot + 1e-9), 1e-6);
  }
}

GaussianBeam bouncing_beam(double eps, bool two_sided = true) {
  const geometry::RaySeed seed{Vec2(0.65, 0.5), Vec2(0, -0.5)};
  const auto ray = two_sided ? geometry::trace_ray_two_sided(kSquare, seed, 1.0)
                             : geometry::trace_ray(kSquare, seed, 1.0);
  Mat2c M0 = Mat2c::Zero();
  M0(0, 0) = 0.5 * I;
  M0(1, 1) = I;
  return build_beam(ray, eps, M0, 1.0);
}

GTEST_TEST(BuildBeam, VanishesOutsideCutoffs) {
  const auto beam = bouncing_beam(1.0 / 64);
  EXPECT_NEAR(beam.cutoff_radius(), 0.25 * 1.0, 1e-12);
  for (double t : {-0.8, -0.2, 0.0, 0.3, 0.9}) {
    const auto snap = beam.snapshot(t);
    for (double x : {0.05, 0.2, 0.95}) {
      for (double y : {0.1, 0.5, 0.9}) {
        // farther than the cutoff radius from every ray position
        const auto s = snap.sample(Vec2(x, y));
        EXPECT_EQ(s.value, cplx(0.0));
        EXPECT_EQ(s.dt, cplx(0.0));
        EXPECT_EQ(s.wave, cplx(0.0));
      }
    }
    EXPECT_NE(std::abs(snap.sample(Vec2(0.65, beam.centers(t)[0].y())).value), 0.0);
  }
}

GTEST_TEST(BuildBeam, CutoffOverlapRejected) {
  const auto ray = geometry::trace_ray_two_sided(kSquare, {Vec2(0.65, 0.5), Vec2(0, -0.5)}, 1.0);
  try {
    build_beam(ray, 1.0 / 64, I * Mat2c::Identity(), 1.0, {0.3});
    FAIL() << "expected cutoff-overlap";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), "cutoff-overlap");
  }
}

GTEST_TEST(BuildBeam, MatchesLeadingGaussianOnTheRay) {
  const double eps = 1.0 / 256;
  const auto beam = bouncing_beam(eps, false);
  const auto& seg = beam.segments().front();
  const double t = 0.2;
  const Vec2 x = seg.phase.center(t) + Vec2(0.01, -0.02);
  const auto d = phase_derivatives(seg.phase, t, x);
  const cplx expected = leading_scale(eps) * seg.amplitude.c(t) * std::exp(I * d.psi / eps);
  const auto snap = beam.snapshot(t, false);
  EXPECT_LT(std::abs(snap.sample(x).value - expected), 1e-12 * std::abs(expected));
}

GTEST_TEST(TimeSymmetrize, OddAndEvenInitialData) {
  const auto beam = bouncing_beam(1.0 / 32);
  const auto odd = time_symmetrize(beam, true);
  const auto even = time_symmetrize(beam, false);
  const auto so = odd.snapshot(0.0);
  const auto se = even.snapshot(0.0);
  for (double y : {0.4, 0.5, 0.55, 0.7}) {
    const Vec2 x(0.63, y);
    EXPECT_LT(std::abs(so.sample(x).value), 1e-14);
    EXPECT_LT(std::abs(se.sample(x).dt), 1e-14);
    EXPECT_GT(std::abs(so.sample(x).dt), 0.0);
  }
  // support is the union over +t and -t
  for (double t : {0.3, 0.8}) {
    const auto c = odd.centers(t);
    ASSERT_EQ(c.size(), 2u);
    const Vec2 a = beam.centers(t)[0], b = beam.centers(-t)[0];
    const bool same = (c[0] - a).norm() < 1e-12 && (c[1] - b).norm() < 1e-12;
    const bool swapped = (c[0] - b).norm() < 1e-12 && (c[1] - a).norm() < 1e-12;
    EXPECT_TRUE(same || swapped) << "t = " << t;
  }
  const auto fwd = bouncing_beam(1.0 / 32, false);
  EXPECT_THROW(time_symmetrize(fwd), ValidationError);
}

GTEST_TEST(CorrectToExact, ExactSolutionNeedsNoCorrection) {
  const double w = M_PI * std::sqrt(5.0);
  const FieldFn mode = [w](const Vec2& x, double t) {
    FieldSample s;
    const double sx = std::sin(M_PI * x.x()), sy = std::sin(2 * M_PI * x.y());
    s.value = std::cos(w * t) * sx * sy;
    s.dt = -w * std::sin(w * t) * sx * sy;
    s.dx = std::cos(w * t) * M_PI * std::cos(M_PI * x.x()) * sy;
    s.dy = std::cos(w * t) * 2 * M_PI * sx * std::cos(2 * M_PI * x.y());
    s.wave = 0.0;
    return s;
  };
  const auto res = correct_to_exact(mode, 1.0, SpectralHandle{pde::Box::rectangle(1, 1), 63}, 16);
  EXPECT_LT(res.max_energy, 1e-10);
  const FiniteDifferenceHandle fd{pde::GridSpec::wave(pde::Box::rectangle(1, 1), 63, 63), {}, {}};
  const auto res_fd = correct_to_exact(mode, 1.0, fd, 16);
  EXPECT_LT(res_fd.max_energy, 2e-2);
}

GTEST_TEST(GridSize, ResolvesBeamWidth) {
  for (int k = 4; k <= 10; ++k) {
    const double eps = std::pow(2.0, -k);
    const int n = grid_size_for(eps, 1.0, 12);
    EXPECT_GE(n + 1, std::ceil(12 / std::sqrt(eps)));
    int m = n + 1;
    for (int f : {2, 3, 5}) {
      while (m % f == 0) m /= f;
    }
    EXPECT_EQ(m, 1);
  }
}

GTEST_TEST(MemoryResidual, SingleSegmentHalfOrderScaling) {
  const auto ray = geometry::trace_ray(kSquare, {Vec2(0.1, 0.5), Vec2(-0.5, 0)}, 0.8);
  ASSERT_EQ(ray.segments.size(), 1u);
  const auto ahat = pde::PotentialField::from_function([](double x, double y, double t) {
    return 1.0 + 0.5 * std::sin(3 * x) * std::cos(2 * y) + 0.2 * t;
  });
  std::vector<double> eps, res;
  for (int k = 4; k <= 9; ++k) {
    const double e = std::pow(2.0, -k);
    const auto beam = build_beam(ray, e, I * Mat2c::Identity(), 1.0, {0.2}, 256, ahat);
    const int n = grid_size_for(e, 1.0, 12);
    const auto grid = pde::GridSpec::rectangle(1, 1, n, n, 1e-3);
    eps.push_back(e);
    res.push_back(memory_residual_sup(beam, ahat, 0.8, 16, grid));
  }
  EXPECT_GE(fit_loglog(eps, res).slope, 0.45);
}

ScalingConfig small_config() {
  ScalingConfig cfg;
  cfg.omega = geometry::ControlRegion(kSquare, {{Vec2(0.2, 0.5), 0.1}}, {});
  cfg.seed = {Vec2(0.65, 0.5), Vec2(0, -0.5)};
  cfg.M0 = Mat2c::Zero();
  cfg.M0(0, 0) = 0.5 * I;
  cfg.M0(1, 1) = I;
  cfg.epsilons = {1.0 / 16, 1.0 / 32, 1.0 / 64};
  cfg.time_samples = 16;
  return cfg;
}

GTEST_TEST(ScalingReport, MetricsNonnegativeAndEchoed) {
  const auto cfg = small_config();
  const auto rep = scaling_report(cfg);
  ASSERT_EQ(rep.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rep.epsilons[i], cfg.epsilons[i]);
    for (const auto& name : scaling_metric_names()) {
      EXPECT_GE(metric_value(rep.rows[i], name), 0.0) << name;
    }
  }
  EXPECT_GT(rep.velocity_ratio, 0.5);
  EXPECT_EQ(rep.rows[0].init_pos_H1, 0.0);
}

GTEST_TEST(ScalingReport, GuardsInputs) {
  auto cfg = small_config();
  cfg.seed = {Vec2(0.2, 0.5), Vec2(0, -0.5)};
  EXPECT_THROW(scaling_report(cfg), ValidationError);
  cfg = small_config();
  cfg.epsilons = {1.0 / 16, 1.0 / 32, 1.0 / 1024};
  cfg.max_grid = 128;
  try {
    scaling_report(cfg);
    FAIL() << "expected under-resolved";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.code(), "under-resolved");
  }
  cfg = small_config();
  cfg.epsilons = {1.0 / 32, 1.0 / 16, 1.0 / 64};
  EXPECT_THROW(scaling_report(cfg), ValidationError);
}

}  // namespace
}  // namespace beam
}  // namespace codim
