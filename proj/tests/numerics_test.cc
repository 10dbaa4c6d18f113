#include "codim/numerics.hpp"

#include <atomic>
#include <cmath>

#include <gtest/gtest.h>

#include "codim/errors.hpp"

namespace codim {
namespace {

GTEST_TEST(Expm, RotationGenerator) {
  Eigen::Matrix2d J;
  J << 0, -1,
       1, 0;
  const Eigen::MatrixXd R = expm(J, 0.7);
  Eigen::Matrix2d expected;
  expected << std::cos(0.7), -std::sin(0.7),
              std::sin(0.7), std::cos(0.7);
  EXPECT_LT((R - expected).norm(), 1e-14);
}

GTEST_TEST(Expm, NilpotentSeriesTerminates) {
  Eigen::Matrix3d N;
  N << 0, 1, 2,
       0, 0, 3,
       0, 0, 0;
  const Eigen::Matrix3d expected = Eigen::Matrix3d::Identity() + 2 * N + 2 * N * N;
  EXPECT_LT((expm(N, 2.0) - expected).norm(), 1e-13);
}

GTEST_TEST(SymmetricEigen, DescendingAndReconstructs) {
  Eigen::Matrix3d S;
  S << 2, 1, 0,
       1, 3, 1,
       0, 1, 4;
  const auto e = symmetric_eigen_descending(S);
  EXPECT_GE(e.values(0), e.values(1));
  EXPECT_GE(e.values(1), e.values(2));
  EXPECT_LT((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - S).norm(), 1e-13);
}

GTEST_TEST(FitLine, ExactLineAndPowerLaw) {
  const auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
  const auto g = fit_loglog({0.1, 0.05, 0.025}, {1e-3, 1.25e-4, 1.5625e-5});
  EXPECT_NEAR(g.slope, 3.0, 1e-12);
  EXPECT_THROW(fit_line({1}, {1}), ValidationError);
}

GTEST_TEST(GaussLegendre, ExactForPolynomials) {
  Eigen::VectorXd x, w;
  gauss_legendre(5, -1.0, 2.0, x, w);
  // degree 9 integrated exactly
  double s = 0;
  for (int i = 0; i < x.size(); ++i) s += w(i) * std::pow(x(i), 9);
  EXPECT_NEAR(s, (std::pow(2.0, 10) - 1.0) / 10.0, 1e-11);
}

GTEST_TEST(TrapezoidWeights, SumAndEnds) {
  const Eigen::VectorXd w = trapezoid_weights(11, 0.1);
  EXPECT_NEAR(w.sum(), 1.0, 1e-15);
  EXPECT_NEAR(w(0), 0.05, 1e-15);
  EXPECT_NEAR(w(5), 0.1, 1e-15);
}

GTEST_TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (int threads : {1, 2, 5}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  EXPECT_THROW(parallel_for(8, 3,
                            [](std::size_t i) {
                              if (i == 6) throw ValidationError("boom");
                            }),
               ValidationError);
}

}  // namespace
}  // namespace codim
