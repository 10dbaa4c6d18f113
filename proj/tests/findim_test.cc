#include "codim/findim.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "codim/errors.hpp"

namespace codim {
namespace findim {
namespace {

// Lyapunov ODE G' = A G + G A^T + B B^T, G(0) = 0, by fine RK4.
Eigen::MatrixXd lyapunov_oracle(const LinearSystem& sys, int steps_per_piece) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(sys.n(), sys.n());
  for (int p = 0; p < sys.pieces(); ++p) {
    const Eigen::MatrixXd& A = sys.A(p);
    const Eigen::MatrixXd BBt = sys.B(p) * sys.B(p).transpose();
    const double h = (sys.breakpoints()[p + 1] - sys.breakpoints()[p]) / steps_per_piece;
    auto f = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
      return A * X + X * A.transpose() + BBt;
    };
    for (int s = 0; s < steps_per_piece; ++s) {
      const Eigen::MatrixXd k1 = f(G);
      const Eigen::MatrixXd k2 = f(G + 0.5 * h * k1);
      const Eigen::MatrixXd k3 = f(G + 0.5 * h * k2);
      const Eigen::MatrixXd k4 = f(G + h * k3);
      G += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
  }
  return G;
}

GTEST_TEST(ControllabilityGramian, ZeroDriftIdentityInput) {
  const auto sys =
      LinearSystem::time_invariant(Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Identity(), 1.0);
  const Eigen::MatrixXd G = controllability_gramian(sys, 64);
  EXPECT_LT((G - Eigen::Matrix2d::Identity()).norm(), 1e-12);
}

GTEST_TEST(ControllabilityGramian, DoubleIntegratorClosedForm) {
  Eigen::Matrix2d A;
  A << 0, 1,
       0, 0;
  const Eigen::Vector2d B(0, 1);
  const auto sys = LinearSystem::time_invariant(A, B, 1.0);
  // Phi(T, t) B = (T - t, 1)
  Eigen::Matrix2d expected;
  expected << 1.0 / 3.0, 0.5,
              0.5, 1.0;
  EXPECT_LT((controllability_gramian(sys, 2048) - expected).norm(), 1e-6);
  const auto rep = reachability_report(sys, 256);
  EXPECT_EQ(rep.rank, 2);
  EXPECT_EQ(rep.codimension, 0);
  EXPECT_EQ(kalman_rank(A, B), 2);
}

GTEST_TEST(ControllabilityGramian, ZeroInputGivesZeroMatrix) {
  const auto sys = LinearSystem::time_invariant(Eigen::Matrix3d::Random(),
                                                Eigen::MatrixXd::Zero(3, 1), 1.0);
  EXPECT_EQ(controllability_gramian(sys, 32).norm(), 0.0);
  const auto rep = reachability_report(sys, 32);
  EXPECT_EQ(rep.codimension, 3);
  EXPECT_EQ(rep.kernel_basis.cols(), 3);
  const auto dk = dual_kernel(sys, 32);
  EXPECT_EQ(dk.kernel_dim, 3);
  EXPECT_TRUE(std::isinf(dk.best_constant));
  const auto eq = verify_equivalences(sys, 32);
  EXPECT_TRUE(eq.all_pass());
  EXPECT_EQ(eq.codimension, 3);
}

GTEST_TEST(ControllabilityGramian, PiecewiseMatchesLyapunovOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  auto rnd = [&](int r, int c) {
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = u(rng);
    return M;
  };
  const LinearSystem sys({0.0, 0.3, 0.55, 1.0}, {rnd(3, 3), rnd(3, 3), rnd(3, 3)},
                         {rnd(3, 2), rnd(3, 2), rnd(3, 2)});
  const Eigen::MatrixXd G = controllability_gramian(sys, 512);
  const Eigen::MatrixXd oracle = lyapunov_oracle(sys, 4000);
  EXPECT_LT((G - oracle).norm() / oracle.norm(), 1e-5);
}

GTEST_TEST(ReachabilityReport, DiagonalDriftCodimensionOne) {
  const Eigen::Matrix3d A = Eigen::Vector3d(1, 2, 3).asDiagonal();
  const Eigen::Vector3d B(1, 1, 0);
  const auto sys = LinearSystem::time_invariant(A, B, 1.0);
  const auto rep = reachability_report(sys, 256);
  EXPECT_EQ(rep.codimension, 1);
  EXPECT_EQ(kalman_rank(A, B), 2);
  EXPECT_EQ(rep.rank + rep.codimension, 3);
  // kernel is the unreachable third axis
  EXPECT_NEAR(std::abs(rep.kernel_basis(2, 0)), 1.0, 1e-9);
}

GTEST_TEST(DualKernel, IdentityInputBestConstant) {
  const Eigen::Matrix2d A = (Eigen::Matrix2d() << -1, 2, 0, -3).finished();
  const auto sys = LinearSystem::time_invariant(A, Eigen::Matrix2d::Identity(), 1.0);
  const auto dk = dual_kernel(sys, 256);
  const auto rep = reachability_report(sys, 256);
  EXPECT_EQ(dk.kernel_dim, 0);
  const double lmin = rep.eigenvalues(rep.eigenvalues.size() - 1);
  EXPECT_NEAR(dk.best_constant * std::sqrt(lmin), 1.0, 1e-8);
  EXPECT_LT(dk.assembly_mismatch, 1e-8);
}

GTEST_TEST(DualKernel, InvariantSubspaceInput) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::Matrix4d block = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 4; ++j) block(i, j) = u(rng);
  for (int i = 2; i < 4; ++i)
    for (int j = 2; j < 4; ++j) block(i, j) = u(rng);
  Eigen::Vector4d b(u(rng), u(rng), 0, 0);
  Eigen::Matrix4d R;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) R(i, j) = u(rng);
  const Eigen::Matrix4d Q = Eigen::HouseholderQR<Eigen::Matrix4d>(R).householderQ();
  const Eigen::Matrix4d A = Q * block * Q.transpose();
  const Eigen::Vector4d B = Q * b;
  const auto sys = LinearSystem::time_invariant(A, B, 1.0);
  EXPECT_EQ(kalman_rank(A, B), 2);
  EXPECT_EQ(dual_kernel(sys, 256).kernel_dim, 2);
}

GTEST_TEST(ObservationNorm, SquaredNormIsGramianQuadraticForm) {
  std::mt19937_64 rng(3);
  RandomFamilyOptions opts;
  const auto rs = random_system(rng, opts);
  const int n = rs.system.n();
  const Eigen::MatrixXd G = controllability_gramian(rs.system, 1024);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd phi(n);
    for (int i = 0; i < n; ++i) phi(i) = g(rng);
    const double obs = observation_norm(rs.system, phi, 1024);
    const double quad = phi.dot(G * phi);
    EXPECT_NEAR(obs * obs, quad, 1e-6 * std::max(1.0, quad));
  }
}

GTEST_TEST(LinearSystem, RejectsInvalidInput) {
  EXPECT_THROW(LinearSystem({0.0, 0.5, 0.5}, {Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()},
                            {Eigen::Vector2d::Ones(), Eigen::Vector2d::Ones()}),
               ValidationError);
  EXPECT_THROW(LinearSystem::time_invariant(Eigen::Matrix2d::Zero(), Eigen::Vector3d::Ones(), 1),
               ValidationError);
  EXPECT_THROW(LinearSystem::time_invariant(Eigen::Matrix2d::Zero(), Eigen::Vector2d::Ones(), 0),
               ValidationError);
  Eigen::Matrix2d bad = Eigen::Matrix2d::Zero();
  bad(0, 0) = std::nan("");
  EXPECT_THROW(LinearSystem::time_invariant(bad, Eigen::Vector2d::Ones(), 1), ValidationError);
}

// Property checks over the seeded random family.
GTEST_TEST(RandomFamily, ReportInvariantsAndEquivalences) {
  std::mt19937_64 rng(2024);
  RandomFamilyOptions opts;
  for (int i = 0; i < 60; ++i) {
    const auto rs = random_system(rng, opts);
    const auto& sys = rs.system;
    const int n = sys.n();
    const auto rep = reachability_report(sys, 256);
    EXPECT_EQ(rep.rank + rep.codimension, n);
    EXPECT_EQ(rep.codimension, n - rs.planted_rank);
    for (int k = 1; k < rep.eigenvalues.size(); ++k) {
      EXPECT_GE(rep.eigenvalues(k - 1), rep.eigenvalues(k));
    }
    EXPECT_GE(rep.eigenvalues.minCoeff(), -1e-12 * rep.eigenvalues(0));
    if (rep.rank > 0 && rep.codimension > 0) {
      EXPECT_LE((rep.reachable_basis.transpose() * rep.kernel_basis).cwiseAbs().maxCoeff(),
                10 * rep.tolerance + 1e-12);
    }
    const auto dk = dual_kernel(sys, 256);
    EXPECT_EQ(dk.kernel_dim, rep.codimension);
    EXPECT_LT(dk.assembly_mismatch, 1e-8);
    if (rep.rank > 0) {
      const double lmin = rep.eigenvalues(rep.rank - 1);
      EXPECT_NEAR(dk.best_constant * std::sqrt(lmin), 1.0, 1e-8);
    }
    const auto eq = verify_equivalences(sys, 256, 0.0, 100 + i, 20);
    EXPECT_TRUE(eq.all_pass()) << "system " << i;
    ASSERT_TRUE(eq.kalman_rank.has_value());
    EXPECT_EQ(eq.codimension, n - *eq.kalman_rank);
  }
}

GTEST_TEST(RandomFamily, CodimensionStableUnderStepDoubling) {
  std::mt19937_64 rng(99);
  RandomFamilyOptions opts;
  opts.max_pieces = 3;
  for (int i = 0; i < 25; ++i) {
    const auto rs = random_system(rng, opts);
    EXPECT_EQ(reachability_report(rs.system, 256).codimension,
              reachability_report(rs.system, 512).codimension);
  }
}

GTEST_TEST(RandomFamily, SeededDrawsAreReproducible) {
  std::mt19937_64 a(5), b(5);
  RandomFamilyOptions opts;
  for (int i = 0; i < 10; ++i) {
    const auto x = random_system(a, opts);
    const auto y = random_system(b, opts);
    ASSERT_EQ(x.system.n(), y.system.n());
    EXPECT_EQ((x.system.A(0) - y.system.A(0)).norm(), 0.0);
    EXPECT_EQ((x.system.B(0) - y.system.B(0)).norm(), 0.0);
  }
}

}  // namespace
}  // namespace findim
}  // namespace codim
