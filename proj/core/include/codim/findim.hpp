#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace codim::findim {

/// Time-varying pair (A(t), B(t)) on [0, T], piecewise constant.
/// Piece i is active on [breakpoints[i], breakpoints[i+1]).
class LinearSystem {
 public:
  LinearSystem(std::vector<double> breakpoints, std::vector<Eigen::MatrixXd> A,
               std::vector<Eigen::MatrixXd> B);

  static LinearSystem time_invariant(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                     double T);

  int n() const { return n_; }
  int m() const { return m_; }
  double T() const { return breakpoints_.back(); }
  int pieces() const { return static_cast<int>(A_.size()); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const Eigen::MatrixXd& A(int piece) const { return A_[piece]; }
  const Eigen::MatrixXd& B(int piece) const { return B_[piece]; }
  bool is_time_invariant() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<Eigen::MatrixXd> A_;
  std::vector<Eigen::MatrixXd> B_;
  int n_ = 0;
  int m_ = 0;
};

struct ReachabilityReport {
  Eigen::MatrixXd gramian;
  Eigen::VectorXd eigenvalues;  // descending
  int rank = 0;
  int codimension = 0;
  Eigen::MatrixXd reachable_basis;
  Eigen::MatrixXd kernel_basis;
  double tolerance = 0.0;
  /// Some eigenvalue lies within a factor 10 of the tolerance.
  bool ill_separated = false;
};

struct DualKernelReport {
  int kernel_dim = 0;
  Eigen::MatrixXd kernel_basis;
  /// Infinity when the kernel is the whole space.
  double best_constant = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd adjoint_gramian;
  Eigen::VectorXd eigenvalues;
  double tolerance = 0.0;
  /// Relative Frobenius distance between adjoint and forward assemblies.
  double assembly_mismatch = 0.0;
};

struct EquivalenceReport {
  int n = 0;
  int codimension = 0;
  int kernel_dim = 0;
  std::optional<int> kalman_rank;  // set for time-invariant systems
  bool codim_matches_kernel = false;
  bool kalman_matches = true;
  bool weak_observability = false;
  bool compact_term_estimate = false;
  double best_constant = 0.0;
  /// max over samples of |phi_T| / (C ||B* phi||) on the kernel complement.
  double worst_observability_ratio = 0.0;
  /// max over samples of |phi_T| / (C (||B* phi|| + |P_K phi_T|)).
  double worst_compact_ratio = 0.0;
  bool ill_separated = false;
  bool all_pass() const {
    return codim_matches_kernel && kalman_matches && weak_observability && compact_term_estimate;
  }
};

/// Default rank tolerance: 1e-10 * lambda_max with floor 1e-14.
double default_tolerance(const Eigen::VectorXd& eigenvalues_desc);

Eigen::MatrixXd controllability_gramian(const LinearSystem& sys, int steps);

/// tol <= 0 selects default_tolerance.
ReachabilityReport reachability_report(const LinearSystem& sys, int steps, double tol = 0.0);

/// Throws NumericalError("adjoint-mismatch") past 1e-6 relative.
DualKernelReport dual_kernel(const LinearSystem& sys, int steps, double tol = 0.0);

/// Samples drawn from a generator seeded with `seed`.
EquivalenceReport verify_equivalences(const LinearSystem& sys, int steps, double tol = 0.0,
                                      std::uint64_t seed = 1, int samples = 100);

/// Rank of [B, AB, ..., A^{n-1}B] by column-pivoted QR with relative threshold.
int kalman_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double rel_tol = 1e-9);

/// ||B* phi||_{L2(0,T)} for the adjoint solution with phi(T) = phi_T.
double observation_norm(const LinearSystem& sys, const Eigen::VectorXd& phi_T, int steps);

struct RandomSystem {
  LinearSystem system;
  int planted_rank;  // dimension of the reachable subspace by construction
};

struct RandomFamilyOptions {
  int n_max = 6;
  int m_max = 3;
  double T = 1.0;
  int max_pieces = 1;  // > 1 draws piecewise systems sharing the planted structure
};

/// Entries uniform on [-1, 1] arranged in controllable/uncontrollable block form
/// [[A11, A12], [0, A22]], B = [B1; 0], rotated by a random orthogonal matrix.
RandomSystem random_system(std::mt19937_64& rng, const RandomFamilyOptions& opts);

}  // namespace codim::findim
