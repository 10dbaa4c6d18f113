#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "codim/pde.hpp"

namespace codim::lqoc {

/// Endpoint-constrained LQ problem on the first N Dirichlet modes of (0, L).
/// Cost 1/2 int_0^T int q |y|^2 + int_omega r |u|^2, y(0) = y0, y(T) = y1.
struct LQProblem {
  pde::Equation equation = pde::Equation::Wave;
  int N = 6;
  int K = 200;
  double T = 2.5;
  double L = 1.0;
  pde::PotentialField a;
  pde::PotentialField q;
  pde::PotentialField r = pde::PotentialField::from_function([](double, double, double) {
    return 1.0;
  });
  double r_min = 1e-3;
  std::vector<std::pair<double, double>> omega{{0.2, 0.8}};
  /// Modal coefficients: (positions, velocities) for the wave, positions for heat.
  /// Empty vectors mean zero.
  Eigen::VectorXd y0;
  Eigen::VectorXd y1;

  int state_dim() const { return equation == pde::Equation::Wave ? 2 * N : N; }
  /// Throws ValidationError.
  void validate() const;
};

/// Direct transcription. z = [X_0, ..., X_K, W_0, ..., W_{K-1}] with X_n the modal state at
/// t_n = n T / K and W_n the N control coefficients on (t_n, t_{n+1}) of u = sum_j W_nj e_j
/// restricted to omega. Rows: initial state, K blocks of trapezoid dynamics (positions then
/// velocities for the wave), terminal state.
struct QuadraticProgram {
  LQProblem problem;
  Eigen::SparseMatrix<double> H;
  Eigen::VectorXd g;
  Eigen::SparseMatrix<double> E;
  Eigen::VectorXd d;

  int state_dim = 0;
  int n_states = 0;    // state_dim * (K + 1)
  int n_controls = 0;  // N * K
  int touched_modes = 0;
  double dt = 0.0;

  Eigen::VectorXd lambda;            // Dirichlet eigenvalues
  Eigen::MatrixXd C;                 // int_omega e_k e_j
  std::vector<Eigen::MatrixXd> A;    // int a(., t_n) e_k e_j at nodes
  std::vector<Eigen::MatrixXd> Q;    // int q(., t_{n+1/2}) e_k e_j
  std::vector<Eigen::MatrixXd> R;    // int_omega r(., t_{n+1/2}) e_k e_j

  int state_index(int n) const { return n * state_dim; }
  int control_index(int n) const { return n_states + n * problem.N; }
  int dynamics_row(int n) const { return state_dim + n * state_dim; }
  int variables() const { return n_states + n_controls; }
  int rows() const { return static_cast<int>(E.rows()); }
};

QuadraticProgram discretize(const LQProblem& problem);

/// Free discrete trajectory (u = 0) from y0; returns X_K.
Eigen::VectorXd free_endpoint(const QuadraticProgram& qp, const Eigen::VectorXd& y0);

enum class Status { Feasible, InfeasibleAtTolerance };
std::string to_string(Status s);

struct LQSolution {
  Status status = Status::InfeasibleAtTolerance;
  Eigen::VectorXd z;
  Eigen::VectorXd mu;
  Eigen::MatrixXd u;    // N x K control coefficients
  Eigen::MatrixXd y;    // state_dim x (K + 1)
  double psi0 = -1.0;
  Eigen::MatrixXd psi;  // N x K adjoint coefficients at t_{n+1/2}
  std::vector<double> times;
  std::vector<double> mid_times;
  double endpoint_residual = 0.0;      // state norm of X_K - y1
  double endpoint_tolerance = 0.0;
  double stationarity_residual = 0.0;  // relative sup of psi0 r u + chi_omega psi
  double kkt_residual = 0.0;           // ||H z + g + E^T mu|| / (||H|| ||z|| + ||g||)
  double kkt_condition_number = 0.0;
  double effective_condition = 0.0;    // ||K|| ||x|| / ||rhs||
  double min_pivot = 0.0;
  double psi_norm = 0.0;               // sup_n ||psi_n|| / |psi0|
  int refinement_steps = 0;
};

/// Quasi-definite LDLT of the KKT matrix with iterative refinement.
/// Throws NumericalError("kkt-singular") with the smallest pivot when refinement stalls.
LQSolution solve_endpoint_lq(const QuadraticProgram& qp, int power_iterations = 60);

/// sup over omega x {t_{n+1/2}} of |psi0 r u + psi|, absolute and relative to
/// max(sup |r u|, sup |psi|).
std::pair<double, double> stationarity_residual(const QuadraticProgram& qp,
                                                const Eigen::MatrixXd& u,
                                                const Eigen::MatrixXd& psi, double psi0,
                                                int points_per_unit = 200);

struct PMPReport {
  double adjoint_deviation_discrete = 0.0;    // backward trapezoid recursion
  double adjoint_deviation_continuous = 0.0;  // fine RK4 on the continuous adjoint
  double stationarity_residual = 0.0;         // relative
  double stationarity_absolute = 0.0;
  double control_recovery_mismatch = 0.0;     // u from -(psi0 r)^{-1} chi_omega psi vs u*
  double psi_sup = 0.0;
  bool nontrivial = false;
  bool trivially_satisfied = false;           // psi == 0 and u* == 0
};

PMPReport verify_pmp(const LQSolution& solution, const QuadraticProgram& qp);

/// c_k = (-1)^k / sqrt(N): unit-norm alternating coefficients.
Eigen::VectorXd rough_target(int N);

enum class TargetKind { Rough, SmoothReachable };

struct ScanRow {
  int N = 0;
  Status status = Status::InfeasibleAtTolerance;
  bool kkt_singular = false;
  double kkt_condition_number = 0.0;
  double effective_condition = 0.0;
  double psi_norm = 0.0;
  double endpoint_residual = 0.0;
  double min_pivot = 0.0;
};

struct ScanReport {
  TargetKind target = TargetKind::Rough;
  std::vector<ScanRow> rows;
  bool monotone_growth = false;      // strictly increasing condition numbers
  double min_growth_factor = 0.0;    // min ratio between consecutive rows
};

/// Heat family over N. Rough: y0 = 0, y1 = rough_target(N). SmoothReachable: y0 = modes of
/// x (L - x), y1 its free discrete image.
ScanReport multiplier_degeneracy_scan(const LQProblem& base, const std::vector<int>& Ns,
                                      TargetKind target, int threads = 1);

}  // namespace codim::lqoc
