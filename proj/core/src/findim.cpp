#include "codim/findim.hpp"

#include <algorithm>
#include <cmath>

#include "codim/errors.hpp"
#include "codim/numerics.hpp"

namespace codim::findim {

namespace {

struct PieceGrid {
  int intervals;
  double h;
};

PieceGrid piece_grid(const LinearSystem& sys, int piece, int steps) {
  const double len = sys.breakpoints()[piece + 1] - sys.breakpoints()[piece];
  const int k = std::max(1, static_cast<int>(std::ceil(steps * len / sys.T() - 1e-9)));
  return {k, len / k};
}

// One backward RK4 step of psi' = -A^T psi, from t to t - h.
Eigen::MatrixXd rk4_adjoint_step(const Eigen::MatrixXd& At, const Eigen::MatrixXd& psi, double h) {
  const Eigen::MatrixXd k1 = At * psi;
  const Eigen::MatrixXd k2 = At * (psi + 0.5 * h * k1);
  const Eigen::MatrixXd k3 = At * (psi + 0.5 * h * k2);
  const Eigen::MatrixXd k4 = At * (psi + h * k3);
  return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

int rk4_substeps(const Eigen::MatrixXd& A, double h) {
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  return std::max(1, static_cast<int>(std::ceil(norm * h / 0.01)));
}

// Integrates the adjoint for the columns of psi_T and accumulates
// int (B^T psi)^T (B^T psi) dt with the forward assembly's trapezoid nodes.
Eigen::MatrixXd adjoint_assembly(const LinearSystem& sys, const Eigen::MatrixXd& psi_T, int steps) {
  const int cols = static_cast<int>(psi_T.cols());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(cols, cols);
  Eigen::MatrixXd psi = psi_T;
  for (int piece = sys.pieces() - 1; piece >= 0; --piece) {
    const PieceGrid g = piece_grid(sys, piece, steps);
    const Eigen::MatrixXd At = sys.A(piece).transpose();
    const Eigen::MatrixXd& B = sys.B(piece);
    const int sub = rk4_substeps(sys.A(piece), g.h);
    const double hs = g.h / sub;
    for (int k = 0; k <= g.intervals; ++k) {
      const Eigen::MatrixXd obs = B.transpose() * psi;
      const double w = (k == 0 || k == g.intervals) ? 0.5 * g.h : g.h;
      G.noalias() += w * obs.transpose() * obs;
      if (k == g.intervals) break;
      for (int s = 0; s < sub; ++s) psi = rk4_adjoint_step(At, psi, hs);
    }
  }
  return 0.5 * (G + G.transpose());
}

void split_spectrum(const SymmetricEigen& eig, double tol, int& rank, Eigen::MatrixXd& range,
                    Eigen::MatrixXd& kernel) {
  const int n = static_cast<int>(eig.values.size());
  rank = 0;
  while (rank < n && eig.values(rank) > tol) ++rank;
  range = eig.vectors.leftCols(rank);
  kernel = eig.vectors.rightCols(n - rank);
}

}  // namespace

LinearSystem::LinearSystem(std::vector<double> breakpoints, std::vector<Eigen::MatrixXd> A,
                           std::vector<Eigen::MatrixXd> B)
    : breakpoints_(std::move(breakpoints)), A_(std::move(A)), B_(std::move(B)) {
  if (A_.empty() || A_.size() != B_.size() || breakpoints_.size() != A_.size() + 1) {
    throw ValidationError("LinearSystem: need P matrices A, P matrices B and P+1 breakpoints");
  }
  if (breakpoints_.front() != 0.0) {
    throw ValidationError("LinearSystem: breakpoints must start at 0");
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1]) || !std::isfinite(breakpoints_[i])) {
      throw ValidationError("LinearSystem: breakpoints must be finite and strictly increasing");
    }
  }
  n_ = static_cast<int>(A_[0].rows());
  m_ = static_cast<int>(B_[0].cols());
  if (n_ <= 0 || m_ <= 0) throw ValidationError("LinearSystem: n and m must be positive");
  for (std::size_t i = 0; i < A_.size(); ++i) {
    if (A_[i].rows() != n_ || A_[i].cols() != n_ || B_[i].rows() != n_ || B_[i].cols() != m_) {
      throw ValidationError("LinearSystem: inconsistent matrix dimensions in piece " +
                            std::to_string(i));
    }
    if (!A_[i].allFinite() || !B_[i].allFinite()) {
      throw ValidationError("LinearSystem: non-finite entry in piece " + std::to_string(i));
    }
  }
}

LinearSystem LinearSystem::time_invariant(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                          double T) {
  if (!(T > 0)) throw ValidationError("LinearSystem: horizon must be positive");
  return LinearSystem({0.0, T}, {A}, {B});
}

bool LinearSystem::is_time_invariant() const {
  for (int i = 1; i < pieces(); ++i) {
    if (A_[i] != A_[0] || B_[i] != B_[0]) return false;
  }
  return true;
}

double default_tolerance(const Eigen::VectorXd& eigenvalues_desc) {
  const double lmax = eigenvalues_desc.size() ? std::max(0.0, eigenvalues_desc(0)) : 0.0;
  return std::max(1e-10 * lmax, 1e-14);
}

Eigen::MatrixXd controllability_gramian(const LinearSystem& sys, int steps) {
  if (steps < 2) throw ValidationError("controllability_gramian: steps must be >= 2");
  const int n = sys.n();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);  // Phi(T, t) at the current node
  for (int piece = sys.pieces() - 1; piece >= 0; --piece) {
    const PieceGrid g = piece_grid(sys, piece, steps);
    const Eigen::MatrixXd E = expm(sys.A(piece), g.h);
    const Eigen::MatrixXd& B = sys.B(piece);
    for (int k = 0; k <= g.intervals; ++k) {
      const Eigen::MatrixXd PB = phi * B;
      const double w = (k == 0 || k == g.intervals) ? 0.5 * g.h : g.h;
      G.noalias() += w * PB * PB.transpose();
      if (k == g.intervals) break;
      phi = phi * E;
    }
  }
  return 0.5 * (G + G.transpose());
}

ReachabilityReport reachability_report(const LinearSystem& sys, int steps, double tol) {
  ReachabilityReport r;
  r.gramian = controllability_gramian(sys, steps);
  const SymmetricEigen eig = symmetric_eigen_descending(r.gramian);
  r.eigenvalues = eig.values;
  r.tolerance = tol > 0 ? tol : default_tolerance(eig.values);
  split_spectrum(eig, r.tolerance, r.rank, r.reachable_basis, r.kernel_basis);
  r.codimension = sys.n() - r.rank;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double v = eig.values(i);
    if (v > 0.1 * r.tolerance && v < 10.0 * r.tolerance) r.ill_separated = true;
  }
  return r;
}

DualKernelReport dual_kernel(const LinearSystem& sys, int steps, double tol) {
  if (steps < 2) throw ValidationError("dual_kernel: steps must be >= 2");
  DualKernelReport d;
  d.adjoint_gramian =
      adjoint_assembly(sys, Eigen::MatrixXd::Identity(sys.n(), sys.n()), steps);
  const Eigen::MatrixXd forward = controllability_gramian(sys, steps);
  d.assembly_mismatch = relative_frobenius(d.adjoint_gramian, forward);
  if (d.assembly_mismatch > 1e-6) {
    throw NumericalError("adjoint-mismatch",
                         "adjoint and forward Gramian assemblies differ by " +
                             std::to_string(d.assembly_mismatch) + " (relative Frobenius)");
  }
  const SymmetricEigen eig = symmetric_eigen_descending(d.adjoint_gramian);
  d.eigenvalues = eig.values;
  d.tolerance = tol > 0 ? tol : default_tolerance(eig.values);
  int rank = 0;
  Eigen::MatrixXd range;
  split_spectrum(eig, d.tolerance, rank, range, d.kernel_basis);
  d.kernel_dim = sys.n() - rank;
  if (rank > 0) d.best_constant = 1.0 / std::sqrt(eig.values(rank - 1));
  return d;
}

double observation_norm(const LinearSystem& sys, const Eigen::VectorXd& phi_T, int steps) {
  const Eigen::MatrixXd G = adjoint_assembly(sys, phi_T, steps);
  return std::sqrt(std::max(0.0, G(0, 0)));
}

EquivalenceReport verify_equivalences(const LinearSystem& sys, int steps, double tol,
                                      std::uint64_t seed, int samples) {
  EquivalenceReport rep;
  rep.n = sys.n();
  const ReachabilityReport rr = reachability_report(sys, steps, tol);
  const DualKernelReport dk = dual_kernel(sys, steps, rr.tolerance);
  rep.codimension = rr.codimension;
  rep.kernel_dim = dk.kernel_dim;
  rep.codim_matches_kernel = rr.codimension == dk.kernel_dim;
  rep.ill_separated = rr.ill_separated;
  if (sys.is_time_invariant()) {
    rep.kalman_rank = kalman_rank(sys.A(0), sys.B(0));
    rep.kalman_matches = (sys.n() - *rep.kalman_rank) == rr.codimension;
  }
  rep.best_constant = dk.best_constant;

  const double slack = 1.0 + 1e-6;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_vector = [&] {
    Eigen::VectorXd v(sys.n());
    for (int i = 0; i < sys.n(); ++i) v(i) = gauss(rng);
    return v;
  };

  // (ii) weak observability on the kernel complement
  const Eigen::MatrixXd& range = rr.reachable_basis;
  rep.worst_observability_ratio = 0.0;
  if (range.cols() > 0) {
    std::vector<Eigen::VectorXd> probes;
    probes.push_back(range.col(range.cols() - 1));
    for (int s = 0; s < samples; ++s) {
      Eigen::VectorXd v = range * (range.transpose() * random_vector());
      probes.push_back(v / v.norm());
    }
    for (const auto& phi : probes) {
      const double obs = observation_norm(sys, phi, steps);
      const double ratio = phi.norm() / (dk.best_constant * obs);
      rep.worst_observability_ratio = std::max(rep.worst_observability_ratio, ratio);
    }
  }
  rep.weak_observability = rep.worst_observability_ratio <= slack;

  // (iii) estimate with the finite-rank kernel projection on all of R^n
  const double C = std::isfinite(dk.best_constant) ? std::max(1.0, dk.best_constant) : 1.0;
  const Eigen::MatrixXd& K = rr.kernel_basis;
  rep.worst_compact_ratio = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd phi = random_vector();
    phi /= phi.norm();
    const double obs = observation_norm(sys, phi, steps);
    const double proj = K.cols() > 0 ? (K.transpose() * phi).norm() : 0.0;
    const double ratio = phi.norm() / (C * (obs + proj));
    rep.worst_compact_ratio = std::max(rep.worst_compact_ratio, ratio);
  }
  rep.compact_term_estimate = rep.worst_compact_ratio <= slack;
  return rep;
}

int kalman_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double rel_tol) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Eigen::MatrixXd K(n, n * m);
  Eigen::MatrixXd blk = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    K.middleCols(k * m, m) = blk;
    blk = A * blk;
  }
  if (K.cwiseAbs().maxCoeff() == 0.0) return 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(K);
  qr.setThreshold(rel_tol);
  return static_cast<int>(qr.rank());
}

RandomSystem random_system(std::mt19937_64& rng, const RandomFamilyOptions& opts) {
  std::uniform_int_distribution<int> pick_n(1, opts.n_max);
  std::uniform_int_distribution<int> pick_m(1, opts.m_max);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = pick_n(rng);
  const int m = pick_m(rng);
  std::uniform_int_distribution<int> pick_r(0, std::min(n, 2 * m));
  const int r = pick_r(rng);
  std::uniform_int_distribution<int> pick_pieces(1, std::max(1, opts.max_pieces));
  const int pieces = pick_pieces(rng);

  Eigen::MatrixXd Z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Z(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
  const Eigen::MatrixXd Q = qr.householderQ();

  std::vector<double> breaks{0.0};
  for (int p = 1; p < pieces; ++p) breaks.push_back(opts.T * p / pieces);
  breaks.push_back(opts.T);

  std::vector<Eigen::MatrixXd> As, Bs;
  for (int p = 0; p < pieces; ++p) {
    Eigen::MatrixXd A(n, n);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = unif(rng);
    A.bottomLeftCorner(n - r, r).setZero();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < m; ++j) B(i, j) = unif(rng);
    As.push_back(Q * A * Q.transpose());
    Bs.push_back(Q * B);
  }
  return {LinearSystem(std::move(breaks), std::move(As), std::move(Bs)), r};
}

}  // namespace codim::findim
