#include "codim/lqoc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

#include "codim/errors.hpp"
#include "codim/numerics.hpp"

namespace codim::lqoc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

double mode(int k, double x, double L) { return std::sqrt(2.0 / L) * std::sin(k * M_PI * x / L); }

struct Quadrature {
  VectorXd x, w;
};

// Composite Gauss-Legendre on [a, b].
Quadrature composite(double a, double b, int pieces, int order) {
  Quadrature q;
  q.x.resize(pieces * order);
  q.w.resize(pieces * order);
  const double h = (b - a) / pieces;
  VectorXd xn, wn;
  for (int p = 0; p < pieces; ++p) {
    gauss_legendre(order, a + p * h, a + (p + 1) * h, xn, wn);
    q.x.segment(p * order, order) = xn;
    q.w.segment(p * order, order) = wn;
  }
  return q;
}

Quadrature concat(const std::vector<Quadrature>& parts) {
  Quadrature q;
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.x.size();
  q.x.resize(n);
  q.w.resize(n);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    q.x.segment(off, p.x.size()) = p.x;
    q.w.segment(off, p.w.size()) = p.w;
    off += p.x.size();
  }
  return q;
}

MatrixXd basis(const VectorXd& x, int N, double L) {
  MatrixXd B(x.size(), N);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (int k = 0; k < N; ++k) B(i, k) = mode(k + 1, x(i), L);
  }
  return B;
}

MatrixXd weighted_gram(const MatrixXd& B, const VectorXd& w) {
  return B.transpose() * w.asDiagonal() * B;
}

double state_norm(const QuadraticProgram& qp, const VectorXd& X) {
  const int N = qp.problem.N;
  if (qp.problem.equation == pde::Equation::Heat) return X.norm();
  double s = 0.0;
  for (int k = 0; k < N; ++k) s += qp.lambda(k) * X(k) * X(k) + X(N + k) * X(N + k);
  return std::sqrt(s);
}

VectorXd vector_or_zero(const VectorXd& v, int n, const char* name) {
  if (v.size() == 0) return VectorXd::Zero(n);
  if (v.size() != n) {
    throw ValidationError(std::string(name) + " must have " + std::to_string(n) + " entries");
  }
  return v;
}

MatrixXd lambda_at(const QuadraticProgram& qp, int n) {
  MatrixXd L = qp.A[n];
  L.diagonal() += qp.lambda;
  return L;
}

}  // namespace

void LQProblem::validate() const {
  if (N < 2) throw ValidationError("N must be at least 2");
  if (K < 32) throw ValidationError("K must be at least 32");
  if (!(T > 0)) throw ValidationError("T must be positive");
  if (!(L > 0)) throw ValidationError("L must be positive");
  if (!(r_min > 0)) throw ValidationError("r_min must be positive");
  if (r.is_zero()) throw ValidationError("r must be bounded below by r_min > 0");
  if (omega.empty()) throw ValidationError("omega must contain at least one interval");
  for (const auto& [a0, b0] : omega) {
    if (!(0.0 <= a0 && a0 < b0 && b0 <= L)) {
      throw ValidationError("omega intervals must satisfy 0 <= a < b <= L");
    }
  }
  vector_or_zero(y0, state_dim(), "y0");
  vector_or_zero(y1, state_dim(), "y1");
  if ((y0.size() && !y0.allFinite()) || (y1.size() && !y1.allFinite())) {
    throw ValidationError("endpoint data must be finite");
  }
}

QuadraticProgram discretize(const LQProblem& problem) {
  problem.validate();
  QuadraticProgram qp;
  qp.problem = problem;
  const int N = problem.N, K = problem.K, sd = problem.state_dim();
  const double L = problem.L, T = problem.T, dt = T / K;
  const bool wave = problem.equation == pde::Equation::Wave;
  qp.state_dim = sd;
  qp.dt = dt;
  qp.n_states = sd * (K + 1);
  qp.n_controls = N * K;
  qp.lambda.resize(N);
  for (int k = 0; k < N; ++k) qp.lambda(k) = std::pow((k + 1) * M_PI / L, 2);

  const int order = 2 * N + 16;
  std::vector<Quadrature> parts;
  for (const auto& [a0, b0] : problem.omega) parts.push_back(composite(a0, b0, 4, order));
  const Quadrature qo = concat(parts);
  const Quadrature qd = composite(0.0, L, 8, order);
  const MatrixXd Bo = basis(qo.x, N, L);
  const MatrixXd Bd = basis(qd.x, N, L);

  qp.C = weighted_gram(Bo, qo.w);
  qp.touched_modes = 0;
  for (int k = 0; k < N; ++k) qp.touched_modes += qp.C.row(k).norm() > 1e-12 ? 1 : 0;

  auto field_gram = [&](const pde::PotentialField& f, const Quadrature& q, const MatrixXd& B,
                        double t, bool check_rmin) {
    VectorXd w = q.w;
    for (Eigen::Index i = 0; i < q.x.size(); ++i) {
      const double v = f(q.x(i), 0.0, t);
      if (check_rmin && !(v >= problem.r_min)) {
        throw ValidationError("r falls below r_min at x = " + std::to_string(q.x(i)) +
                              ", t = " + std::to_string(t));
      }
      w(i) *= v;
    }
    return weighted_gram(B, w);
  };
  qp.A.assign(K + 1, MatrixXd::Zero(N, N));
  if (!problem.a.is_zero()) {
    for (int n = 0; n <= K; ++n) qp.A[n] = field_gram(problem.a, qd, Bd, n * dt, false);
  }
  qp.Q.assign(K, MatrixXd::Zero(N, N));
  qp.R.resize(K);
  for (int n = 0; n < K; ++n) {
    const double tm = (n + 0.5) * dt;
    if (!problem.q.is_zero()) qp.Q[n] = field_gram(problem.q, qd, Bd, tm, false);
    qp.R[n] = field_gram(problem.r, qo, Bo, tm, true);
  }

  const int nv = qp.n_states + qp.n_controls;
  const int m = sd + sd * K + sd;
  std::vector<Triplet> e, h;
  qp.d = VectorXd::Zero(m);
  const VectorXd y0 = vector_or_zero(problem.y0, sd, "y0");
  const VectorXd y1 = vector_or_zero(problem.y1, sd, "y1");
  for (int i = 0; i < sd; ++i) {
    e.emplace_back(i, qp.state_index(0) + i, 1.0);
    qp.d(i) = y0(i);
    const int row = sd + sd * K + i;
    e.emplace_back(row, qp.state_index(K) + i, 1.0);
    qp.d(row) = y1(i);
  }
  auto add = [&](int row, int col, double v) {
    if (v != 0.0) e.emplace_back(row, col, v);
  };
  for (int n = 0; n < K; ++n) {
    const int r0 = qp.dynamics_row(n);
    const int x0 = qp.state_index(n), x1 = qp.state_index(n + 1), w0 = qp.control_index(n);
    const MatrixXd L0 = lambda_at(qp, n), L1 = lambda_at(qp, n + 1);
    if (wave) {
      for (int i = 0; i < N; ++i) {
        add(r0 + i, x1 + i, 1.0);
        add(r0 + i, x0 + i, -1.0);
        add(r0 + i, x0 + N + i, -0.5 * dt);
        add(r0 + i, x1 + N + i, -0.5 * dt);
        const int rv = r0 + N + i;
        add(rv, x1 + N + i, 1.0);
        add(rv, x0 + N + i, -1.0);
        for (int j = 0; j < N; ++j) {
          add(rv, x0 + j, 0.5 * dt * L0(i, j));
          add(rv, x1 + j, 0.5 * dt * L1(i, j));
          add(rv, w0 + j, -dt * qp.C(i, j));
        }
      }
    } else {
      for (int i = 0; i < N; ++i) {
        add(r0 + i, x1 + i, 1.0);
        add(r0 + i, x0 + i, -1.0);
        for (int j = 0; j < N; ++j) {
          add(r0 + i, x0 + j, 0.5 * dt * L0(i, j));
          add(r0 + i, x1 + j, 0.5 * dt * L1(i, j));
          add(r0 + i, w0 + j, -dt * qp.C(i, j));
        }
      }
    }
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const double qv = 0.25 * dt * qp.Q[n](i, j);
        if (qv != 0.0) {
          h.emplace_back(x0 + i, x0 + j, qv);
          h.emplace_back(x0 + i, x1 + j, qv);
          h.emplace_back(x1 + i, x0 + j, qv);
          h.emplace_back(x1 + i, x1 + j, qv);
        }
        h.emplace_back(w0 + i, w0 + j, dt * qp.R[n](i, j));
      }
    }
  }
  qp.E.resize(m, nv);
  qp.E.setFromTriplets(e.begin(), e.end());
  qp.H.resize(nv, nv);
  qp.H.setFromTriplets(h.begin(), h.end());
  qp.g = VectorXd::Zero(nv);
  return qp;
}

VectorXd free_endpoint(const QuadraticProgram& qp, const VectorXd& y0) {
  const int N = qp.problem.N, sd = qp.state_dim;
  const double dt = qp.dt;
  if (y0.size() != sd) throw ValidationError("initial state has the wrong size");
  VectorXd X = y0;
  const MatrixXd I = MatrixXd::Identity(N, N);
  for (int n = 0; n < qp.problem.K; ++n) {
    const MatrixXd L0 = lambda_at(qp, n), L1 = lambda_at(qp, n + 1);
    if (qp.problem.equation == pde::Equation::Wave) {
      MatrixXd lhs(2 * N, 2 * N), rhs(2 * N, 2 * N);
      lhs << I, -0.5 * dt * I, 0.5 * dt * L1, I;
      rhs << I, 0.5 * dt * I, -0.5 * dt * L0, I;
      X = lhs.partialPivLu().solve(rhs * X);
    } else {
      X = (I + 0.5 * dt * L1).partialPivLu().solve((I - 0.5 * dt * L0) * X);
    }
  }
  return X;
}

std::string to_string(Status s) {
  return s == Status::Feasible ? "FEASIBLE" : "INFEASIBLE-AT-TOLERANCE";
}

std::pair<double, double> stationarity_residual(const QuadraticProgram& qp, const MatrixXd& u,
                                                const MatrixXd& psi, double psi0,
                                                int points_per_unit) {
  const auto& pr = qp.problem;
  double sup_res = 0.0, sup_ru = 0.0, sup_psi = 0.0;
  for (const auto& [a0, b0] : pr.omega) {
    const int count = std::max(2, static_cast<int>(std::ceil((b0 - a0) * points_per_unit)));
    for (int i = 0; i < count; ++i) {
      const double x = a0 + (i + 0.5) * (b0 - a0) / count;
      VectorXd e(pr.N);
      for (int k = 0; k < pr.N; ++k) e(k) = mode(k + 1, x, pr.L);
      for (int n = 0; n < pr.K; ++n) {
        const double t = (n + 0.5) * qp.dt;
        const double ru = pr.r(x, 0.0, t) * e.dot(u.col(n));
        const double ps = e.dot(psi.col(n));
        sup_res = std::max(sup_res, std::abs(psi0 * ru + ps));
        sup_ru = std::max(sup_ru, std::abs(ru));
        sup_psi = std::max(sup_psi, std::abs(ps));
      }
    }
  }
  const double scale = std::max(sup_ru, sup_psi);
  return {sup_res, scale > 0 ? sup_res / scale : 0.0};
}

LQSolution solve_endpoint_lq(const QuadraticProgram& qp, int power_iterations) {
  const int nv = qp.variables(), m = qp.rows(), n = nv + m;
  const int N = qp.problem.N, K = qp.problem.K, sd = qp.state_dim;

  // Exact KKT matrix and its augmented form [[H + rho E^T E, E^T], [E, 0]], which has the
  // same solutions; the factorized matrix adds -delta on the dual block.
  std::vector<Triplet> t;
  t.reserve(2 * qp.E.nonZeros() + qp.H.nonZeros() + n);
  double scale = 0.0;
  for (int k = 0; k < qp.E.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.E, k); it; ++it) {
      t.emplace_back(nv + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), nv + it.row(), it.value());
      scale = std::max(scale, std::abs(it.value()));
    }
  }
  const std::size_t n_dual_entries = t.size();
  for (int k = 0; k < qp.H.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.H, k); it; ++it) {
      t.emplace_back(it.row(), it.col(), it.value());
      scale = std::max(scale, std::abs(it.value()));
    }
  }
  Eigen::SparseMatrix<double> KKT(n, n);
  KKT.setFromTriplets(t.begin(), t.end());
  const double rho = 1.0;
  const Eigen::SparseMatrix<double> EtE = (qp.E.transpose() * qp.E).pruned();
  t.resize(n_dual_entries);
  Eigen::SparseMatrix<double> Hrho = qp.H + rho * EtE;
  for (int k = 0; k < Hrho.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(Hrho, k); it; ++it) {
      t.emplace_back(it.row(), it.col(), it.value());
    }
  }
  Eigen::SparseMatrix<double> Kaug(n, n);
  Kaug.setFromTriplets(t.begin(), t.end());
  const double delta = 1e-10 * std::max(scale, 1.0);
  for (int i = nv; i < n; ++i) t.emplace_back(i, i, -delta);
  Eigen::SparseMatrix<double> Kreg(n, n);
  Kreg.setFromTriplets(t.begin(), t.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(Kreg);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("kkt-singular", "KKT factorization failed (smallest pivot 0)");
  }
  const double min_pivot = ldlt.vectorD().cwiseAbs().minCoeff();

  // Solves KKT x = b through the augmented system with refinement.
  auto refine = [&](const VectorXd& b_in, int& steps, double& rel) {
    VectorXd b = b_in;
    b.head(nv) += rho * (qp.E.transpose() * b_in.tail(m));
    VectorXd x = VectorXd::Zero(n);
    double best = std::numeric_limits<double>::infinity();
    int stall = 0;
    const double bn = b.norm();
    for (steps = 0; steps < 200; ++steps) {
      const VectorXd r = b - Kaug * x;
      const double rn = r.norm();
      rel = bn > 0 ? rn / bn : rn;
      if (rn <= 1e-15 * (scale * x.norm() + bn) || rn == 0.0) break;
      if (rn < 0.5 * best) {
        best = rn;
        stall = 0;
      } else if (++stall >= 5) {
        break;
      }
      x += ldlt.solve(r);
    }
    return x;
  };

  VectorXd b(n);
  b << -qp.g, qp.d;
  int steps = 0;
  double rel = 0.0;
  const VectorXd x = refine(b, steps, rel);

  LQSolution sol;
  sol.min_pivot = min_pivot;
  sol.refinement_steps = steps;
  sol.z = x.head(nv);
  sol.mu = x.tail(m);

  const VectorXd stat = qp.H * sol.z + qp.g + qp.E.transpose() * sol.mu;
  const double hn = qp.H.norm();
  sol.kkt_residual = stat.norm() / std::max(hn * sol.z.norm() + qp.g.norm(), 1e-300);
  if (stat.norm() == 0.0) sol.kkt_residual = 0.0;
  const double cons = (qp.E * sol.z - qp.d).norm() / std::max(qp.d.norm() + 1e-300, 1e-300);
  if (!x.allFinite() || (sol.kkt_residual > 1e-6 && stat.norm() > 1e-12) ||
      (cons > 1e-6 && qp.d.norm() > 0)) {
    throw NumericalError("kkt-singular", "KKT refinement stalled (relative residual " +
                                             std::to_string(rel) + ", smallest pivot " +
                                             std::to_string(min_pivot) + ")");
  }

  sol.u.resize(N, K);
  sol.psi.resize(N, K);
  for (int k = 0; k < K; ++k) {
    sol.u.col(k) = sol.z.segment(qp.control_index(k), N);
    const int row = qp.dynamics_row(k) + (qp.problem.equation == pde::Equation::Wave ? N : 0);
    sol.psi.col(k) = sol.mu.segment(row, N);
    sol.mid_times.push_back((k + 0.5) * qp.dt);
  }
  sol.y.resize(sd, K + 1);
  for (int k = 0; k <= K; ++k) {
    sol.y.col(k) = sol.z.segment(qp.state_index(k), sd);
    sol.times.push_back(k * qp.dt);
  }

  const VectorXd y1 = vector_or_zero(qp.problem.y1, sd, "y1");
  sol.endpoint_residual = state_norm(qp, sol.y.col(K) - y1);
  sol.endpoint_tolerance = 1e-6 * state_norm(qp, y1) + 1e-10;
  sol.status =
      sol.endpoint_residual <= sol.endpoint_tolerance ? Status::Feasible : Status::InfeasibleAtTolerance;
  sol.stationarity_residual = stationarity_residual(qp, sol.u, sol.psi, sol.psi0).second;
  for (int k = 0; k < K; ++k) sol.psi_norm = std::max(sol.psi_norm, sol.psi.col(k).norm());
  sol.psi_norm /= std::abs(sol.psi0);

  // power and inverse power iterations on the symmetric KKT matrix
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::sin(1.0 + i);
  v.normalize();
  double lmax = 0.0;
  for (int it = 0; it < power_iterations; ++it) {
    VectorXd w = KKT * v;
    lmax = w.norm();
    if (lmax == 0.0) break;
    v = w / lmax;
  }
  for (int i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::cos(1.0 + i);
  v.normalize();
  double inv = 0.0;
  for (int it = 0; it < power_iterations; ++it) {
    int s = 0;
    double r = 0.0;
    VectorXd w = refine(v, s, r);
    inv = w.norm();
    if (inv == 0.0 || !std::isfinite(inv)) break;
    v = w / inv;
  }
  sol.kkt_condition_number = inv > 0 ? lmax * inv : std::numeric_limits<double>::infinity();
  sol.effective_condition = b.norm() > 0 ? lmax * x.norm() / b.norm() : 0.0;
  return sol;
}

PMPReport verify_pmp(const LQSolution& sol, const QuadraticProgram& qp) {
  const auto& pr = qp.problem;
  const int N = pr.N, K = pr.K;
  const double dt = qp.dt;
  const bool wave = pr.equation == pde::Equation::Wave;
  PMPReport rep;

  MatrixXd ybar(N, K);
  for (int n = 0; n < K; ++n) ybar.col(n) = 0.5 * (sol.y.col(n).head(N) + sol.y.col(n + 1).head(N));
  double psi_max = 0.0;
  for (int n = 0; n < K; ++n) psi_max = std::max(psi_max, sol.psi.col(n).norm());
  rep.psi_sup = psi_max;

  MatrixXd muy(N, K);
  for (int n = 0; n < K; ++n) {
    muy.col(n) = wave ? VectorXd(sol.mu.segment(qp.dynamics_row(n), N)) : VectorXd::Zero(N);
  }
  const MatrixXd I = MatrixXd::Identity(N, N);

  // (i-a) backward trapezoid recursion from the last interval
  {
    MatrixXd psi = MatrixXd::Zero(N, K), py = MatrixXd::Zero(N, K);
    psi.col(K - 1) = sol.psi.col(K - 1);
    py.col(K - 1) = muy.col(K - 1);
    for (int n = K - 1; n >= 1; --n) {
      const MatrixXd Ln = lambda_at(qp, n);
      const VectorXd src = 0.5 * dt * (qp.Q[n] * ybar.col(n) + qp.Q[n - 1] * ybar.col(n - 1));
      if (wave) {
        const VectorXd rhs1 = psi.col(n) + 0.5 * dt * py.col(n);
        const VectorXd rhs2 = py.col(n) - 0.5 * dt * Ln * psi.col(n) - src;
        const VectorXd a = (I + 0.25 * dt * dt * Ln).partialPivLu().solve(rhs2 - 0.5 * dt * Ln * rhs1);
        py.col(n - 1) = a;
        psi.col(n - 1) = rhs1 + 0.5 * dt * a;
      } else {
        psi.col(n - 1) =
            (I + 0.5 * dt * Ln).partialPivLu().solve((I - 0.5 * dt * Ln) * psi.col(n) - src);
      }
    }
    double dev = 0.0;
    for (int n = 0; n < K; ++n) dev = std::max(dev, (psi.col(n) - sol.psi.col(n)).norm());
    rep.adjoint_deviation_discrete = psi_max > 0 ? dev / psi_max : dev;
  }

  // (i-b) fine RK4 on the continuous adjoint, backward from t_{K-1/2}
  {
    auto interp_nodes = [&](const std::vector<MatrixXd>& M, double t) {
      const double s = std::clamp(t / dt, 0.0, static_cast<double>(K));
      const int i = std::min(static_cast<int>(s), K - 1);
      const double f = s - i;
      return MatrixXd((1 - f) * M[i] + f * M[i + 1]);
    };
    auto interp_mid = [&](const std::vector<MatrixXd>& M, double t) {
      const double s = std::clamp(t / dt - 0.5, 0.0, static_cast<double>(K - 1));
      const int i = std::min(static_cast<int>(s), K - 2);
      const double f = s - i;
      return MatrixXd((1 - f) * M[i] + f * M[i + 1]);
    };
    auto ypos = [&](double t) {
      const double s = std::clamp(t / dt, 0.0, static_cast<double>(K));
      const int i = std::min(static_cast<int>(s), K - 1);
      const double f = s - i;
      return VectorXd((1 - f) * sol.y.col(i).head(N) + f * sol.y.col(i + 1).head(N));
    };
    auto lam = [&](double t) {
      MatrixXd L = interp_nodes(qp.A, t);
      L.diagonal() += qp.lambda;
      return L;
    };
    // wave: X = (psi, psi'), psi'' = -L psi - Q y; heat: psi' = L psi + Q y
    auto rhs = [&](double t, const VectorXd& X) {
      const MatrixXd L = lam(t);
      const VectorXd qy = interp_mid(qp.Q, t) * ypos(t);
      if (wave) {
        VectorXd out(2 * N);
        out.head(N) = X.tail(N);
        out.tail(N) = -L * X.head(N) - qy;
        return out;
      }
      return VectorXd(L * X + qy);
    };
    const int sub = wave ? 8 : std::max(8, static_cast<int>(std::ceil(dt * qp.lambda.maxCoeff())));
    VectorXd X(wave ? 2 * N : N);
    if (wave) {
      X << sol.psi.col(K - 1), -muy.col(K - 1);
    } else {
      X = sol.psi.col(K - 1);
    }
    double dev = 0.0;
    for (int n = K - 1; n >= 1; --n) {
      const double h = -dt / sub;
      double t = (n + 0.5) * dt;
      for (int s = 0; s < sub; ++s) {
        const VectorXd k1 = rhs(t, X);
        const VectorXd k2 = rhs(t + 0.5 * h, X + 0.5 * h * k1);
        const VectorXd k3 = rhs(t + 0.5 * h, X + 0.5 * h * k2);
        const VectorXd k4 = rhs(t + h, X + h * k3);
        X += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        t += h;
      }
      dev = std::max(dev, (X.head(N) - sol.psi.col(n - 1)).norm());
    }
    rep.adjoint_deviation_continuous = psi_max > 0 ? dev / psi_max : dev;
  }

  // (ii) pointwise stationarity and control recovery
  const auto [abs_res, rel_res] = stationarity_residual(qp, sol.u, sol.psi, sol.psi0);
  rep.stationarity_absolute = abs_res;
  rep.stationarity_residual = rel_res;
  double mis = 0.0, umax = 0.0;
  for (int n = 0; n < K; ++n) {
    const VectorXd rec = qp.R[n].ldlt().solve(qp.C * sol.psi.col(n) / (-sol.psi0));
    mis = std::max(mis, (rec - sol.u.col(n)).norm());
    umax = std::max(umax, sol.u.col(n).norm());
  }
  rep.control_recovery_mismatch = umax > 0 ? mis / umax : mis;

  // (iii) nontriviality with normalization |psi0|
  const double norm = std::abs(sol.psi0);
  rep.nontrivial = std::max(std::abs(sol.psi0), psi_max) >= 1e-8 * norm && norm > 0;
  rep.trivially_satisfied = psi_max <= 1e-12 && umax <= 1e-12;
  return rep;
}

VectorXd rough_target(int N) {
  if (N < 1) throw ValidationError("N must be positive");
  VectorXd c(N);
  for (int k = 1; k <= N; ++k) c(k - 1) = (k % 2 == 0 ? 1.0 : -1.0) / std::sqrt(N);
  return c;
}

ScanReport multiplier_degeneracy_scan(const LQProblem& base, const std::vector<int>& Ns,
                                      TargetKind target, int threads) {
  if (base.equation != pde::Equation::Heat) {
    throw ValidationError("multiplier_degeneracy_scan needs the heat equation");
  }
  if (Ns.empty()) throw ValidationError("scan needs at least one N");
  ScanReport rep;
  rep.target = target;
  rep.rows.resize(Ns.size());
  parallel_for(Ns.size(), threads, [&](std::size_t i) {
    LQProblem p = base;
    p.N = Ns[i];
    ScanRow row;
    row.N = p.N;
    if (target == TargetKind::Rough) {
      p.y0 = VectorXd::Zero(p.N);
      p.y1 = rough_target(p.N);
    } else {
      p.y0.resize(p.N);
      for (int k = 1; k <= p.N; ++k) {
        p.y0(k - 1) = std::sqrt(2.0 / p.L) * 2.0 * std::pow(p.L, 3) *
                      (1.0 - (k % 2 == 0 ? 1.0 : -1.0)) / std::pow(k * M_PI, 3);
      }
      p.y1 = VectorXd();
      const QuadraticProgram free_qp = discretize(p);
      p.y1 = free_endpoint(free_qp, p.y0);
    }
    const QuadraticProgram qp = discretize(p);
    try {
      const LQSolution sol = solve_endpoint_lq(qp);
      row.status = sol.status;
      row.kkt_condition_number = sol.kkt_condition_number;
      row.effective_condition = sol.effective_condition;
      row.psi_norm = sol.psi_norm;
      row.endpoint_residual = sol.endpoint_residual;
      row.min_pivot = sol.min_pivot;
    } catch (const NumericalError& e) {
      if (e.code() != "kkt-singular") throw;
      row.kkt_singular = true;
      row.kkt_condition_number = std::numeric_limits<double>::infinity();
    }
    rep.rows[i] = row;
  });
  rep.monotone_growth = true;
  rep.min_growth_factor = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const double a = rep.rows[i - 1].kkt_condition_number, b = rep.rows[i].kkt_condition_number;
    rep.monotone_growth = rep.monotone_growth && b > a;
    rep.min_growth_factor = std::min(rep.min_growth_factor, b / a);
  }
  if (rep.rows.size() < 2) rep.min_growth_factor = 0.0;
  return rep;
}

}  // namespace codim::lqoc
