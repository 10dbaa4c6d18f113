#include "codim/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

#include "codim/errors.hpp"

namespace codim {

SymmetricEigen symmetric_eigen_descending(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigen-failure", "symmetric eigensolver did not converge");
  }
  const Eigen::Index n = S.rows();
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& A, double t) {
  const Eigen::MatrixXd At = A * t;
  return At.exp();
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("fit_line needs at least two paired samples");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

double relative_frobenius(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const double scale = std::max({A.norm(), B.norm(), 1e-300});
  return (A - B).norm() / scale;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Eigen::VectorXd trapezoid_weights(int n, double h) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
  w(0) *= 0.5;
  w(n - 1) *= 0.5;
  return w;
}

void gauss_legendre(int n, double a, double b, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  // Golub-Welsch: eigenvalues of the Jacobi matrix.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = beta;
    J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    nodes(i) = 0.5 * (b - a) * x + 0.5 * (a + b);
    weights(i) = (b - a) * v0 * v0;
  }
}

}  // namespace codim
