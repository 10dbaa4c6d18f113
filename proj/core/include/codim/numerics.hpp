#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace codim {

/// Symmetric eigen-decomposition with eigenvalues sorted descending.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns match `values`
};
SymmetricEigen symmetric_eigen_descending(const Eigen::MatrixXd& S);

/// e^{A t}
Eigen::MatrixXd expm(const Eigen::MatrixXd& A, double t);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
/// Ordinary least squares fit y ~ slope * x + intercept.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Slope of log(y) against log(x).
LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// Relative Frobenius distance ||A - B|| / max(||A||, ||B||, tiny).
double relative_frobenius(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Runs fn(i) for i in [0, n). Work is split into contiguous blocks over
/// `threads` workers; threads <= 1 runs inline in index order.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Composite trapezoid weights for n >= 2 uniform nodes of spacing h.
Eigen::VectorXd trapezoid_weights(int n, double h);

/// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int n, double a, double b, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace codim
