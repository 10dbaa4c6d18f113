#include <algorithm>
#include <cmath>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "codim/errors.hpp"
#include "codim/pde.hpp"

namespace codim::pde {

namespace {

Eigen::SparseMatrix<double> laplacian_matrix(const GridSpec& grid) {
  const int n = grid.points();
  const int nx = grid.nx;
  const double ix2 = 1.0 / (grid.hx() * grid.hx());
  const double iy2 = grid.box.dim == 2 ? 1.0 / (grid.hy() * grid.hy()) : 0.0;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * n);
  for (int idx = 0; idx < n; ++idx) {
    const int i = idx % nx;
    trip.emplace_back(idx, idx, -2.0 * (ix2 + iy2));
    if (i > 0) trip.emplace_back(idx, idx - 1, ix2);
    if (i < nx - 1) trip.emplace_back(idx, idx + 1, ix2);
    if (grid.box.dim == 2) {
      if (idx >= nx) trip.emplace_back(idx, idx - nx, iy2);
      if (idx + nx < n) trip.emplace_back(idx, idx + nx, iy2);
    }
  }
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

class CrankNicolson {
 public:
  CrankNicolson(const GridSpec& grid, double dt) : dt_(dt) {
    const Eigen::SparseMatrix<double> L = laplacian_matrix(grid);
    Eigen::SparseMatrix<double> I(L.rows(), L.cols());
    I.setIdentity();
    implicit_ = I - 0.5 * dt * L;
    explicit_ = I + 0.5 * dt * L;
    solver_.compute(implicit_);
    if (solver_.info() != Eigen::Success) {
      throw NumericalError("linear-solve-failure", "Crank-Nicolson factorization failed");
    }
  }

  // Y <- (I - dt/2 L)^{-1} ((I + dt/2 L) Y + rhs_extra)
  void step(Eigen::MatrixXd& Y, const Eigen::MatrixXd* extra) const {
    Eigen::MatrixXd rhs = explicit_ * Y;
    if (extra) rhs.colwise() += extra->col(0);
    Y = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success) {
      throw NumericalError("linear-solve-failure", "Crank-Nicolson solve failed");
    }
  }
  double dt() const { return dt_; }

 private:
  double dt_;
  Eigen::SparseMatrix<double> implicit_, explicit_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

void check_heat_grid(const GridSpec& grid, double T) {
  GridSpec g = grid;
  g.scheme = Scheme::ImplicitTrapezoid;
  g.validate();
  if (!(T > 0)) throw ValidationError("heat horizon must be positive");
}

}  // namespace

void march_heat(const GridSpec& grid, const Eigen::MatrixXd& y0, double T, int steps,
                const std::function<void(int, double, const Eigen::MatrixXd&)>& observe) {
  check_heat_grid(grid, T);
  if (steps < 1) throw ValidationError("heat march needs at least one step");
  const double dt = T / steps;
  CrankNicolson cn(grid, dt);
  Eigen::MatrixXd Y = y0;
  observe(0, 0.0, Y);
  for (int n = 1; n <= steps; ++n) {
    cn.step(Y, nullptr);
    observe(n, n * dt, Y);
  }
}

Trajectory solve_heat(const GridSpec& grid, const Forcing& source, const Eigen::VectorXd& init,
                      double T, Direction direction) {
  check_heat_grid(grid, T);
  if (grid.dt > T / 64.0 * (1.0 + 1e-12)) {
    throw ValidationError("heat time step must satisfy dt <= T/64");
  }
  if (init.size() != grid.points()) throw ValidationError("heat data does not match the grid");
  if (direction == Direction::Backward && source) {
    throw ValidationError("the backward (adjoint) heat problem is homogeneous");
  }
  const int K = std::max(64, static_cast<int>(std::ceil(T / grid.dt - 1e-9)));
  const double dt = T / K;
  CrankNicolson cn(grid, dt);

  std::vector<Eigen::VectorXd> states;
  states.reserve(K + 1);
  Eigen::MatrixXd Y = init;
  states.push_back(init);
  Eigen::MatrixXd f0, f1, extra;
  if (source) source(0.0, f0);
  for (int n = 1; n <= K; ++n) {
    if (source) {
      source(n * dt, f1);
      extra = 0.5 * dt * (f0 + f1);
      cn.step(Y, &extra);
      f0.swap(f1);
    } else {
      cn.step(Y, nullptr);
    }
    states.push_back(Y.col(0));
  }

  Trajectory tr;
  tr.grid = grid;
  tr.grid.dt = dt;
  if (direction == Direction::Backward) std::reverse(states.begin(), states.end());
  for (int n = 0; n <= K; ++n) {
    tr.times.push_back(n * dt);
    tr.energy.push_back(std::sqrt(grid.cell()) * states[n].norm());
  }
  tr.y = std::move(states);
  return tr;
}

}  // namespace codim::pde
