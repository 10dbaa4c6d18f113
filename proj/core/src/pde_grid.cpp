#include <algorithm>
#include <cmath>
#include <tuple>

#include "codim/errors.hpp"
#include "codim/pde.hpp"

namespace codim::pde {

GridSpec GridSpec::interval(double L, int nx, double dt, Scheme scheme) {
  GridSpec g;
  g.box = Box::interval(L);
  g.nx = nx;
  g.ny = 1;
  g.dt = dt;
  g.scheme = scheme;
  return g;
}

GridSpec GridSpec::rectangle(double L1, double L2, int nx, int ny, double dt, Scheme scheme) {
  GridSpec g;
  g.box = Box::rectangle(L1, L2);
  g.nx = nx;
  g.ny = ny;
  g.dt = dt;
  g.scheme = scheme;
  return g;
}

GridSpec GridSpec::wave(const Box& box, int nx, int ny, double cfl) {
  GridSpec g;
  g.box = box;
  g.nx = nx;
  g.ny = box.dim == 2 ? ny : 1;
  g.scheme = Scheme::Leapfrog;
  const double h = box.dim == 2 ? std::min(g.hx(), g.hy()) : g.hx();
  g.dt = cfl * h / std::sqrt(static_cast<double>(box.dim));
  return g;
}

std::pair<double, double> GridSpec::point(int idx) const {
  if (box.dim == 1) return {x(idx), 0.0};
  return {x(idx % nx), y(idx / nx)};
}

void GridSpec::validate() const {
  if (box.dim != 1 && box.dim != 2) throw ValidationError("grid dimension must be 1 or 2");
  if (!(box.L1 > 0) || (box.dim == 2 && !(box.L2 > 0))) {
    throw ValidationError("grid domain lengths must be positive");
  }
  if (nx < 16 || (box.dim == 2 && ny < 16)) {
    throw ValidationError("grid needs at least 16 interior points per axis");
  }
  if (!(dt > 0)) throw ValidationError("grid time step must be positive");
  if (scheme == Scheme::Leapfrog) {
    const double h = box.dim == 2 ? std::min(hx(), hy()) : hx();
    const double limit = 0.9 * h / std::sqrt(static_cast<double>(box.dim));
    if (dt > limit * (1.0 + 1e-12)) {
      throw NumericalError("cfl-violation", "leapfrog time step " + std::to_string(dt) +
                                                " exceeds CFL limit " + std::to_string(limit));
    }
  }
}

Region Region::intervals(std::vector<std::pair<double, double>> parts) {
  for (const auto& [a, b] : parts) {
    if (!(b > a)) throw ValidationError("observation interval must have positive length");
  }
  Region r;
  r.intervals_ = std::move(parts);
  return r;
}

Region Region::planar(geometry::ControlRegion omega) {
  Region r;
  r.planar_ = std::move(omega);
  return r;
}

Region Region::everywhere() {
  Region r;
  r.everywhere_ = true;
  return r;
}

bool Region::contains(double x, double y) const {
  if (everywhere_) return true;
  if (planar_) return planar_->contains(geometry::Vec2(x, y));
  for (const auto& [a, b] : intervals_) {
    if (x >= a && x <= b) return true;
  }
  return false;
}

Eigen::VectorXd Region::cell_weights(const GridSpec& grid) const {
  const int n = grid.points();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (everywhere_) return Eigen::VectorXd::Constant(n, grid.cell());
  if (grid.box.dim == 1) {
    if (planar_) throw ValidationError("planar region used on a 1D grid");
    const double h = grid.hx();
    for (int i = 0; i < n; ++i) {
      const double lo = grid.x(i) - 0.5 * h, hi = grid.x(i) + 0.5 * h;
      double cover = 0;
      for (const auto& [a, b] : intervals_) cover += std::max(0.0, std::min(hi, b) - std::max(lo, a));
      w(i) = std::min(cover, h);
    }
    return w;
  }
  if (!planar_) throw ValidationError("interval region used on a 2D grid");
  constexpr int kSub = 8;
  const double hx = grid.hx(), hy = grid.hy();
  for (int idx = 0; idx < n; ++idx) {
    const auto [x, y] = grid.point(idx);
    int hits = 0;
    for (int a = 0; a < kSub; ++a) {
      for (int b = 0; b < kSub; ++b) {
        const double sx = x + hx * ((a + 0.5) / kSub - 0.5);
        const double sy = y + hy * ((b + 0.5) / kSub - 0.5);
        if (planar_->contains(geometry::Vec2(sx, sy))) ++hits;
      }
    }
    w(idx) = grid.cell() * hits / double(kSub * kSub);
  }
  return w;
}

PotentialField PotentialField::from_function(Fn f) {
  PotentialField p;
  p.fn_ = std::move(f);
  return p;
}

namespace {

// Index i and fraction s with xs[i] <= v <= xs[i+1], clamped to the table.
std::pair<int, double> locate(const std::vector<double>& xs, double v) {
  if (xs.size() == 1 || v <= xs.front()) return {0, 0.0};
  if (v >= xs.back()) return {static_cast<int>(xs.size()) - 2, 1.0};
  const auto it = std::upper_bound(xs.begin(), xs.end(), v);
  const int i = static_cast<int>(it - xs.begin()) - 1;
  return {i, (v - xs[i]) / (xs[i + 1] - xs[i])};
}

}  // namespace

PotentialField PotentialField::from_table(std::vector<double> xs, std::vector<double> ys,
                                          std::vector<double> ts, std::vector<double> values) {
  if (xs.empty() || ys.empty() || ts.empty() ||
      values.size() != xs.size() * ys.size() * ts.size()) {
    throw ValidationError("potential table: size mismatch");
  }
  for (const auto* axis : {&xs, &ys, &ts}) {
    if (!std::is_sorted(axis->begin(), axis->end())) {
      throw ValidationError("potential table axes must be increasing");
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("potential table has non-finite values");
  }
  const std::size_t nx = xs.size(), ny = ys.size();
  auto at = [=](std::size_t it, std::size_t iy, std::size_t ix) {
    return values[(it * ny + iy) * nx + ix];
  };
  auto plane = [=](std::size_t it, double x, double y) {
    const auto [ix, sx] = locate(xs, x);
    const auto [iy, sy] = locate(ys, y);
    const std::size_t ix1 = std::min<std::size_t>(ix + 1, nx - 1);
    const std::size_t iy1 = std::min<std::size_t>(iy + 1, ny - 1);
    const double v0 = (1 - sx) * at(it, iy, ix) + sx * at(it, iy, ix1);
    const double v1 = (1 - sx) * at(it, iy1, ix) + sx * at(it, iy1, ix1);
    return (1 - sy) * v0 + sy * v1;
  };
  const std::size_t nt = ts.size();
  return from_function([=](double x, double y, double t) {
    const auto [itx, st] = locate(ts, t);
    const std::size_t it1 = std::min<std::size_t>(itx + 1, nt - 1);
    return (1 - st) * plane(itx, x, y) + st * plane(it1, x, y);
  });
}

double PotentialField::operator()(double x, double y, double t) const {
  return fn_ ? fn_(x, y, t) : 0.0;
}

PotentialField PotentialField::time_reversed(double T) const {
  if (!fn_) return PotentialField();
  Fn f = fn_;
  return from_function([f, T](double x, double y, double t) { return f(x, y, T - t); });
}

Eigen::VectorXd PotentialField::sample(const GridSpec& grid, double t) const {
  const int n = grid.points();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  if (!fn_) return v;
  for (int idx = 0; idx < n; ++idx) {
    const auto [x, y] = grid.point(idx);
    v(idx) = fn_(x, y, t);
  }
  if (!v.allFinite()) throw ValidationError("potential is not finite on the grid");
  return v;
}

double Mode::operator()(double x, double y) const {
  double v = std::sqrt(2.0 / box.L1) * std::sin(k1 * M_PI * x / box.L1);
  if (box.dim == 2) v *= std::sqrt(2.0 / box.L2) * std::sin(k2 * M_PI * y / box.L2);
  return v;
}

Eigen::VectorXd Mode::sample(const GridSpec& grid) const {
  Eigen::VectorXd v(grid.points());
  for (int idx = 0; idx < grid.points(); ++idx) {
    const auto [x, y] = grid.point(idx);
    v(idx) = (*this)(x, y);
  }
  return v;
}

namespace {

std::vector<Mode> enumerate_modes(const Box& box, int k_max) {
  std::vector<Mode> modes;
  const double a = M_PI / box.L1;
  if (box.dim == 1) {
    for (int k = 1; k <= k_max; ++k) modes.push_back({a * a * k * k, k, 0, box});
    return modes;
  }
  const double b = M_PI / box.L2;
  for (int k1 = 1; k1 <= k_max; ++k1) {
    for (int k2 = 1; k2 <= k_max; ++k2) {
      modes.push_back({a * a * k1 * k1 + b * b * k2 * k2, k1, k2, box});
    }
  }
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& m1, const Mode& m2) {
    return std::tie(m1.eigenvalue, m1.k1, m1.k2) < std::tie(m2.eigenvalue, m2.k1, m2.k2);
  });
  return modes;
}

}  // namespace

std::vector<Mode> laplacian_eigenbasis(const Box& box, int N) {
  if (N < 1) throw ValidationError("eigenbasis size must be positive");
  if (box.dim == 1) return enumerate_modes(box, N);
  // Every one of the first N modes has k1, k2 <= N.
  auto all = enumerate_modes(box, N);
  // Eigenvalues equal up to rounding are ordered lexicographically.
  std::stable_sort(all.begin(), all.end(), [](const Mode& m1, const Mode& m2) {
    const double tol = 1e-12 * std::max(m1.eigenvalue, m2.eigenvalue);
    if (std::abs(m1.eigenvalue - m2.eigenvalue) > tol) return m1.eigenvalue < m2.eigenvalue;
    return std::tie(m1.k1, m1.k2) < std::tie(m2.k1, m2.k2);
  });
  all.resize(N);
  return all;
}

std::vector<Mode> tensor_eigenbasis(const Box& box, int n_per_axis) {
  if (n_per_axis < 1) throw ValidationError("eigenbasis size must be positive");
  return enumerate_modes(box, n_per_axis);
}

void apply_laplacian(const GridSpec& grid, const Eigen::MatrixXd& Y, Eigen::MatrixXd& out) {
  const int nx = grid.nx;
  const double ix2 = 1.0 / (grid.hx() * grid.hx());
  if (grid.box.dim == 1) {
    out.noalias() = (-2.0 * ix2) * Y;
    out.topRows(nx - 1) += ix2 * Y.bottomRows(nx - 1);
    out.bottomRows(nx - 1) += ix2 * Y.topRows(nx - 1);
    return;
  }
  const int ny = grid.ny;
  const int n = nx * ny;
  const double iy2 = 1.0 / (grid.hy() * grid.hy());
  out.noalias() = (-2.0 * (ix2 + iy2)) * Y;
  for (int j = 0; j < ny; ++j) {
    out.middleRows(j * nx, nx - 1) += ix2 * Y.middleRows(j * nx + 1, nx - 1);
    out.middleRows(j * nx + 1, nx - 1) += ix2 * Y.middleRows(j * nx, nx - 1);
  }
  out.topRows(n - nx) += iy2 * Y.bottomRows(n - nx);
  out.bottomRows(n - nx) += iy2 * Y.topRows(n - nx);
}

Forcing ControlField::as_forcing(const GridSpec& grid) const {
  const Eigen::VectorXd mask = omega.cell_weights(grid) / grid.cell();
  auto fn = u;
  return [grid, mask, fn](double t, Eigen::MatrixXd& out) {
    out.resize(grid.points(), 1);
    for (int idx = 0; idx < grid.points(); ++idx) {
      const auto [x, y] = grid.point(idx);
      out(idx, 0) = mask(idx) > 0 ? mask(idx) * fn(x, y, t) : 0.0;
    }
  };
}

std::string to_string(Equation e) { return e == Equation::Wave ? "wave" : "heat"; }

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Gap: return "GAP";
    case Verdict::Decay: return "DECAY";
    default: return "INDETERMINATE";
  }
}

}  // namespace codim::pde
