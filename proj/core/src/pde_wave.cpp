#include <algorithm>
#include <cmath>

#include "codim/errors.hpp"
#include "codim/pde.hpp"

namespace codim::pde {

namespace {

int step_count(double T, double dt) {
  return std::max(1, static_cast<int>(std::ceil(T / dt - 1e-9)));
}

// Lap Y - a Y - memory + f
class WaveOperator {
 public:
  WaveOperator(const GridSpec& grid, const PotentialField& a, const Forcing& forcing)
      : grid_(grid), a_(a), forcing_(forcing) {}

  void apply(double t, const Eigen::MatrixXd& Y, const Eigen::MatrixXd* memory,
             Eigen::MatrixXd& out) {
    apply_laplacian(grid_, Y, out);
    if (!a_.is_zero()) out -= a_.sample(grid_, t).asDiagonal() * Y;
    if (memory) out -= *memory;
    if (forcing_) {
      forcing_(t, f_);
      out.colwise() += f_.col(0);
    }
  }

 private:
  const GridSpec& grid_;
  const PotentialField& a_;
  const Forcing& forcing_;
  Eigen::MatrixXd f_;
};

double discrete_energy(const GridSpec& grid, const PotentialField& a, double t_half,
                       const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, double dt) {
  Eigen::MatrixXd lap(y0.size(), 1);
  apply_laplacian(grid, y0, lap);
  const Eigen::VectorXd v = (y1 - y0) / dt;
  double e = 0.5 * v.squaredNorm() - 0.5 * y1.dot(lap.col(0));
  if (!a.is_zero()) e += 0.5 * y1.dot(a.sample(grid, t_half).cwiseProduct(y0));
  return e * grid.cell();
}

void fill_energy(Trajectory& tr, const PotentialField& a) {
  tr.energy.clear();
  for (std::size_t n = 0; n + 1 < tr.y.size(); ++n) {
    const double dt = tr.times[n + 1] - tr.times[n];
    tr.energy.push_back(discrete_energy(tr.grid, a, 0.5 * (tr.times[n] + tr.times[n + 1]),
                                        tr.y[n], tr.y[n + 1], dt));
  }
}

}  // namespace

void march_wave(const GridSpec& grid, const PotentialField& a, const WaveOptions& opts,
                const Eigen::MatrixXd& y0, const Eigen::MatrixXd& y1, double T,
                const WaveObserver& observe) {
  grid.validate();
  if (grid.scheme != Scheme::Leapfrog) throw ValidationError("wave solves need the leapfrog scheme");
  if (!(T > 0)) throw ValidationError("wave horizon must be positive");
  if (y0.rows() != grid.points() || y1.rows() != grid.points() || y0.cols() != y1.cols()) {
    throw ValidationError("wave initial data does not match the grid");
  }
  const int K = step_count(T, grid.dt);
  const double dt = T / K;
  const double dt2 = dt * dt;
  const bool has_memory = !opts.memory.is_zero();
  WaveOperator op(grid, a, opts.forcing);

  const Eigen::Index rows = y0.rows(), cols = y0.cols();
  Eigen::MatrixXd acc(rows, cols);
  Eigen::MatrixXd memory = Eigen::MatrixXd::Zero(rows, has_memory ? cols : 0);
  auto accumulate_memory = [&](double t_half, const Eigen::MatrixXd& next,
                               const Eigen::MatrixXd& cur) {
    if (has_memory) memory += opts.memory.sample(grid, t_half).asDiagonal() * (next - cur);
  };

  op.apply(0.0, y0, nullptr, acc);
  Eigen::MatrixXd prev = y0;
  Eigen::MatrixXd cur = y0 + dt * y1 + 0.5 * dt2 * acc;
  Eigen::MatrixXd next(rows, cols);
  observe(0, 0.0, prev, y1);
  accumulate_memory(0.5 * dt, cur, prev);
  for (int n = 1; n <= K; ++n) {
    const double t = n * dt;
    op.apply(t, cur, has_memory ? &memory : nullptr, acc);
    next = 2.0 * cur - prev + dt2 * acc;
    observe(n, t, cur, (next - prev) / (2.0 * dt));
    accumulate_memory(t + 0.5 * dt, next, cur);
    prev.swap(cur);
    cur.swap(next);
  }
}

Trajectory solve_wave(const GridSpec& grid, const PotentialField& a, const ControlField* control,
                      const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, double T,
                      const WaveOptions& opts) {
  WaveOptions o = opts;
  if (control) o.forcing = control->as_forcing(grid);
  Trajectory tr;
  tr.grid = grid;
  march_wave(grid, a, o, y0, y1, T,
             [&](int, double t, const Eigen::MatrixXd& y, const Eigen::MatrixXd& yt) {
               tr.times.push_back(t);
               tr.y.push_back(y.col(0));
               tr.yt.push_back(yt.col(0));
             });
  fill_energy(tr, a);
  return tr;
}

Trajectory solve_wave_reversed(const GridSpec& grid, const PotentialField& a,
                               const Eigen::VectorXd& phi1, const Eigen::VectorXd& phi2,
                               double T) {
  return solve_wave(grid, a.time_reversed(T), nullptr, phi1, -phi2, T);
}

Trajectory solve_adjoint_wave(const GridSpec& grid, const PotentialField& a,
                              const Eigen::VectorXd& phi1, const Eigen::VectorXd& phi2,
                              double T) {
  grid.validate();
  if (grid.scheme != Scheme::Leapfrog) throw ValidationError("wave solves need the leapfrog scheme");
  if (!(T > 0)) throw ValidationError("wave horizon must be positive");
  if (phi1.size() != grid.points() || phi2.size() != grid.points()) {
    throw ValidationError("terminal data does not match the grid");
  }
  const int K = step_count(T, grid.dt);
  const double dt = T / K;
  const double dt2 = dt * dt;
  Forcing none;
  WaveOperator op(grid, a, none);

  std::vector<Eigen::VectorXd> y(K + 1);
  Eigen::MatrixXd acc(phi1.size(), 1);
  y[K] = phi1;
  op.apply(T, phi1, nullptr, acc);
  y[K - 1] = phi1 - dt * phi2 + 0.5 * dt2 * acc.col(0);
  for (int n = K - 1; n >= 1; --n) {
    op.apply(n * dt, y[n], nullptr, acc);
    y[n - 1] = 2.0 * y[n] - y[n + 1] + dt2 * acc.col(0);
  }
  op.apply(0.0, y[0], nullptr, acc);
  const Eigen::VectorXd below = 2.0 * y[0] - y[1] + dt2 * acc.col(0);

  Trajectory tr;
  tr.grid = grid;
  for (int n = 0; n <= K; ++n) {
    tr.times.push_back(n * dt);
    tr.y.push_back(y[n]);
    if (n == K) {
      tr.yt.push_back(phi2);
    } else {
      const Eigen::VectorXd& lower = n == 0 ? below : y[n - 1];
      tr.yt.push_back((y[n + 1] - lower) / (2.0 * dt));
    }
  }
  fill_energy(tr, a);
  return tr;
}

namespace {

template <class Get>
Eigen::VectorXd interpolate(const std::vector<double>& times, double t, Get get) {
  if (times.empty()) throw ValidationError("empty trajectory");
  if (t <= times.front()) return get(0);
  if (t >= times.back()) return get(times.size() - 1);
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double s = (t - times[i]) / (times[i + 1] - times[i]);
  return (1.0 - s) * get(i) + s * get(i + 1);
}

}  // namespace

Eigen::VectorXd Trajectory::position_at(double t) const {
  return interpolate(times, t, [&](std::size_t i) { return y[i]; });
}

Eigen::VectorXd Trajectory::velocity_at(double t) const {
  if (yt.empty()) throw ValidationError("trajectory has no velocity samples");
  return interpolate(times, t, [&](std::size_t i) { return yt[i]; });
}

double Trajectory::energy_drift() const {
  if (energy.empty()) return 0.0;
  const double e0 = energy.front();
  double drift = 0.0;
  for (double e : energy) drift = std::max(drift, std::abs(e - e0));
  return e0 != 0.0 ? drift / std::abs(e0) : drift;
}

}  // namespace codim::pde
