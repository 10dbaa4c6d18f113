#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "codim/geometry.hpp"

namespace codim::pde {

/// Interval (0, L1) when dim == 1, rectangle (0, L1) x (0, L2) when dim == 2.
struct Box {
  int dim = 1;
  double L1 = 1.0;
  double L2 = 1.0;
  static Box interval(double L) { return {1, L, 1.0}; }
  static Box rectangle(double L1, double L2) { return {2, L1, L2}; }
};

enum class Scheme { Leapfrog, ImplicitTrapezoid };

/// Uniform interior grid, x index fastest; Dirichlet values are implicit zeros.
struct GridSpec {
  Box box;
  int nx = 16;
  int ny = 1;
  double dt = 0.0;
  Scheme scheme = Scheme::Leapfrog;

  static GridSpec interval(double L, int nx, double dt, Scheme scheme = Scheme::Leapfrog);
  static GridSpec rectangle(double L1, double L2, int nx, int ny, double dt,
                            Scheme scheme = Scheme::Leapfrog);
  /// Leapfrog grid with dt = cfl * h / sqrt(dim).
  static GridSpec wave(const Box& box, int nx, int ny = 1, double cfl = 0.9);

  double hx() const { return box.L1 / (nx + 1); }
  double hy() const { return box.dim == 2 ? box.L2 / (ny + 1) : 1.0; }
  double cell() const { return hx() * hy(); }
  int points() const { return box.dim == 2 ? nx * ny : nx; }
  double x(int i) const { return (i + 1) * hx(); }
  double y(int j) const { return (j + 1) * hy(); }
  /// Coordinates of flat index idx.
  std::pair<double, double> point(int idx) const;
  /// Throws ValidationError for bad sizes and NumericalError("cfl-violation").
  void validate() const;
};

/// Observation/control set: 1D intervals or a planar control region.
class Region {
 public:
  static Region intervals(std::vector<std::pair<double, double>> parts);
  static Region planar(geometry::ControlRegion omega);
  static Region everywhere();

  bool contains(double x, double y = 0.0) const;
  /// Per-grid-point quadrature weights: cell area times covered fraction.
  Eigen::VectorXd cell_weights(const GridSpec& grid) const;
  bool is_everywhere() const { return everywhere_; }
  const std::vector<std::pair<double, double>>& interval_parts() const { return intervals_; }
  const std::optional<geometry::ControlRegion>& planar_region() const { return planar_; }

 private:
  bool everywhere_ = false;
  std::vector<std::pair<double, double>> intervals_;
  std::optional<geometry::ControlRegion> planar_;
};

/// a(x, y, t); sampled tables interpolate bilinearly in space, linearly in time.
class PotentialField {
 public:
  using Fn = std::function<double(double x, double y, double t)>;

  PotentialField() = default;
  static PotentialField zero() { return PotentialField(); }
  static PotentialField from_function(Fn f);
  /// values indexed [t][y][x]; ys may hold a single entry for 1D.
  static PotentialField from_table(std::vector<double> xs, std::vector<double> ys,
                                   std::vector<double> ts, std::vector<double> values);

  double operator()(double x, double y, double t) const;
  bool is_zero() const { return !fn_; }
  /// a(x, T - t)
  PotentialField time_reversed(double T) const;
  /// Samples on the grid at time t; throws ValidationError if non-finite.
  Eigen::VectorXd sample(const GridSpec& grid, double t) const;

 private:
  Fn fn_;
};

struct Mode {
  double eigenvalue;
  int k1;
  int k2;  // 0 for intervals
  Box box;
  double operator()(double x, double y = 0.0) const;
  /// Values on the interior grid.
  Eigen::VectorXd sample(const GridSpec& grid) const;
};

/// First N Dirichlet eigenpairs, ascending, ties broken lexicographically by (k1, k2).
std::vector<Mode> laplacian_eigenbasis(const Box& box, int N);
/// All modes with 1 <= k1, k2 <= n_per_axis (rectangles) or k <= n_per_axis (intervals),
/// sorted as above.
std::vector<Mode> tensor_eigenbasis(const Box& box, int n_per_axis);

/// Second-order centered Dirichlet Laplacian applied to each column.
void apply_laplacian(const GridSpec& grid, const Eigen::MatrixXd& Y, Eigen::MatrixXd& out);

/// Grid function of chi_omega u at time t (caller applies the indicator).
using Forcing = std::function<void(double t, Eigen::MatrixXd& out)>;

struct ControlField {
  std::function<double(double x, double y, double t)> u;
  Region omega;
  Forcing as_forcing(const GridSpec& grid) const;
};

struct Trajectory {
  GridSpec grid;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::VectorXd> yt;  // empty for heat
  std::vector<double> energy;       // discrete energy per step (wave) or L2 norm (heat)

  Eigen::VectorXd position_at(double t) const;
  Eigen::VectorXd velocity_at(double t) const;
  double energy_drift() const;
};

struct WaveOptions {
  /// Memory potential m: adds int_0^t m(x, s) y_s(x, s) ds to the operator.
  PotentialField memory;
  Forcing forcing;
};

/// Callback receives step n, time, y^n and the centered velocity at t_n.
using WaveObserver =
    std::function<void(int n, double t, const Eigen::MatrixXd& y, const Eigen::MatrixXd& yt)>;

/// Multi-column leapfrog march of y_tt - Lap y + a y + memory = f on [0, T].
/// Steps = ceil(T / grid.dt) with the step shrunk to hit T exactly.
void march_wave(const GridSpec& grid, const PotentialField& a, const WaveOptions& opts,
                const Eigen::MatrixXd& y0, const Eigen::MatrixXd& y1, double T,
                const WaveObserver& observe);

Trajectory solve_wave(const GridSpec& grid, const PotentialField& a, const ControlField* control,
                      const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, double T,
                      const WaveOptions& opts = {});

/// Backward solve from phi(T) = phi1, phi_t(T) = phi2; trajectory indexed by real time.
Trajectory solve_adjoint_wave(const GridSpec& grid, const PotentialField& a,
                              const Eigen::VectorXd& phi1, const Eigen::VectorXd& phi2, double T);

/// Forward solve of the time-reversed problem (a(x, T - t), data (phi1, -phi2)), indexed by
/// the reversed time s = T - t.
Trajectory solve_wave_reversed(const GridSpec& grid, const PotentialField& a,
                               const Eigen::VectorXd& phi1, const Eigen::VectorXd& phi2,
                               double T);

enum class Direction { Forward, Backward };

/// Crank-Nicolson for y_t - Lap y = source (forward) or phi_t + Lap phi = 0 from phi(T) = init
/// (backward). Requires grid.dt <= T / 64.
Trajectory solve_heat(const GridSpec& grid, const Forcing& source, const Eigen::VectorXd& init,
                      double T, Direction direction);

/// Multi-column Crank-Nicolson march, observer gets (n, t, Y^n).
void march_heat(const GridSpec& grid, const Eigen::MatrixXd& y0, double T, int steps,
                const std::function<void(int, double, const Eigen::MatrixXd&)>& observe);

/// Exact-in-time solution of the a = 0 Dirichlet wave equation on a rectangle for
/// grid data, by sine-series (DST-I) expansion of the data.
class SpectralWave {
 public:
  SpectralWave(const Box& box, int nx, int ny);
  ~SpectralWave();
  SpectralWave(const SpectralWave&) = delete;
  SpectralWave& operator=(const SpectralWave&) = delete;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const Box& box() const { return box_; }
  GridSpec grid() const;

  /// Grid arrays are nx x ny (x index fastest in memory).
  void set_data(const Eigen::MatrixXd& y0, const Eigen::MatrixXd& y1);
  void evaluate(double t, Eigen::MatrixXd* y, Eigen::MatrixXd* yt) const;

  /// L2-normalized sine coefficients of a grid function.
  Eigen::MatrixXd coefficients(const Eigen::MatrixXd& f) const;
  Eigen::MatrixXd synthesize(const Eigen::MatrixXd& coeff) const;
  /// Dirichlet eigenvalues matching coefficients(): (k1 pi / L1)^2 + (k2 pi / L2)^2.
  const Eigen::MatrixXd& eigenvalues() const { return lambda_; }
  /// Largest sqrt(lambda) whose data coefficient exceeds rel * max coefficient.
  double max_active_frequency(double rel = 1e-10) const;

  /// Spectral norms of a grid function.
  double l2_norm(const Eigen::MatrixXd& f) const;
  double hminus1_norm(const Eigen::MatrixXd& f) const;
  double gradient_norm(const Eigen::MatrixXd& f) const;

 private:
  void dst(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const;

  Box box_;
  int nx_, ny_;
  Eigen::MatrixXd lambda_;
  Eigen::MatrixXd a0_, a1_;  // coefficients of position and velocity
  struct Plan;
  std::unique_ptr<Plan> plan_;
};

enum class Equation { Wave, Heat };
enum class Verdict { Gap, Decay, Indeterminate };
std::string to_string(Equation e);
std::string to_string(Verdict v);

struct GramianReport {
  Equation equation = Equation::Wave;
  std::string observation;  // "position" or "velocity"
  int N = 0;                // number of eigenmodes
  Eigen::MatrixXd matrix;
  Eigen::VectorXd eigenvalues;  // descending
  Verdict verdict = Verdict::Indeterminate;
  double threshold = 0.0;
  int n_small = 0;
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double lambda_min_above = 0.0;  // smallest eigenvalue above threshold
  double gap_ratio = 0.0;         // lambda_min_above / threshold
  double decay_slope = 0.0;
  double decay_r2 = 0.0;
  double symmetry_error = 0.0;
  // solver parameters
  int nx = 0, ny = 0, steps = 0;
  double dt = 0.0, T = 0.0;
};

struct GramianOptions {
  double threshold_rel = 1e-6;
  double gap_factor = 10.0;
  double decay_slope = -0.5;
  double decay_r2 = 0.9;
  /// Modes: tensor set (n per axis) for rectangles, first N for intervals.
  bool tensor_modes = true;
};

/// Wave: terminal data in L2 x H^-1, observation chi_omega phi.
/// Heat: terminal data in L2, observation chi_omega phi.
GramianReport observability_gramian(Equation eq, const GridSpec& grid, const PotentialField& a,
                                    const Region& omega, double T, int N,
                                    const GramianOptions& opts = {});

/// Wave with data in H^1_0 x L2 and observation chi_omega phi_t.
GramianReport velocity_observability_gramian(const GridSpec& grid, const PotentialField& a,
                                             const Region& omega, double T, int N,
                                             const GramianOptions& opts = {});

/// Applies the verdict rules to a symmetric matrix.
void classify_spectrum(GramianReport& rep, const GramianOptions& opts);

struct LadderVerdict {
  Verdict verdict = Verdict::Indeterminate;
  bool lambda_min_stable = false;
  bool n_small_stable = false;
  std::vector<int> Ns;
  std::vector<double> normalized_lambda_min;  // lambda_min_above / lambda_max per rung
  std::vector<int> n_small;
  std::string note;
};

/// Verdict across an N-ladder: GAP needs GAP on the last rung, lambda_min stable within
/// `factor` between consecutive rungs and n_small not growing.
LadderVerdict refine_verdict(const std::vector<GramianReport>& ladder, double factor = 2.0);

}  // namespace codim::pde
