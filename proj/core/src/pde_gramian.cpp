#include <algorithm>
#include <cmath>
#include <vector>

#include "codim/errors.hpp"
#include "codim/numerics.hpp"
#include "codim/pde.hpp"

namespace codim::pde {

namespace {

std::vector<Mode> gramian_modes(const GridSpec& grid, int N, const GramianOptions& opts) {
  if (grid.box.dim == 2 && opts.tensor_modes) {
    if (4 * N > std::min(grid.nx, grid.ny)) {
      throw ValidationError("Gramian needs N <= nx/4 modes per axis");
    }
    return tensor_eigenbasis(grid.box, N);
  }
  const auto modes = laplacian_eigenbasis(grid.box, N);
  int kmax = 0;
  for (const auto& m : modes) kmax = std::max({kmax, m.k1, m.k2});
  if (4 * kmax > (grid.box.dim == 2 ? std::min(grid.nx, grid.ny) : grid.nx)) {
    throw ValidationError("Gramian needs N <= nx/4");
  }
  return modes;
}

// Accumulates sum_t w_t (sqrt(W) Y)^T (sqrt(W) Y) over the omega rows.
class Accumulator {
 public:
  Accumulator(const Region& omega, const GridSpec& grid, int cols)
      : G_(Eigen::MatrixXd::Zero(cols, cols)) {
    const Eigen::VectorXd w = omega.cell_weights(grid);
    for (int i = 0; i < w.size(); ++i) {
      if (w(i) > 0) {
        rows_.push_back(i);
        sqrt_w_.push_back(std::sqrt(w(i)));
      }
    }
  }

  void add(const Eigen::MatrixXd& Y, double time_weight) {
    if (rows_.empty()) return;
    const Eigen::Index cols = Y.cols();
    obs_.resize(static_cast<Eigen::Index>(rows_.size()), cols);
    for (std::size_t r = 0; r < rows_.size(); ++r) obs_.row(r) = sqrt_w_[r] * Y.row(rows_[r]);
    G_.selfadjointView<Eigen::Lower>().rankUpdate(obs_.transpose(), time_weight);
  }

  Eigen::MatrixXd result() const {
    Eigen::MatrixXd G = G_.selfadjointView<Eigen::Lower>();
    return G;
  }

 private:
  std::vector<int> rows_;
  std::vector<double> sqrt_w_;
  Eigen::MatrixXd obs_;
  Eigen::MatrixXd G_;
};

GramianReport finish(GramianReport rep, const Eigen::MatrixXd& G, const GramianOptions& opts) {
  rep.matrix = 0.5 * (G + G.transpose());
  rep.symmetry_error = G.norm() > 0 ? (G - G.transpose()).norm() / G.norm() : 0.0;
  classify_spectrum(rep, opts);
  return rep;
}

GramianReport wave_gramian(const GridSpec& grid, const PotentialField& a, const Region& omega,
                           double T, int N, const GramianOptions& opts, bool velocity) {
  grid.validate();
  const auto modes = gramian_modes(grid, N, opts);
  const int M = static_cast<int>(modes.size());
  const int n = grid.points();
  Eigen::MatrixXd phi1 = Eigen::MatrixXd::Zero(n, 2 * M);
  Eigen::MatrixXd phi2 = Eigen::MatrixXd::Zero(n, 2 * M);
  for (int k = 0; k < M; ++k) {
    const Eigen::VectorXd e = modes[k].sample(grid);
    const double s = std::sqrt(modes[k].eigenvalue);
    if (velocity) {
      phi1.col(k) = e / s;      // H^1_0-normalized position
      phi2.col(M + k) = e;      // L2-normalized velocity
    } else {
      phi1.col(k) = e;          // L2-normalized position
      phi2.col(M + k) = s * e;  // H^-1-normalized velocity
    }
  }
  const int K = std::max(1, static_cast<int>(std::ceil(T / grid.dt - 1e-9)));
  const double dt = T / K;
  Accumulator acc(omega, grid, 2 * M);
  WaveOptions wo;
  // backward adjoint solve as a forward solve of the time-reversed problem
  march_wave(grid, a.time_reversed(T), wo, phi1, -phi2, T,
             [&](int step, double, const Eigen::MatrixXd& y, const Eigen::MatrixXd& yt) {
               const double w = (step == 0 || step == K) ? 0.5 * dt : dt;
               acc.add(velocity ? yt : y, w);
             });
  GramianReport rep;
  rep.equation = Equation::Wave;
  rep.observation = velocity ? "velocity" : "position";
  rep.N = M;
  rep.nx = grid.nx;
  rep.ny = grid.box.dim == 2 ? grid.ny : 1;
  rep.steps = K;
  rep.dt = dt;
  rep.T = T;
  return finish(std::move(rep), acc.result(), opts);
}

GramianReport heat_gramian(const GridSpec& grid, const Region& omega, double T, int N,
                           const GramianOptions& opts) {
  GridSpec g = grid;
  g.scheme = Scheme::ImplicitTrapezoid;
  if (!(g.dt > 0)) g.dt = T / 64.0;
  g.validate();
  const auto modes = gramian_modes(g, N, opts);
  const int M = static_cast<int>(modes.size());
  double lam_max = 0;
  for (const auto& m : modes) lam_max = std::max(lam_max, m.eigenvalue);
  const double dt_target = std::min({g.dt, 0.25 / lam_max, T / 64.0});
  const int K = static_cast<int>(std::ceil(T / dt_target - 1e-9));
  const double dt = T / K;
  Eigen::MatrixXd phi(g.points(), M);
  for (int k = 0; k < M; ++k) phi.col(k) = modes[k].sample(g);
  Accumulator acc(omega, g, M);
  march_heat(g, phi, T, K, [&](int step, double, const Eigen::MatrixXd& y) {
    acc.add(y, (step == 0 || step == K) ? 0.5 * dt : dt);
  });
  GramianReport rep;
  rep.equation = Equation::Heat;
  rep.observation = "position";
  rep.N = M;
  rep.nx = g.nx;
  rep.ny = g.box.dim == 2 ? g.ny : 1;
  rep.steps = K;
  rep.dt = dt;
  rep.T = T;
  return finish(std::move(rep), acc.result(), opts);
}

}  // namespace

void classify_spectrum(GramianReport& rep, const GramianOptions& opts) {
  const SymmetricEigen eig = symmetric_eigen_descending(rep.matrix);
  rep.eigenvalues = eig.values;
  const int dim = static_cast<int>(eig.values.size());
  rep.lambda_max = dim ? eig.values(0) : 0.0;
  rep.lambda_min = dim ? eig.values(dim - 1) : 0.0;
  rep.threshold = opts.threshold_rel * std::max(rep.lambda_max, 0.0);
  rep.n_small = 0;
  rep.lambda_min_above = 0.0;
  for (int k = 0; k < dim; ++k) {
    if (eig.values(k) > rep.threshold) {
      rep.lambda_min_above = eig.values(k);
    } else {
      ++rep.n_small;
    }
  }
  rep.gap_ratio = rep.threshold > 0 ? rep.lambda_min_above / rep.threshold : 0.0;

  std::vector<double> ks, logs;
  for (int k = 0; k < dim; ++k) {
    if (eig.values(k) > 0) {
      ks.push_back(k + 1);
      logs.push_back(std::log(eig.values(k) / rep.lambda_max));
    }
  }
  if (ks.size() >= 2) {
    const LinearFit fit = fit_line(ks, logs);
    rep.decay_slope = fit.slope;
    rep.decay_r2 = fit.r_squared;
  }
  const bool decay = ks.size() >= 2 && rep.decay_slope <= opts.decay_slope &&
                     rep.decay_r2 >= opts.decay_r2;
  const bool gap = rep.lambda_max > 0 && rep.gap_ratio >= opts.gap_factor;
  if (decay) {
    rep.verdict = Verdict::Decay;
  } else if (gap) {
    rep.verdict = Verdict::Gap;
  } else {
    rep.verdict = Verdict::Indeterminate;
  }
}

GramianReport observability_gramian(Equation eq, const GridSpec& grid, const PotentialField& a,
                                    const Region& omega, double T, int N,
                                    const GramianOptions& opts) {
  if (!(T > 0)) throw ValidationError("Gramian horizon must be positive");
  if (eq == Equation::Heat) {
    if (!a.is_zero()) throw ValidationError("heat Gramian takes no potential");
    return heat_gramian(grid, omega, T, N, opts);
  }
  return wave_gramian(grid, a, omega, T, N, opts, false);
}

GramianReport velocity_observability_gramian(const GridSpec& grid, const PotentialField& a,
                                             const Region& omega, double T, int N,
                                             const GramianOptions& opts) {
  if (!(T > 0)) throw ValidationError("Gramian horizon must be positive");
  return wave_gramian(grid, a, omega, T, N, opts, true);
}

LadderVerdict refine_verdict(const std::vector<GramianReport>& ladder, double factor) {
  LadderVerdict out;
  if (ladder.empty()) throw ValidationError("refine_verdict needs at least one rung");
  for (const auto& r : ladder) {
    out.Ns.push_back(r.N);
    out.normalized_lambda_min.push_back(r.lambda_max > 0 ? r.lambda_min_above / r.lambda_max : 0);
    out.n_small.push_back(r.n_small);
  }
  out.lambda_min_stable = true;
  out.n_small_stable = true;
  bool shrinking = false;
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    const double prev = out.normalized_lambda_min[i - 1];
    const double cur = out.normalized_lambda_min[i];
    if (cur * factor < prev) shrinking = true;
    if (cur * factor < prev || prev * factor < cur) out.lambda_min_stable = false;
    if (out.n_small[i] > out.n_small[i - 1]) out.n_small_stable = false;
  }
  const Verdict last = ladder.back().verdict;
  if (last == Verdict::Decay) {
    out.verdict = Verdict::Decay;
    out.note = "eigenvalues decay log-linearly on the finest rung";
  } else if (last == Verdict::Gap && out.lambda_min_stable && out.n_small_stable) {
    out.verdict = Verdict::Gap;
    out.note = "gap stable across the ladder";
  } else {
    out.verdict = Verdict::Indeterminate;
    if (shrinking) {
      out.note = "shrinking lambda_min";
    } else if (!out.n_small_stable) {
      out.note = "n_small grows with N";
    } else {
      out.note = "no gap or decay criterion fired";
    }
  }
  return out;
}

}  // namespace codim::pde
