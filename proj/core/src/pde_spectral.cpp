#include <cmath>
#include <mutex>

#include <fftw3.h>

#include "codim/errors.hpp"
#include "codim/pde.hpp"

namespace codim::pde {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct SpectralWave::Plan {
  fftw_plan plan = nullptr;
  ~Plan() {
    if (plan) {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

SpectralWave::SpectralWave(const Box& box, int nx, int ny)
    : box_(box), nx_(nx), ny_(box.dim == 2 ? ny : 1), plan_(std::make_unique<Plan>()) {
  if (nx_ < 2 || ny_ < 1) throw ValidationError("spectral grid too small");
  lambda_.resize(nx_, ny_);
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      const double a = (i + 1) * M_PI / box_.L1;
      const double b = box_.dim == 2 ? (j + 1) * M_PI / box_.L2 : 0.0;
      lambda_(i, j) = a * a + b * b;
    }
  }
  a0_ = Eigen::MatrixXd::Zero(nx_, ny_);
  a1_ = Eigen::MatrixXd::Zero(nx_, ny_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  double* buf_in = fftw_alloc_real(static_cast<std::size_t>(nx_) * ny_);
  double* buf_out = fftw_alloc_real(static_cast<std::size_t>(nx_) * ny_);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (box_.dim == 2) {
    // row-major [ny][nx] matches column-major nx x ny
    plan_->plan = fftw_plan_r2r_2d(ny_, nx_, buf_in, buf_out, FFTW_RODFT00, FFTW_RODFT00, flags);
  } else {
    plan_->plan = fftw_plan_r2r_1d(nx_, buf_in, buf_out, FFTW_RODFT00, flags);
  }
  fftw_free(buf_in);
  fftw_free(buf_out);
  if (!plan_->plan) throw NumericalError("fft-plan", "could not create sine transform plan");
}

SpectralWave::~SpectralWave() = default;

GridSpec SpectralWave::grid() const {
  GridSpec g;
  g.box = box_;
  g.nx = nx_;
  g.ny = ny_;
  g.dt = 0.9 * std::min(g.hx(), box_.dim == 2 ? g.hy() : g.hx()) / std::sqrt(double(box_.dim));
  return g;
}

void SpectralWave::dst(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
  if (in.rows() != nx_ || in.cols() != ny_) throw ValidationError("grid array has wrong shape");
  Eigen::MatrixXd src = in;  // fftw may clobber its input for multi-dimensional r2r
  out.resize(nx_, ny_);
  fftw_execute_r2r(plan_->plan, src.data(), out.data());
}

Eigen::MatrixXd SpectralWave::coefficients(const Eigen::MatrixXd& f) const {
  Eigen::MatrixXd y;
  dst(f, y);
  if (box_.dim == 2) {
    const double scale = std::sqrt(box_.L1 * box_.L2) / (2.0 * (nx_ + 1) * (ny_ + 1));
    return y * scale;
  }
  return y * (std::sqrt(box_.L1 / 2.0) / (nx_ + 1));
}

Eigen::MatrixXd SpectralWave::synthesize(const Eigen::MatrixXd& coeff) const {
  Eigen::MatrixXd f;
  if (box_.dim == 2) {
    dst(coeff * (2.0 / std::sqrt(box_.L1 * box_.L2)), f);
    return f * 0.25;
  }
  dst(coeff / std::sqrt(box_.L1 / 2.0), f);
  return f * 0.5;
}

void SpectralWave::set_data(const Eigen::MatrixXd& y0, const Eigen::MatrixXd& y1) {
  a0_ = coefficients(y0);
  a1_ = coefficients(y1);
}

void SpectralWave::evaluate(double t, Eigen::MatrixXd* y, Eigen::MatrixXd* yt) const {
  const Eigen::ArrayXXd w = lambda_.array().sqrt();
  const Eigen::ArrayXXd c = (w * t).cos();
  const Eigen::ArrayXXd s = (w * t).sin();
  if (y) *y = synthesize((a0_.array() * c + a1_.array() * s / w).matrix());
  if (yt) *yt = synthesize((-a0_.array() * w * s + a1_.array() * c).matrix());
}

double SpectralWave::max_active_frequency(double rel) const {
  const double m0 = a0_.cwiseAbs().maxCoeff();
  const double m1 = a1_.cwiseAbs().maxCoeff();
  double best = 0.0;
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      const bool active = std::abs(a0_(i, j)) > rel * m0 || std::abs(a1_(i, j)) > rel * m1;
      if (active) best = std::max(best, std::sqrt(lambda_(i, j)));
    }
  }
  return best;
}

double SpectralWave::l2_norm(const Eigen::MatrixXd& f) const { return coefficients(f).norm(); }

double SpectralWave::hminus1_norm(const Eigen::MatrixXd& f) const {
  const Eigen::MatrixXd c = coefficients(f);
  return std::sqrt((c.array().square() / lambda_.array()).sum());
}

double SpectralWave::gradient_norm(const Eigen::MatrixXd& f) const {
  const Eigen::MatrixXd c = coefficients(f);
  return std::sqrt((c.array().square() * lambda_.array()).sum());
}

}  // namespace codim::pde
