#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "codim/geometry.hpp"
#include "codim/pde.hpp"

namespace codim::beam {

using cplx = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;
using Vec2c = Eigen::Vector2cd;
using geometry::Vec2;

/// Spatial dimension n entering the amplitude scalings eps^{1 - n/4}, eps^{2 - n/4}.
constexpr int kSpaceDim = 2;
double leading_scale(double eps);     // eps^{1 - n/4}
double correction_scale(double eps);  // eps^{2 - n/4}

/// M' = 2 M^2 - 8 M p p^T M
Mat2c riccati_rhs(const Mat2c& M, const Vec2& p);
/// M'' obtained by differentiating riccati_rhs along the flow.
Mat2c riccati_second(const Mat2c& M, const Mat2c& dM, const Vec2& p);
/// Smallest eigenvalue of Im M (symmetric part).
double min_imag_eigenvalue(const Mat2c& M);

/// Phase matrix M(t) on [t_lo, t_hi] for one straight segment.
class BeamPhase {
 public:
  const geometry::RaySegment& segment() const { return segment_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Mat2c>& samples() const { return M_; }
  double t_lo() const { return times_.front(); }
  double t_hi() const { return times_.back(); }

  /// Cubic Hermite interpolation with slopes from the Riccati flow.
  Mat2c M(double t) const;
  Mat2c dM(double t) const { return riccati_rhs(M(t), segment_.p); }
  Mat2c d2M(double t) const;
  Vec2 center(double t) const { return segment_.position(t); }
  double min_imag_eigenvalue() const;
  double max_asymmetry() const;

 private:
  friend BeamPhase propagate_phase(const geometry::RaySegment&, const Mat2c&, double, double,
                                   double, double);
  geometry::RaySegment segment_;
  std::vector<double> times_;
  std::vector<Mat2c> M_;
};

/// RK4 for the Riccati flow from (t_anchor, M_anchor) over [t_lo, t_hi].
/// Throws NumericalError("loss-of-definiteness") if min eig Im M < 1e-12.
BeamPhase propagate_phase(const geometry::RaySegment& segment, const Mat2c& M_anchor,
                          double t_anchor, double t_lo, double t_hi, double dt);
/// Segment-only form: anchor at segment start, dt <= segment length / 64.
BeamPhase propagate_phase(const geometry::RaySegment& segment, const Mat2c& M0, double dt);

/// c(t) from c' = -c (4 p^T M p - tr M), A(s) = 2 i c(s) ahat(xhat(s), s).
class BeamAmplitude {
 public:
  cplx c(double t) const;
  cplx dc(double t) const;
  cplx d2c(double t) const;
  cplx A(double s) const;
  /// 4 p^T M p - tr M
  cplx transport_rate(double t) const;
  cplx c0() const { return c_anchor_; }
  double t_anchor() const { return t_anchor_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<cplx>& c_samples() const { return c_; }
  const std::vector<cplx>& A_samples() const { return A_; }
  const pde::PotentialField& potential() const { return ahat_; }

 private:
  friend BeamAmplitude propagate_amplitude(const BeamPhase&, cplx, double,
                                           const pde::PotentialField&);
  BeamPhase phase_;
  cplx c_anchor_;
  double t_anchor_ = 0.0;
  std::vector<double> times_;
  std::vector<cplx> logc_;  // log c at the phase samples (continuous branch)
  std::vector<cplx> c_;
  std::vector<cplx> A_;
  pde::PotentialField ahat_;
};

BeamAmplitude propagate_amplitude(const BeamPhase& phase, cplx c_anchor, double t_anchor,
                                  const pde::PotentialField& ahat = {});
BeamAmplitude propagate_amplitude(const BeamPhase& phase, cplx c0);

/// Space-time cutoff around {(s, xhat(s)) : s in [a, b]}: C^2 bump of the distance,
/// 1 within radius/2, 0 beyond radius.
struct Cutoff {
  double a = 0.0;
  double b = 0.0;
  double radius = 0.0;
  struct Value {
    double rho = 0.0, rho_t = 0.0, rho_tt = 0.0, lap = 0.0;
    Vec2 grad = Vec2::Zero();
  };
  Value evaluate(const geometry::RaySegment& seg, double t, const Vec2& x) const;
  bool active_time(double t) const { return t > a - radius && t < b + radius; }
};

/// Quintic smoothstep bump: 1 on [0, 1/2], 0 on [1, inf), C^2.
double bump(double s);
double bump_d1(double s);
double bump_d2(double s);

struct BeamSegment {
  geometry::RaySegment ray;
  BeamPhase phase;
  BeamAmplitude amplitude;
  Cutoff cutoff;
  bool carries_integral = false;  // the eps^{2 - n/4} A-integral term
};

enum class Orientation { Forward, OddSymmetrized, EvenSymmetrized };

struct FieldSample {
  cplx value = 0.0;
  cplx dt = 0.0;
  cplx dx = 0.0;
  cplx dy = 0.0;
  cplx wave = 0.0;  // (d_tt - Lap) applied to the field
};

struct CutoffSpec {
  double radius = 0.0;  // 0 selects 1/4 of the smallest dwell time between impacts
};

class GaussianBeam;

/// Per-time evaluator; holds interpolated phase/amplitude data for one instant.
class BeamSnapshot {
 public:
  FieldSample sample(const Vec2& x) const;
  /// Leading Gaussians of the segments whose interval contains the frame time, without the
  /// cutoff and the integral term.
  FieldSample sample_uncut(const Vec2& x) const;
  double time() const { return t_; }
  double epsilon() const { return eps_; }

 private:
  friend class GaussianBeam;
  struct QuadNode {
    double weight;
    Vec2 center;
    Mat2c M;
    cplx A;
  };
  struct Frame {
    const BeamSegment* seg;
    Vec2 center;
    Mat2c M, dM, d2M;
    cplx c, dc, d2c;
    double t;
    double sign;    // contribution weight
    bool reversed;  // evaluates Phi(x, -t)
    cplx A = 0.0, dA = 0.0;
    std::vector<QuadNode> quad;  // nodes of int_0^t A(s) e^{i psi(x, s) / eps} ds
  };
  FieldSample frame_sample(const Frame& f, const Vec2& x, bool cut = true) const;
  double eps_ = 0.0;
  double t_ = 0.0;
  std::vector<Frame> frames_;
};

class GaussianBeam {
 public:
  double epsilon() const { return eps_; }
  Orientation orientation() const { return orientation_; }
  const std::vector<BeamSegment>& segments() const { return segments_; }
  double cutoff_radius() const { return radius_; }

  /// include_integral = false drops the eps^{2 - n/4} integral term.
  BeamSnapshot snapshot(double t, bool include_integral = true) const;
  FieldSample sample(const Vec2& x, double t) const { return snapshot(t).sample(x); }
  cplx value(const Vec2& x, double t) const { return sample(x, t).value; }
  /// Ray positions whose neighbourhoods carry the field at time t.
  std::vector<Vec2> centers(double t) const;
  int quad_steps() const { return quad_steps_; }

 private:
  friend GaussianBeam build_beam(const geometry::GeneralizedRay&, double, const Mat2c&, cplx,
                                 const CutoffSpec&, int, const pde::PotentialField&, double);
  friend GaussianBeam time_symmetrize(const GaussianBeam&, bool);
  void add_frames(BeamSnapshot& snap, double t, double sign, bool reversed,
                  bool include_integral) const;

  double eps_ = 0.0;
  double radius_ = 0.0;
  int quad_steps_ = 0;
  Orientation orientation_ = Orientation::Forward;
  std::vector<BeamSegment> segments_;
};

/// Beam along a (possibly two-sided) ray with data (M0, c0) at t = 0, or at the ray start
/// when the ray does not contain t = 0. Reflected segments carry the leading term only.
/// Throws NumericalError("cutoff-overlap") when the radius exceeds 1/4 of a dwell time.
GaussianBeam build_beam(const geometry::GeneralizedRay& ray, double epsilon, const Mat2c& M0,
                        cplx c0, const CutoffSpec& cutoffs = {}, int quad_steps = 256,
                        const pde::PotentialField& ahat = {}, double phase_dt = 0.0);

struct ReflectedData {
  BeamPhase phase;
  cplx c_matched;
  Mat2c M_matched;
};

/// Flat-wall matching at impact: M+ = R M- R, c+ = -c-, R = I - 2 nu nu^T, then the
/// Riccati flow on [t_lo, t_hi]. Backward-in-time matching uses the same relations.
ReflectedData reflect_beam(const BeamPhase& incoming, const BeamAmplitude& incoming_amp,
                           const geometry::Impact& impact, const geometry::RaySegment& next,
                           double t_lo, double t_hi, double dt,
                           double tangency_tol = geometry::kDefaultTangencyTol);

/// Phi(t) - Phi(-t) (odd, default) or Phi(t) + Phi(-t) (even). Requires a beam built on a
/// ray that covers [-T, T].
GaussianBeam time_symmetrize(const GaussianBeam& beam, bool odd = true);

/// L2-pairing free evaluation of (d_tt - Lap) psi etc. for the on-ray checks.
struct PhaseDerivatives {
  cplx psi, psi_t, psi_tt, lap_psi;
  Vec2c grad_psi;
};
PhaseDerivatives phase_derivatives(const BeamPhase& phase, double t, const Vec2& x);

/// sup over |delta| <= rho of |psi_t^2 - grad psi . grad psi| at time t.
double eikonal_residual(const BeamPhase& phase, double t, double rho, int samples = 24);

/// |2 c' psi_t + c W psi| / |c| at x = xhat(t), with c' from a fourth-order difference of c.
double transport_residual(const BeamPhase& phase, const BeamAmplitude& amp, double t);

// Exact solution and scaling measurements

using FieldFn = std::function<FieldSample(const Vec2& x, double t)>;

struct SpectralHandle {
  pde::Box box;
  int n = 64;  // interior points per axis
};
struct FiniteDifferenceHandle {
  pde::GridSpec grid;
  pde::PotentialField a;
  pde::PotentialField memory;
};

struct CorrectionResult {
  std::vector<double> times;
  std::vector<double> energy;  // ||(v, v_t)||_{H^1_0 x L2} per sampled time
  double max_energy = 0.0;
  /// Exact solution phi = Phi~ + v on the grid at the sampled times (when requested).
  std::vector<Eigen::MatrixXd> exact;
};

/// v = phi - field, where phi is the Dirichlet solution with the field's initial data.
CorrectionResult correct_to_exact(const FieldFn& field, double T, const SpectralHandle& handle,
                                  int time_samples = 32, bool keep_exact = false);
CorrectionResult correct_to_exact(const FieldFn& field, double T,
                                  const FiniteDifferenceHandle& handle, int time_samples = 32,
                                  bool keep_exact = false);

struct ScalingConfig {
  geometry::Domain2D domain = geometry::Domain2D::rectangle(Vec2(0, 0), Vec2(1, 1));
  geometry::ControlRegion omega;
  geometry::RaySeed seed;
  double T = 1.0;
  Mat2c M0 = Mat2c::Identity() * cplx(0, 1);
  cplx c0 = 1.0;
  std::vector<double> epsilons;
  int points_per_width = 12;
  int max_grid = 1024;
  int time_samples = 64;
  double cutoff_radius = 0.0;
  int threads = 1;
};

struct ScalingRow {
  double epsilon = 0.0;
  int grid_n = 0;
  double pde_residual_sup = 0.0;
  double boundary_H1 = 0.0;
  double init_velocity_L2 = 0.0;
  double init_pos_H1 = 0.0;
  double init_pos_L2_plus_vel_Hminus1 = 0.0;
  double omega_H1_energy = 0.0;
  double off_ray_energy = 0.0;
  double correction_energy = 0.0;
  double rayleigh_quotient = 0.0;  // omega_H1^2 / ||(phi(0), phi_t(0))||^2_{H1_0 x L2}
};

struct BeamScalingReport {
  std::vector<double> epsilons;
  std::vector<ScalingRow> rows;
  /// Least-squares log-log slopes (largest epsilon dropped); empty when a metric vanishes.
  std::vector<std::pair<std::string, std::optional<double>>> slopes;
  double velocity_ratio = 0.0;  // min / max of init_velocity_L2
  double cutoff_radius = 0.0;
  std::optional<double> slope(const std::string& name) const;
};

std::vector<std::string> scaling_metric_names();
double metric_value(const ScalingRow& row, const std::string& name);

/// Interior grid size for eps: >= points_per_width points across sqrt(eps).
int grid_size_for(double eps, double length, int points_per_width);

/// Throws ValidationError if the ray meets omega, NumericalError("under-resolved") if the grid
/// for the smallest epsilon exceeds max_grid.
BeamScalingReport scaling_report(const ScalingConfig& cfg);

/// sup over sampled t of the L2 norm of W phi + int_0^t ahat phi_s ds for a single-segment beam.
double memory_residual_sup(const GaussianBeam& beam, const pde::PotentialField& ahat,
                           double t_end, int time_samples, const pde::GridSpec& grid);

}  // namespace codim::beam
