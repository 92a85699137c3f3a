#pragma once

#include <vector>

#include "dpo/models.hpp"
#include "dpo/types.hpp"

namespace dpo {

struct Moments {
  Vec mu;
  Mat P;
};

struct ControlMoments {
  Vec nu;
  Mat L;
};

// Joint state/disturbance sigma points, stored as columns. The first
// n_s + d columns are the "+" points, the rest mirror them about the mean.
struct SigmaSet {
  Mat x;  // n_s x M
  Mat w;  // d x M
  int count() const { return static_cast<int>(x.cols()); }
};

// Eigen-factored symmetric PSD square root, kept around so directional
// derivatives can reuse the factorization.
struct SqrtFactor {
  Mat S;  // principal square root of P
  Mat V;  // eigenvectors
  Vec s;  // sqrt of the (clamped) eigenvalues
};

// Principal matrix square root of a symmetric PSD matrix. Eigenvalues in
// [-tol, 0) with tol = 1e-8*||P|| are clamped to zero; below -tol throws
// IndefiniteCovariance.
Mat principal_sqrt(const Mat& P);
SqrtFactor principal_sqrt_factor(const Mat& P);

// dS solving the Sylvester equation S dS + dS S = dP. Throws
// SingularSqrtDerivative when S is numerically singular. The map is
// self-adjoint, which the constraint adjoints below rely on.
Mat sqrt_directional_derivative(const Mat& P, const Mat& dP);
Mat sylvester_sqrt_solve(const SqrtFactor& f, const Mat& rhs, bool strict = false);

// Sigma-point sets. Offsets are scaled by beta*sqrt(count/2) so that
// ensemble_moments reconstructs (mu, P) exactly; see ensemble_moments.
SigmaSet sigma_points(const Moments& m, const Mat& W, double beta);
Mat state_sigma_points(const Moments& m, double beta);  // n_s x 2*n_s

// Sample mean and covariance of a set of points (columns), with the
// covariance normalized by 1/(beta^2 * count) and symmetrized.
Moments ensemble_moments(const Mat& points, double beta);
ControlMoments control_moments(const Mat& controls, double beta);

// ---------------------------------------------------------------------------
// The sample-dynamics map g_t: given the N current sample states, generate
// joint sigma points from their moments, push them through the policy and the
// per-sigma dynamics model, recompute moments, and resample the next N sample
// states. Also produces the control moments used by the tracking cost.
//
// Evaluation caches every linearization so that directional derivatives
// (jvp) and adjoints (vjp) are cheap. One instance is shared across time
// steps; callers own the caches.

class SampleDynamics {
 public:
  SampleDynamics(const ProblemSpec& spec);

  int num_sigma() const { return M_; }

  struct Cache {
    double h = 0.0;
    int t = 0;
    bool with_derivatives = false;
    bool propagated = false;

    Mat states;  // inputs, n_s x N
    Mat theta;
    Vec xbar, ubar;

    Moments in;
    SqrtFactor sq;
    Mat delta;    // n_s x N
    SigmaSet sig;
    Mat obs_err;  // n_obs x M
    Mat u;        // m x M
    ControlMoments ctrl;
    Mat u_dev;    // m x M

    Mat xplus;  // n_s x M
    std::vector<Mat> A;
    std::vector<Mat> B;
    Mat fh;  // n_s x M
    Moments out;
    SqrtFactor sq_out;
    Mat delta_out;  // n_s x M
    Mat next;       // n_s x N
  };

  // Full evaluation including dynamics propagation and resampling.
  void eval(int t, const Mat& states, const Mat& theta, const Vec& xbar,
            const Vec& ubar, double h, Cache& c, bool with_derivatives,
            bool throw_on_nonfinite = false) const;

  // Moments/policy stages only (enough for the tracking cost).
  void eval_moments(int t, const Mat& states, const Mat& theta, const Vec& xbar,
                    const Vec& ubar, Cache& c, bool with_derivatives) const;

  // Directional derivative of the resampled next states.
  void jvp(const Cache& c, const Mat& dstates, const Mat& dtheta, const Vec& dxbar,
           const Vec& dubar, double dh, Mat& dnext) const;

  // Adjoint accumulation. next_bar may be empty (0x0) when only moment seeds
  // are present; mu/P seeds act on the input-sample moments, nu/L seeds on
  // the control moments.
  void vjp(const Cache& c, const Mat& next_bar, const Vec& mu_bar, const Mat& P_bar,
           const Vec& nu_bar, const Mat& L_bar, Mat& states_bar, Mat& theta_bar,
           Vec& xbar_bar, Vec& ubar_bar, double& h_bar) const;

 private:
  void moments_stages(int t, const Mat& states, const Mat& theta, const Vec& xbar,
                      const Vec& ubar, Cache& c, bool with_derivatives) const;

  int n_s_, d_, m_, N_, M_, n_;
  double beta_;
  std::vector<int> observed_;
  std::vector<const DynamicsModel*> sigma_model_;  // size M
  std::vector<ModelPtr> keepalive_;
  std::vector<Mat> S_w_;  // principal sqrt of W_t, per step
  bool discrete_;
};

// Spec-level convenience wrapper (warm starts, tests).
struct SampleDynamicsResult {
  Moments moments;
  ControlMoments control;
  Mat next_states;  // n_s x N
};

SampleDynamicsResult sample_dynamics(const ProblemSpec& spec, int t,
                                     const Mat& sample_states,
                                     const PolicyParams& params,
                                     const Trajectory& nominal);

}  // namespace dpo
