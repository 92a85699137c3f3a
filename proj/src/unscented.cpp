#include "dpo/unscented.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "dpo/errors.hpp"
#include "dpo/integrators.hpp"

namespace dpo {

namespace {

inline Mat sym(const Mat& A) { return 0.5 * (A + A.transpose()); }

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

SqrtFactor principal_sqrt_factor(const Mat& P) {
  SqrtFactor f;
  if (P.rows() == 0) {
    f.S.resize(0, 0);
    f.V.resize(0, 0);
    f.s.resize(0);
    return f;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(P));
  Vec lam = es.eigenvalues();
  const double nrm = lam.cwiseAbs().maxCoeff();
  const double tol = 1e-8 * nrm;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -tol)
      throw IndefiniteCovariance("covariance eigenvalue " + std::to_string(lam(i)) +
                                 " below tolerance " + std::to_string(-tol));
    if (lam(i) < 0.0) lam(i) = 0.0;
  }
  f.V = es.eigenvectors();
  f.s = lam.cwiseSqrt();
  f.S = sym(f.V * f.s.asDiagonal() * f.V.transpose());
  return f;
}

Mat principal_sqrt(const Mat& P) { return principal_sqrt_factor(P).S; }

Mat sylvester_sqrt_solve(const SqrtFactor& f, const Mat& rhs, bool strict) {
  const Eigen::Index n = f.s.size();
  const double smax = n > 0 ? f.s.maxCoeff() : 0.0;
  const double floor = 1e-12 * std::max(smax, 1.0);
  if (strict && (n == 0 || f.s.minCoeff() <= floor))
    throw SingularSqrtDerivative("matrix square root is singular");
  Mat B = f.V.transpose() * rhs * f.V;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double denom = f.s(i) + f.s(j);
      B(i, j) = denom > floor ? B(i, j) / denom : 0.0;
    }
  return f.V * B * f.V.transpose();
}

Mat sqrt_directional_derivative(const Mat& P, const Mat& dP) {
  return sylvester_sqrt_solve(principal_sqrt_factor(P), sym(dP), /*strict=*/true);
}

SigmaSet sigma_points(const Moments& m, const Mat& W, double beta) {
  const int n_s = static_cast<int>(m.mu.size());
  const int d = static_cast<int>(W.rows());
  const int half = n_s + d;
  const double scale = beta * std::sqrt(static_cast<double>(half));
  const Mat Sx = principal_sqrt(m.P);
  const Mat Sw = principal_sqrt(W);

  SigmaSet set;
  set.x.resize(n_s, 2 * half);
  set.w = Mat::Zero(d, 2 * half);
  for (int c = 0; c < half; ++c) {
    if (c < n_s) {
      set.x.col(c) = m.mu + scale * Sx.col(c);
      set.x.col(half + c) = m.mu - scale * Sx.col(c);
    } else {
      set.x.col(c) = m.mu;
      set.x.col(half + c) = m.mu;
      set.w.col(c) = scale * Sw.col(c - n_s);
      set.w.col(half + c) = -scale * Sw.col(c - n_s);
    }
  }
  return set;
}

Mat state_sigma_points(const Moments& m, double beta) {
  const int n_s = static_cast<int>(m.mu.size());
  const double scale = beta * std::sqrt(static_cast<double>(n_s));
  const Mat S = principal_sqrt(m.P);
  Mat out(n_s, 2 * n_s);
  for (int c = 0; c < n_s; ++c) {
    out.col(c) = m.mu + scale * S.col(c);
    out.col(n_s + c) = m.mu - scale * S.col(c);
  }
  return out;
}

Moments ensemble_moments(const Mat& points, double beta) {
  const int count = static_cast<int>(points.cols());
  Moments m;
  m.mu = points.rowwise().mean();
  const Mat dev = points.colwise() - m.mu;
  m.P = sym(dev * dev.transpose() / (beta * beta * count));
  return m;
}

ControlMoments control_moments(const Mat& controls, double beta) {
  Moments m = ensemble_moments(controls, beta);
  return ControlMoments{std::move(m.mu), std::move(m.P)};
}

// ---------------------------------------------------------------------------

SampleDynamics::SampleDynamics(const ProblemSpec& spec)
    : n_s_(spec.n_s), d_(spec.d), m_(spec.m), N_(spec.N), M_(2 * (spec.n_s + spec.d)),
      n_(spec.n), beta_(spec.beta), observed_(spec.policy.observed) {
  keepalive_ = spec.sample_models;
  sigma_model_.resize(static_cast<size_t>(M_));
  for (int j = 0; j < M_; ++j) {
    const int slot = static_cast<int>((static_cast<long>(j) * N_) / M_);
    sigma_model_[static_cast<size_t>(j)] = spec.sample_model(slot).get();
  }
  S_w_.reserve(spec.W.size());
  for (const Mat& W : spec.W) S_w_.push_back(principal_sqrt(W));
}

void SampleDynamics::moments_stages(int t, const Mat& states, const Mat& theta,
                                    const Vec& xbar, const Vec& ubar, Cache& c,
                                    bool with_derivatives) const {
  c.t = t;
  c.h = 0.0;
  c.with_derivatives = with_derivatives;
  c.propagated = false;
  c.states = states;
  c.theta = theta;
  c.xbar = xbar;
  c.ubar = ubar;

  c.in.mu = states.rowwise().mean();
  c.delta = states.colwise() - c.in.mu;
  c.in.P = sym(c.delta * c.delta.transpose() / (beta_ * beta_ * N_));
  c.sq = principal_sqrt_factor(c.in.P);

  const int half = n_s_ + d_;
  const double scale = beta_ * std::sqrt(static_cast<double>(half));
  const Mat& Sw = S_w_[static_cast<size_t>(t)];
  c.sig.x.resize(n_s_, M_);
  c.sig.w = Mat::Zero(d_, M_);
  for (int col = 0; col < half; ++col) {
    if (col < n_s_) {
      c.sig.x.col(col) = c.in.mu + scale * c.sq.S.col(col);
      c.sig.x.col(half + col) = c.in.mu - scale * c.sq.S.col(col);
    } else {
      c.sig.x.col(col) = c.in.mu;
      c.sig.x.col(half + col) = c.in.mu;
      c.sig.w.col(col) = scale * Sw.col(col - n_s_);
      c.sig.w.col(half + col) = -scale * Sw.col(col - n_s_);
    }
  }

  const int n_obs = static_cast<int>(observed_.size());
  c.obs_err.resize(n_obs, M_);
  for (int j = 0; j < M_; ++j)
    for (int k = 0; k < n_obs; ++k) {
      const int idx = observed_[static_cast<size_t>(k)];
      c.obs_err(k, j) = c.sig.x(idx, j) - xbar(idx);
    }
  c.u = ((-theta) * c.obs_err).colwise() + ubar;

  c.ctrl.nu = c.u.rowwise().mean();
  c.u_dev = c.u.colwise() - c.ctrl.nu;
  c.ctrl.L = sym(c.u_dev * c.u_dev.transpose() / (beta_ * beta_ * M_));
}

void SampleDynamics::eval_moments(int t, const Mat& states, const Mat& theta,
                                  const Vec& xbar, const Vec& ubar, Cache& c,
                                  bool with_derivatives) const {
  moments_stages(t, states, theta, xbar, ubar, c, with_derivatives);
}

void SampleDynamics::eval(int t, const Mat& states, const Mat& theta,
                          const Vec& xbar, const Vec& ubar, double h, Cache& c,
                          bool with_derivatives, bool throw_on_nonfinite) const {
  moments_stages(t, states, theta, xbar, ubar, c, with_derivatives);
  c.h = h;
  c.propagated = true;

  c.xplus.resize(n_s_, M_);
  if (with_derivatives) {
    c.A.resize(static_cast<size_t>(M_));
    c.B.resize(static_cast<size_t>(M_));
    c.fh.resize(n_s_, M_);
  }
  bool finite = true;
  for (int j = 0; j < M_; ++j) {
    StepResult st = discrete_step(*sigma_model_[static_cast<size_t>(j)],
                                  c.sig.x.col(j), c.u.col(j), h, with_derivatives);
    // additive disturbance on the leading d state components
    st.x_next.head(d_) += c.sig.w.col(j);
    if (!st.x_next.allFinite()) {
      if (throw_on_nonfinite)
        throw DynamicsEvaluationError("non-finite dynamics evaluation", t, j);
      finite = false;
      break;
    }
    c.xplus.col(j) = st.x_next;
    if (with_derivatives) {
      c.A[static_cast<size_t>(j)] = std::move(st.A);
      c.B[static_cast<size_t>(j)] = std::move(st.B);
      c.fh.col(j) = st.fh;
    }
  }
  if (!finite) {
    c.next = Mat::Constant(n_s_, N_, kNan);
    c.out.mu = Vec::Constant(n_s_, kNan);
    c.out.P = Mat::Constant(n_s_, n_s_, kNan);
    return;
  }

  c.out.mu = c.xplus.rowwise().mean();
  c.delta_out = c.xplus.colwise() - c.out.mu;
  c.out.P = sym(c.delta_out * c.delta_out.transpose() / (beta_ * beta_ * M_));
  c.sq_out = principal_sqrt_factor(c.out.P);

  const double sscale = beta_ * std::sqrt(static_cast<double>(n_s_));
  c.next.resize(n_s_, N_);
  for (int i = 0; i < n_s_; ++i) {
    c.next.col(i) = c.out.mu + sscale * c.sq_out.S.col(i);
    c.next.col(n_s_ + i) = c.out.mu - sscale * c.sq_out.S.col(i);
  }
}

void SampleDynamics::jvp(const Cache& c, const Mat& dstates, const Mat& dtheta,
                         const Vec& dxbar, const Vec& dubar, double dh,
                         Mat& dnext) const {
  const int half = n_s_ + d_;
  const double jscale = beta_ * std::sqrt(static_cast<double>(half));
  const double sscale = beta_ * std::sqrt(static_cast<double>(n_s_));
  const int n_obs = static_cast<int>(observed_.size());

  const Vec dmu = dstates.rowwise().mean();
  const Mat ddelta = dstates.colwise() - dmu;
  const Mat dP = sym((ddelta * c.delta.transpose() + c.delta * ddelta.transpose()) /
                     (beta_ * beta_ * N_));
  const Mat dS = sylvester_sqrt_solve(c.sq, dP);

  Mat dsig(n_s_, M_);
  for (int col = 0; col < half; ++col) {
    if (col < n_s_) {
      dsig.col(col) = dmu + jscale * dS.col(col);
      dsig.col(half + col) = dmu - jscale * dS.col(col);
    } else {
      dsig.col(col) = dmu;
      dsig.col(half + col) = dmu;
    }
  }

  Mat dobs(n_obs, M_);
  for (int j = 0; j < M_; ++j)
    for (int k = 0; k < n_obs; ++k) {
      const int idx = observed_[static_cast<size_t>(k)];
      dobs(k, j) = dsig(idx, j) - dxbar(idx);
    }
  Mat du = ((-dtheta) * c.obs_err - c.theta * dobs).colwise() + dubar;

  Mat dxp(n_s_, M_);
  for (int j = 0; j < M_; ++j)
    dxp.col(j) = c.A[static_cast<size_t>(j)] * dsig.col(j) +
                 c.B[static_cast<size_t>(j)] * du.col(j) + c.fh.col(j) * dh;

  const Vec dmup = dxp.rowwise().mean();
  const Mat ddp = dxp.colwise() - dmup;
  const Mat dPp = sym((ddp * c.delta_out.transpose() +
                       c.delta_out * ddp.transpose()) /
                      (beta_ * beta_ * M_));
  const Mat dSp = sylvester_sqrt_solve(c.sq_out, dPp);

  dnext.resize(n_s_, N_);
  for (int i = 0; i < n_s_; ++i) {
    dnext.col(i) = dmup + sscale * dSp.col(i);
    dnext.col(n_s_ + i) = dmup - sscale * dSp.col(i);
  }
}

void SampleDynamics::vjp(const Cache& c, const Mat& next_bar, const Vec& mu_bar,
                         const Mat& P_bar, const Vec& nu_bar, const Mat& L_bar,
                         Mat& states_bar, Mat& theta_bar, Vec& xbar_bar,
                         Vec& ubar_bar, double& h_bar) const {
  const int half = n_s_ + d_;
  const double jscale = beta_ * std::sqrt(static_cast<double>(half));
  const double sscale = beta_ * std::sqrt(static_cast<double>(n_s_));
  const int n_obs = static_cast<int>(observed_.size());

  Mat xj_bar = Mat::Zero(n_s_, M_);
  Mat uj_bar = Mat::Zero(m_, M_);

  if (next_bar.size() > 0) {
    const Vec mup_bar = next_bar.rowwise().sum();
    Mat Sp_bar(n_s_, n_s_);
    for (int i = 0; i < n_s_; ++i)
      Sp_bar.col(i) = sscale * (next_bar.col(i) - next_bar.col(n_s_ + i));
    const Mat Pp_bar = sylvester_sqrt_solve(c.sq_out, sym(Sp_bar));
    const double cP = 2.0 / (beta_ * beta_ * M_);
    for (int j = 0; j < M_; ++j) {
      const Vec xplus_bar = cP * (Pp_bar * c.delta_out.col(j)) + mup_bar / M_;
      xj_bar.col(j) += c.A[static_cast<size_t>(j)].transpose() * xplus_bar;
      uj_bar.col(j) += c.B[static_cast<size_t>(j)].transpose() * xplus_bar;
      h_bar += c.fh.col(j).dot(xplus_bar);
    }
  }

  const bool has_L = L_bar.size() > 0;
  const bool has_nu = nu_bar.size() > 0;
  if (has_L || has_nu) {
    const Mat Ls = has_L ? sym(L_bar) : Mat();
    const double cL = 2.0 / (beta_ * beta_ * M_);
    for (int j = 0; j < M_; ++j) {
      if (has_L) uj_bar.col(j) += cL * (Ls * c.u_dev.col(j));
      if (has_nu) uj_bar.col(j) += nu_bar / M_;
    }
  }

  // policy stage
  for (int j = 0; j < M_; ++j) {
    const Vec ub = uj_bar.col(j);
    ubar_bar += ub;
    theta_bar -= ub * c.obs_err.col(j).transpose();
    const Vec tmp = c.theta.transpose() * ub;
    for (int k = 0; k < n_obs; ++k) {
      const int idx = observed_[static_cast<size_t>(k)];
      xj_bar(idx, j) -= tmp(k);
      xbar_bar(idx) += tmp(k);
    }
  }

  // sigma-point stage back to input moments
  Vec mu_acc = xj_bar.rowwise().sum();
  if (mu_bar.size() > 0) mu_acc += mu_bar;
  Mat S_bar = Mat::Zero(n_s_, n_s_);
  for (int col = 0; col < n_s_; ++col)
    S_bar.col(col) = jscale * (xj_bar.col(col) - xj_bar.col(half + col));
  Mat P_acc = sylvester_sqrt_solve(c.sq, sym(S_bar));
  if (P_bar.size() > 0) P_acc += sym(P_bar);

  const double cN = 2.0 / (beta_ * beta_ * N_);
  for (int i = 0; i < N_; ++i)
    states_bar.col(i) += cN * (P_acc * c.delta.col(i)) + mu_acc / N_;
}

SampleDynamicsResult sample_dynamics(const ProblemSpec& spec, int t,
                                     const Mat& sample_states,
                                     const PolicyParams& params,
                                     const Trajectory& nominal) {
  SampleDynamics dyn(spec);
  SampleDynamics::Cache cache;
  const Vec xbar = nominal.states.row(t).transpose();
  const Vec ubar = nominal.controls.row(t).transpose();
  dyn.eval(t, sample_states, params.theta[static_cast<size_t>(t)], xbar, ubar,
           nominal.step_durations(t), cache, /*with_derivatives=*/false,
           /*throw_on_nonfinite=*/true);
  return SampleDynamicsResult{cache.in, cache.ctrl, cache.next};
}

}  // namespace dpo
