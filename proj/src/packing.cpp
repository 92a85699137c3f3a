#include <cassert>

#include "dpo/errors.hpp"
#include "dpo/types.hpp"

namespace dpo {

DecisionLayout::DecisionLayout(const ProblemSpec& spec)
    : T(spec.T), n(spec.n), m(spec.m), n_s(spec.n_s), N(spec.N),
      n_obs(spec.N > 0 ? spec.policy.n_obs() : 0) {
  theta0_ = 0;
  theta_block_ = (N > 0) ? m * n_obs : 0;
  nominal0_ = theta0_ + (T - 1) * theta_block_;
  samples0_ = nominal0_ + T * n + (T - 1) * m;
  aux0_ = samples0_ + N * (T * n_s + (T - 1) * m);
  aux_per_knot_ = spec.aux_per_knot();
  has_duration_ = spec.free_time.enabled;
  total_ = aux0_ + (T - 1) * aux_per_knot_ + (has_duration_ ? 1 : 0);
  fixed_dt_ = spec.dt;
}

int DecisionLayout::nominal_x_offset(int t) const {
  // knot-by-knot: x_t then u_t, last knot has no control
  return nominal0_ + t * (n + m);
}

int DecisionLayout::nominal_u_offset(int t) const {
  assert(t < T - 1);
  return nominal0_ + t * (n + m) + n;
}

int DecisionLayout::sample_x_offset(int i, int t) const {
  const int per_sample = T * n_s + (T - 1) * m;
  return samples0_ + i * per_sample + t * (n_s + m);
}

int DecisionLayout::sample_u_offset(int i, int t) const {
  assert(t < T - 1);
  const int per_sample = T * n_s + (T - 1) * m;
  return samples0_ + i * per_sample + t * (n_s + m) + n_s;
}

int DecisionLayout::aux_offset(int t) const {
  assert(aux_per_knot_ > 0);
  return aux0_ + t * aux_per_knot_;
}

int DecisionLayout::duration_offset() const {
  return has_duration_ ? total_ - 1 : -1;
}

double DecisionLayout::stage_duration(const Vec& z, int) const {
  return has_duration_ ? z(duration_offset()) : fixed_dt_;
}

Vec DecisionLayout::pack(const Trajectory& nominal, const SampleEnsemble& ensemble,
                         const PolicyParams& params, const AuxVars& aux) const {
  if (nominal.states.rows() != T || nominal.states.cols() != n ||
      nominal.controls.rows() != T - 1 || nominal.controls.cols() != m)
    throw DimensionError("pack: nominal trajectory dimensions mismatch");
  if (static_cast<int>(ensemble.samples.size()) != N)
    throw DimensionError("pack: sample count mismatch");
  if (N > 0 && static_cast<int>(params.theta.size()) != T - 1)
    throw DimensionError("pack: policy block count mismatch");

  Vec z = Vec::Zero(total_);
  for (int t = 0; t < T - 1 && has_theta(); ++t) {
    const Mat& th = params.theta[t];
    if (th.rows() != m || th.cols() != n_obs)
      throw DimensionError("pack: policy block dimensions mismatch");
    // row-major within the block
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n_obs; ++c) z(theta_offset(t) + r * n_obs + c) = th(r, c);
  }
  for (int t = 0; t < T; ++t) {
    z.segment(nominal_x_offset(t), n) = nominal.states.row(t).transpose();
    if (t < T - 1)
      z.segment(nominal_u_offset(t), m) = nominal.controls.row(t).transpose();
  }
  for (int i = 0; i < N; ++i) {
    const Trajectory& s = ensemble.samples[static_cast<size_t>(i)];
    if (s.states.rows() != T || s.states.cols() != n_s)
      throw DimensionError("pack: sample trajectory dimensions mismatch");
    for (int t = 0; t < T; ++t) {
      z.segment(sample_x_offset(i, t), n_s) = s.states.row(t).transpose();
      if (t < T - 1)
        z.segment(sample_u_offset(i, t), m) = s.controls.row(t).transpose();
    }
  }
  if (has_aux()) {
    if (aux.friction_slacks.rows() != T - 1 || aux.friction_slacks.cols() != 3)
      throw DimensionError("pack: friction slack dimensions mismatch");
    for (int t = 0; t < T - 1; ++t)
      z.segment(aux_offset(t), 3) = aux.friction_slacks.row(t).transpose();
  }
  if (has_duration_) z(duration_offset()) = aux.h;
  return z;
}

void DecisionLayout::unpack(const Vec& z, Trajectory& nominal,
                            SampleEnsemble& ensemble, PolicyParams& params,
                            AuxVars& aux) const {
  if (z.size() != total_) throw DimensionError("unpack: vector length mismatch");

  params.theta.assign(T - 1, Mat::Zero(m, n_obs));
  for (int t = 0; t < T - 1 && has_theta(); ++t)
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n_obs; ++c)
        params.theta[t](r, c) = z(theta_offset(t) + r * n_obs + c);

  nominal.states.resize(T, n);
  nominal.controls.resize(T - 1, m);
  nominal.step_durations = Vec::Constant(T - 1, has_duration_ ? z(duration_offset())
                                                              : fixed_dt_);
  for (int t = 0; t < T; ++t) {
    nominal.states.row(t) = z.segment(nominal_x_offset(t), n).transpose();
    if (t < T - 1)
      nominal.controls.row(t) = z.segment(nominal_u_offset(t), m).transpose();
  }

  ensemble.samples.assign(N, Trajectory{});
  for (int i = 0; i < N; ++i) {
    Trajectory& s = ensemble.samples[static_cast<size_t>(i)];
    s.states.resize(T, n_s);
    s.controls.resize(T - 1, m);
    s.step_durations = nominal.step_durations;
    for (int t = 0; t < T; ++t) {
      s.states.row(t) = z.segment(sample_x_offset(i, t), n_s).transpose();
      if (t < T - 1)
        s.controls.row(t) = z.segment(sample_u_offset(i, t), m).transpose();
    }
  }

  if (has_aux()) {
    aux.friction_slacks.resize(T - 1, 3);
    for (int t = 0; t < T - 1; ++t)
      aux.friction_slacks.row(t) = z.segment(aux_offset(t), 3).transpose();
  } else {
    aux.friction_slacks.resize(0, 0);
  }
  aux.has_duration = has_duration_;
  aux.h = has_duration_ ? z(duration_offset()) : fixed_dt_;
}

}  // namespace dpo
