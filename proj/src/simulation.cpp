#include "dpo/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dpo/errors.hpp"
#include "dpo/integrators.hpp"
#include "dpo/unscented.hpp"

namespace dpo {

CubicSpline::CubicSpline(const Vec& times, const Mat& values) {
  const int K = static_cast<int>(times.size());
  const int dim = static_cast<int>(values.cols());
  times_ = times;
  y_ = values;
  b_.resize(K - 1, dim);
  c_.resize(K - 1, dim);
  d_.resize(K - 1, dim);
  if (K == 2) {
    for (int j = 0; j < dim; ++j) {
      b_(0, j) = (values(1, j) - values(0, j)) / (times(1) - times(0));
      c_(0, j) = 0.0;
      d_(0, j) = 0.0;
    }
    return;
  }

  Vec h(K - 1);
  for (int i = 0; i < K - 1; ++i) h(i) = times(i + 1) - times(i);

  // natural spline: tridiagonal solve for second derivatives M, M_0 = M_K = 0
  for (int j = 0; j < dim; ++j) {
    Vec diag(K - 2), lower(K - 2), upper(K - 2), rhs(K - 2);
    for (int i = 1; i <= K - 2; ++i) {
      diag(i - 1) = (h(i - 1) + h(i)) / 3.0;
      lower(i - 1) = h(i - 1) / 6.0;
      upper(i - 1) = h(i) / 6.0;
      rhs(i - 1) = (y_(i + 1, j) - y_(i, j)) / h(i) -
                   (y_(i, j) - y_(i - 1, j)) / h(i - 1);
    }
    // Thomas algorithm
    for (int i = 1; i < K - 2; ++i) {
      const double w = lower(i) / diag(i - 1);
      diag(i) -= w * upper(i - 1);
      rhs(i) -= w * rhs(i - 1);
    }
    Vec M = Vec::Zero(K);
    if (K > 2) {
      M(K - 2) = rhs(K - 3) / diag(K - 3);
      for (int i = K - 3; i >= 1; --i)
        M(i) = (rhs(i - 1) - upper(i - 1) * M(i + 1)) / diag(i - 1);
    }
    for (int i = 0; i < K - 1; ++i) {
      c_(i, j) = 0.5 * M(i);
      d_(i, j) = (M(i + 1) - M(i)) / (6.0 * h(i));
      b_(i, j) = (y_(i + 1, j) - y_(i, j)) / h(i) -
                 h(i) * (2.0 * M(i) + M(i + 1)) / 6.0;
    }
  }
}

Vec CubicSpline::eval(double t) const {
  const int K = static_cast<int>(times_.size());
  int i = static_cast<int>(std::upper_bound(times_.data(), times_.data() + K, t) -
                           times_.data()) -
          1;
  i = std::clamp(i, 0, K - 2);
  const double s = t - times_(i);
  return y_.row(i).transpose() + s * b_.row(i).transpose() +
         s * s * c_.row(i).transpose() + s * s * s * d_.row(i).transpose();
}

NominalInterpolator::NominalInterpolator(const Trajectory& nominal) {
  const int T = nominal.horizon();
  knot_times_.resize(T);
  knot_times_(0) = 0.0;
  for (int t = 1; t < T; ++t)
    knot_times_(t) = knot_times_(t - 1) + nominal.step_durations(t - 1);
  controls_ = nominal.controls;
  spline_ = CubicSpline(knot_times_, nominal.states);
}

int NominalInterpolator::interval(double t) const {
  const int T = static_cast<int>(knot_times_.size());
  int i = static_cast<int>(std::upper_bound(knot_times_.data(),
                                            knot_times_.data() + T, t) -
                           knot_times_.data()) -
          1;
  return std::clamp(i, 0, T - 2);
}

Vec NominalInterpolator::state(double t) const { return spline_.eval(t); }

Vec NominalInterpolator::control(double t) const {
  return controls_.row(interval(t)).transpose();
}

std::pair<Vec, Vec> interpolate_nominal(const Trajectory& nominal, double t) {
  NominalInterpolator interp(nominal);
  return {interp.state(t), interp.control(t)};
}

SimResult rollout(const GainSchedule& policy, const SimConfig& cfg) {
  const int T = policy.nominal.horizon();
  const DynamicsModel& model = *cfg.sim_model;
  const int n_sim = model.state_dim();
  const int m = model.control_dim();
  const bool discrete = model.is_discrete();
  const int substeps = discrete ? 1 : cfg.substeps;
  const int n = static_cast<int>(policy.nominal.states.cols());

  NominalInterpolator interp(policy.nominal);
  const Mat noise_sqrt =
      principal_sqrt(cfg.noise_cov) / std::sqrt(static_cast<double>(substeps));
  std::mt19937_64 rng(cfg.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int n_fine = (T - 1) * substeps;
  SimResult res;
  res.times.resize(n_fine + 1);
  res.states.resize(n_fine + 1, n_sim);
  res.controls.resize(n_fine + 1, m);

  Vec x = cfg.x0;
  auto ref_full = [&](int knot) {
    Vec r(n_sim);
    r.head(n) = policy.nominal.states.row(knot).transpose();
    r.tail(n_sim - n) = cfg.tail_ref;
    return r;
  };

  auto control_at = [&](double time, int knot_interval, const Vec& state) {
    const Vec xref = interp.state(time);
    const Vec uref = policy.nominal.controls.row(knot_interval).transpose();
    const Mat& K = policy.gains[static_cast<size_t>(knot_interval)];
    Vec err(static_cast<Eigen::Index>(policy.observed.size()));
    for (size_t k = 0; k < policy.observed.size(); ++k) {
      const int idx = policy.observed[k];
      err(static_cast<Eigen::Index>(k)) = state(idx) - xref(idx);
    }
    Vec u = uref - K * err;
    return u.cwiseMax(policy.u_lower).cwiseMin(policy.u_upper);
  };

  int fine = 0;
  res.times(0) = 0.0;
  res.states.row(0) = x.transpose();
  bool alive = true;
  for (int k = 0; k < T - 1 && alive; ++k) {
    const double hk = policy.nominal.step_durations(k);
    const double dt_f = hk / substeps;

    // score the knot before stepping (state term + applied control term)
    {
      const Vec e = x - ref_full(k);
      res.state_cost += e.dot(cfg.weights.Q[static_cast<size_t>(k)] * e);
    }
    for (int s = 0; s < substeps && alive; ++s) {
      const double time = interp.knot_times()(k) + s * dt_f;
      const Vec u = control_at(time, k, x);
      if (s == 0) {
        const Vec eu = u - policy.nominal.controls.row(k).transpose();
        res.control_cost += eu.dot(cfg.weights.R[static_cast<size_t>(k)] * eu);
      }
      res.controls.row(fine) = u.transpose();

      Vec noise(n_sim);
      for (int j = 0; j < n_sim; ++j) noise(j) = gauss(rng);
      if (discrete)
        x = model.step(x, u) + noise_sqrt * noise;
      else
        x = rk3_step(model, x, u, dt_f) + noise_sqrt * noise;

      ++fine;
      res.times(fine) = time + dt_f;
      if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > 1e6) {
        res.diverged = true;
        res.divergence_time = time + dt_f;
        alive = false;
        res.states.row(fine) = Vec::Zero(n_sim).transpose();
        break;
      }
      res.states.row(fine) = x.transpose();
    }
  }
  if (alive) {
    const Vec e = x - ref_full(T - 1);
    res.state_cost += e.dot(cfg.weights.Q[static_cast<size_t>(T - 1)] * e);
    res.controls.row(fine) = res.controls.row(fine - 1);
  } else {
    res.times.conservativeResize(fine + 1);
    res.states.conservativeResize(fine + 1, n_sim);
    res.controls.conservativeResize(fine + 1, m);
  }
  res.total_cost = res.state_cost + res.control_cost;
  res.terminal_state = x;
  return res;
}

}  // namespace dpo
