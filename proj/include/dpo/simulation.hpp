#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dpo/models.hpp"
#include "dpo/types.hpp"

namespace dpo {

// Natural cubic spline through (t_k, row k of values), per dimension.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(const Vec& times, const Mat& values);
  Vec eval(double t) const;

 private:
  Vec times_;
  Mat y_, b_, c_, d_;  // per-interval coefficients
};

// Reference interpolation per the verification protocol: cubic-spline states,
// zero-order-hold controls.
class NominalInterpolator {
 public:
  explicit NominalInterpolator(const Trajectory& nominal);
  Vec state(double t) const;
  Vec control(double t) const;
  int interval(double t) const;
  const Vec& knot_times() const { return knot_times_; }

 private:
  Vec knot_times_;
  Mat controls_;
  CubicSpline spline_;
};

std::pair<Vec, Vec> interpolate_nominal(const Trajectory& nominal, double t);

// A time-varying affine tracking policy: u = ubar_ref - K_t (obs(x) - x_ref).
// Both DPO gains and TVLQR gains fit this shape.
struct GainSchedule {
  Trajectory nominal;
  std::vector<Mat> gains;     // T-1 blocks, m x n_obs
  std::vector<int> observed;  // indices into the sim state and the nominal state
  Vec u_lower, u_upper;       // actuator limits applied in simulation
};

struct SimConfig {
  int substeps = 10;
  Mat noise_cov;  // additive state noise covariance, per control step
  std::uint64_t rng_seed = 0;
  ModelPtr sim_model;
  Vec x0;
  TrackingWeights weights;  // scoring weights, sim-state dimension
  Vec tail_ref;             // reference for sim states beyond the nominal dim
};

struct SimResult {
  Vec times;
  Mat states;    // fine-grid trace
  Mat controls;  // applied controls on the fine grid
  double state_cost = 0.0;
  double control_cost = 0.0;
  double total_cost = 0.0;
  bool diverged = false;
  double divergence_time = 0.0;
  Vec terminal_state;
};

SimResult rollout(const GainSchedule& policy, const SimConfig& cfg);

}  // namespace dpo
