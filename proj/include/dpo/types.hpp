#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpo/models.hpp"

namespace dpo {

// Quadratic objective on the nominal trajectory:
//   sum_t (x-x_ref)'Q(x-x_ref) + (u-u_ref)'R(u-u_ref) + (x_T-x_ref)'QT(x_T-x_ref)
// plus time_weight * (T-1) * h when the final time is free.
struct QuadraticObjective {
  Mat Q;   // n x n, per stage
  Mat R;   // m x m, per stage
  Mat QT;  // n x n, terminal
  Vec x_ref;
  Vec u_ref;
  double time_weight = 0.0;
};

// Sample tracking-cost weights, one matrix per knot/stage.
struct TrackingWeights {
  std::vector<Mat> Q;  // size T, Q[T-1] is the terminal weight (n_s x n_s)
  std::vector<Mat> R;  // size T-1 (m x m)
};

struct PolicyClass {
  enum class Kind { LinearStateFeedback, LinearOutputFeedback };
  Kind kind = Kind::LinearStateFeedback;
  // Indices of the observable components of the (possibly augmented) sample
  // state; identical indices must be valid in the nominal state.
  std::vector<int> observed;
  int n_obs() const { return static_cast<int>(observed.size()); }
};

struct FreeFinalTime {
  bool enabled = false;
  double h_min = 0.0;
  double h_max = 0.0;
  double h_init = 0.0;
};

struct ObstacleField {
  struct Circle {
    Eigen::Vector2d center;
    double radius;
  };
  std::vector<Circle> circles;
  int ix = 0;  // state indices carrying planar position
  int iy = 1;
};

struct TerminalConstraint {
  std::vector<int> indices;
  Vec values;
};

struct FrictionSpec {
  bool enabled = false;
  double mu = 0.0;
  double normal_force = 0.0;
  double relaxation = 1e-6;  // complementarity relaxation rho
  int slider_velocity_index = 2;
};

struct VarBounds {
  Vec lower;
  Vec upper;
};

// Full description of one DPO problem instance.
struct ProblemSpec {
  std::string name;

  int T = 0;    // knot points
  int n = 0;    // nominal state dimension
  int m = 0;    // control dimension
  int d = 0;    // disturbance dimension
  int n_s = 0;  // sample state dimension (>= n)
  int N = 0;    // sample trajectories (= 2 n_s)

  double beta = 1.0;

  ModelPtr nominal_model;
  std::vector<ModelPtr> sample_models;  // size 1 (broadcast) or N

  std::vector<Mat> W;  // T-1 disturbance covariances (d x d)

  TrackingWeights tracking;
  QuadraticObjective nominal_cost;
  PolicyClass policy;

  std::optional<TerminalConstraint> terminal;
  ObstacleField obstacles;
  FrictionSpec friction;

  std::optional<VarBounds> nominal_control_bounds;  // overrides model bounds
  std::optional<VarBounds> nominal_state_bounds;
  std::optional<VarBounds> sample_state_bounds;

  FreeFinalTime free_time;
  double dt = 1.0;  // fixed step duration when free_time is off

  Vec x1;         // nominal initial state (n)
  Mat sample_x1;  // N columns of n_s-dim sample initial states

  // Reference for the non-nominal tail of the sample state (n_s - n entries),
  // e.g. the slosh-pendulum rest configuration. Used by the tracking cost and
  // simulation scoring.
  Vec tail_ref;

  // Regulator mode: the whole nominal trajectory is pinned to the objective
  // reference (x_ref, u_ref).
  bool nominal_fixed = false;

  const ModelPtr& sample_model(int i) const {
    return sample_models.size() == 1 ? sample_models[0]
                                     : sample_models[static_cast<size_t>(i)];
  }
  bool has_aux_friction() const { return friction.enabled; }
  int aux_per_knot() const { return friction.enabled ? 3 : 0; }
};

struct Trajectory {
  Mat states;          // T x n
  Mat controls;        // (T-1) x m
  Vec step_durations;  // T-1, uniform when final time is fixed

  int horizon() const { return static_cast<int>(states.rows()); }
  double total_duration() const { return step_durations.sum(); }
  // knot time of index t
  double knot_time(int t) const { return step_durations.head(t).sum(); }
};

struct SampleEnsemble {
  std::vector<Trajectory> samples;         // N trajectories, state dim n_s
  std::vector<int> model_assignment;       // N indices into sample_models
};

struct PolicyParams {
  std::vector<Mat> theta;  // T-1 blocks, each m x n_obs
};

struct AuxVars {
  Mat friction_slacks;  // (T-1) x 3: (beta+, beta-, psi); 0 x 0 when unused
  bool has_duration = false;
  double h = 0.0;
};

// Flat decision-vector layout. Order: policy blocks, nominal trajectory
// knot-by-knot, sample trajectories (sample-major) knot-by-knot, auxiliary
// friction slacks per knot, shared duration variable.
class DecisionLayout {
 public:
  explicit DecisionLayout(const ProblemSpec& spec);

  int size() const { return total_; }

  int theta_offset(int t) const { return theta0_ + t * theta_block_; }
  int theta_block_size() const { return theta_block_; }
  int nominal_x_offset(int t) const;
  int nominal_u_offset(int t) const;
  int sample_x_offset(int i, int t) const;
  int sample_u_offset(int i, int t) const;
  int aux_offset(int t) const;  // friction slacks of knot t
  int duration_offset() const;  // -1 when final time fixed

  bool has_theta() const { return theta_block_ > 0; }
  bool has_aux() const { return aux_per_knot_ > 0; }
  bool has_duration() const { return has_duration_; }

  int T, n, m, n_s, N, n_obs;

  Vec pack(const Trajectory& nominal, const SampleEnsemble& ensemble,
           const PolicyParams& params, const AuxVars& aux) const;
  void unpack(const Vec& z, Trajectory& nominal, SampleEnsemble& ensemble,
              PolicyParams& params, AuxVars& aux) const;

  // step duration of stage t for a given decision vector
  double stage_duration(const Vec& z, int t) const;

 private:
  int theta0_ = 0, theta_block_ = 0;
  int nominal0_ = 0, samples0_ = 0, aux0_ = 0;
  int aux_per_knot_ = 0;
  bool has_duration_ = false;
  int total_ = 0;
  double fixed_dt_ = 1.0;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const ProblemSpec& spec);

}  // namespace dpo
