#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dpo/nlp.hpp"
#include "dpo/types.hpp"
#include "dpo/unscented.hpp"

namespace dpo {

// Expected tracking cost computed from unscented moments:
//   sum_t Tr(P_t Q_t) + (mu_t - ref_t)' Q_t (mu_t - ref_t)
// + sum_{t<T} Tr(L_t R_t) + (nu_t - ubar_t)' R_t (nu_t - ubar_t)
// ref_t pads the nominal knot with the fixed tail reference when the sample
// state is augmented.
double tracking_cost(const Trajectory& nominal, const std::vector<Moments>& state_moments,
                     const std::vector<ControlMoments>& control_moments,
                     const TrackingWeights& weights, const Vec& tail_ref);

// The assembled DPO nonlinear program. Constraint rows per step t:
//   (1) nominal implicit-midpoint residual (scaled by 1/h for continuous
//       models), (2) sample-dynamics equalities x_{t+1}^(i) = resampled sigma
//       point i, (3) policy equalities, (4) friction complementarity rows,
//   (5) obstacle rows on the nominal and on every sample; terminal obstacle
//   rows and the terminal equality close the list. Initial conditions and
//   control/state/duration limits are variable bounds.
class DpoNlp : public Nlp {
 public:
  explicit DpoNlp(const ProblemSpec& spec);
  ~DpoNlp() override;

  int num_vars() const override;
  int num_rows() const override;
  const std::vector<RowType>& row_types() const override;
  const Vec& lower_bounds() const override;
  const Vec& upper_bounds() const override;

  double eval_objective(const Vec& z) override;
  void eval_gradient(const Vec& z, Vec& grad) override;
  void eval_constraints(const Vec& z, Vec& c) override;
  const std::vector<std::pair<int, int>>& jacobian_pattern() const override;
  void eval_jacobian(const Vec& z, Vec& values) override;
  void grad_lagrangian(const Vec& z, double sigma_f, const Vec& y, Vec& out) override;
  std::string row_name(int row) const override;

  const DecisionLayout& layout() const;
  const ProblemSpec& spec() const;

  // Complementarity relaxation homotopy parameter (friction problems).
  void set_friction_relaxation(double rho);
  double friction_relaxation() const;

  struct RowBlock {
    std::string kind;
    int row0;
    int count;
    int t;       // time step, -1 if not applicable
    int sample;  // sample index, -1 if not applicable
  };
  const std::vector<RowBlock>& row_blocks() const;

  // Per-step state moments and control moments at a point (tracking-cost
  // inspection; criterion tooling).
  void moments_at(const Vec& z, std::vector<Moments>& state_moments,
                  std::vector<ControlMoments>& control_moments);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dpo
