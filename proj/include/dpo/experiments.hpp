#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpo/simulation.hpp"
#include "dpo/solver.hpp"
#include "dpo/transcription.hpp"
#include "dpo/types.hpp"

namespace dpo {

// Runtime options for one experiment run (CLI flags map onto this).
struct RunOptions {
  std::string config_path;  // JSON file: problem + "experiment" section
  std::string out_dir = "out";
  std::optional<int> num_seeds;          // overrides the config seed list
  std::optional<double> solver_tol;      // overrides constraint_tol
  bool write_outputs = true;
  bool verbose = true;
};

struct SimSummary {
  std::string scenario;
  std::string policy;
  std::uint64_t seed = 0;
  double state_cost = 0.0;
  double control_cost = 0.0;
  double total_cost = 0.0;
  bool diverged = false;
  Vec terminal_state;
};

struct ExperimentResult {
  std::string name;
  ProblemSpec spec;

  SolveReport to_report;
  SolveReport dpo_report;
  Trajectory to_nominal;
  Trajectory dpo_nominal;
  std::vector<Mat> tvlqr_gains;
  std::vector<Mat> dpo_gains;
  double to_duration = 0.0;
  double dpo_duration = 0.0;

  // experiment-specific metrics
  double gain_error = -1.0;  // max normalized gain error vs Riccati
  Vec separation_state;      // per-step mean-deviation terms of the state cost
  Vec separation_control;
  double to_min_clearance = 0.0;
  double dpo_min_clearance = 0.0;
  double to_terminal_violation = 0.0;
  double dpo_terminal_violation = 0.0;

  std::vector<SimSummary> sims;

  bool success = false;
  std::string failed_stage;
};

ExperimentResult run_experiment(const RunOptions& opts);

// Resolve a named experiment to its shipped config file.
std::string default_config_path(const std::string& experiment_name);

// Per-figure CSV bundle derived from a completed results directory. Throws
// on a missing/empty results directory without writing partial files.
void export_plots_data(const std::string& results_dir, const std::string& out_dir);

// ---- building blocks shared with tests ----

// Copy of the spec with no samples: plain direct-collocation TO.
ProblemSpec strip_samples(const ProblemSpec& spec);

// Linear-interpolation initial guess for a TO/DPO instance.
Vec interpolation_initial_guess(const DpoNlp& nlp);

// TO solution -> TVLQR gains -> forward-rolled samples, packed as the DPO
// warm start.
Vec warm_start(const ProblemSpec& spec, const DpoNlp& dpo_nlp,
               const Trajectory& to_nominal, const AuxVars& to_aux,
               const std::vector<Mat>& gains);

// Solve with the friction-relaxation homotopy schedule (single solve when the
// schedule is empty).
std::pair<Vec, SolveReport> solve_with_homotopy(DpoNlp& nlp, const Vec& z0,
                                                const SolverOptions& opts,
                                                const std::vector<double>& schedule,
                                                const TraceCallback& trace = {});

Trajectory extract_nominal(const DecisionLayout& layout, const Vec& z);
std::vector<Mat> extract_gains(const DecisionLayout& layout, const Vec& z);

double min_obstacle_clearance(const ObstacleField& obstacles, const Trajectory& traj);

}  // namespace dpo
