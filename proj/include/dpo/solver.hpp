#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dpo/nlp.hpp"

namespace dpo {

struct SolverOptions {
  int max_outer = 30;
  int max_inner = 200;
  double constraint_tol = 1e-6;
  double optimality_tol = 1e-5;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double max_penalty = 1e8;
  int lbfgs_memory = 20;
  double armijo_c1 = 1e-4;
  int max_halvings = 40;
  double inner_tol0 = 1e-2;       // initial inner stationarity target
  double inner_tol_shrink = 0.2;  // applied when feasibility improves
};

enum class SolveStatus { Optimal, MaxIter, LineSearchFailure, Diverged };

const char* to_string(SolveStatus s);

struct OuterRecord {
  int outer = 0;
  int inner_iters = 0;
  double objective = 0.0;
  double violation = 0.0;
  double penalty = 0.0;
  double stationarity = 0.0;
  double step_length = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIter;
  double objective = 0.0;
  double max_violation = 0.0;
  int outer_iters = 0;
  int inner_iters = 0;
  double wall_time_s = 0.0;
  std::string message;
  std::vector<OuterRecord> history;
};

using TraceCallback = std::function<void(const OuterRecord&)>;

// Augmented-Lagrangian method with a bound-constrained projected L-BFGS
// inner loop. Deterministic: identical (nlp, z0, opts) produce identical
// iterate sequences.
std::pair<Vec, SolveReport> solve(Nlp& nlp, const Vec& z0, const SolverOptions& opts,
                                  const TraceCallback& trace = {});

}  // namespace dpo
