#include "dpo/solver.hpp"

#include <chrono>
#include <cmath>
#include <deque>

#include "dpo/errors.hpp"

namespace dpo {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::LineSearchFailure: return "line_search_failure";
    case SolveStatus::Diverged: return "diverged";
  }
  return "unknown";
}

namespace {

struct Multipliers {
  Vec lambda;  // one per row; equality multipliers, or mu >= 0 for inequalities
};

class AugLag {
 public:
  AugLag(Nlp& nlp, const SolverOptions& opts)
      : nlp_(nlp), opts_(opts), types_(nlp.row_types()), lb_(nlp.lower_bounds()),
        ub_(nlp.upper_bounds()) {}

  Vec project(const Vec& z) const { return z.cwiseMax(lb_).cwiseMin(ub_); }

  double violation(const Vec& c) const {
    double v = 0.0;
    for (int i = 0; i < c.size(); ++i) {
      const double ci = c(i);
      v = std::max(v, types_[static_cast<size_t>(i)] == RowType::Equality
                          ? std::abs(ci)
                          : std::max(0.0, ci));
    }
    return v;
  }

  // merit value of the augmented Lagrangian at (f, c)
  double merit(double f, const Vec& c, const Multipliers& mult, double rho) const {
    double val = f;
    for (int i = 0; i < c.size(); ++i) {
      const double lam = mult.lambda(i);
      if (types_[static_cast<size_t>(i)] == RowType::Equality) {
        val += lam * c(i) + 0.5 * rho * c(i) * c(i);
      } else {
        const double s = std::max(0.0, lam + rho * c(i));
        val += (s * s - lam * lam) / (2.0 * rho);
      }
    }
    return val;
  }

  // first-order multiplier term y(c) with y_i = lam + rho c (eq),
  // max(0, lam + rho c) (ineq); grad AL = grad f + J^T y
  Vec first_order_y(const Vec& c, const Multipliers& mult, double rho) const {
    Vec y(c.size());
    for (int i = 0; i < c.size(); ++i) {
      const double raw = mult.lambda(i) + rho * c(i);
      y(i) = types_[static_cast<size_t>(i)] == RowType::Equality
                 ? raw
                 : std::max(0.0, raw);
    }
    return y;
  }

  Nlp& nlp_;
  const SolverOptions& opts_;
  const std::vector<RowType>& types_;
  Vec lb_, ub_;
};

struct LbfgsMemory {
  std::deque<std::pair<Vec, Vec>> pairs;  // (s, y)
  int capacity;

  explicit LbfgsMemory(int cap) : capacity(cap) {}

  void clear() { pairs.clear(); }

  void push(const Vec& s, const Vec& y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-10 * s.norm() * y.norm())) return;
    pairs.emplace_back(s, y);
    if (static_cast<int>(pairs.size()) > capacity) pairs.pop_front();
  }

  // two-loop recursion: d = -H g
  Vec direction(const Vec& g) const {
    Vec q = g;
    std::vector<double> alpha(pairs.size());
    for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = pairs[static_cast<size_t>(i)];
      const double rho = 1.0 / s.dot(y);
      alpha[static_cast<size_t>(i)] = rho * s.dot(q);
      q -= alpha[static_cast<size_t>(i)] * y;
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const double rho = 1.0 / s.dot(y);
      const double beta = rho * y.dot(q);
      q += (alpha[i] - beta) * s;
    }
    return -q;
  }
};

}  // namespace

std::pair<Vec, SolveReport> solve(Nlp& nlp, const Vec& z0, const SolverOptions& opts,
                                  const TraceCallback& trace) {
  const auto t_start = std::chrono::steady_clock::now();
  AugLag al(nlp, opts);
  SolveReport report;

  const int nrows = nlp.num_rows();
  Vec z = al.project(z0);

  double f = nlp.eval_objective(z);
  Vec c(nrows);
  if (nrows > 0) nlp.eval_constraints(z, c);
  if (!std::isfinite(f))
    throw NonFiniteCallback("objective non-finite at initial point", -1);
  for (int i = 0; i < nrows; ++i)
    if (!std::isfinite(c(i)))
      throw NonFiniteCallback("constraint non-finite at initial point: " +
                                  nlp.row_name(i),
                              i);

  Multipliers mult{Vec::Zero(nrows)};
  double rho = opts.initial_penalty;
  double inner_tol = std::max(opts.optimality_tol, opts.inner_tol0);
  double viol_prev = al.violation(c);
  bool ls_failed_hard = false;

  const auto finish = [&](SolveStatus status, const std::string& msg) {
    report.status = status;
    report.message = msg;
    report.objective = f;
    report.max_violation = al.violation(c);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    return std::make_pair(z, report);
  };

  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    // ---- inner: projected L-BFGS on the augmented Lagrangian ----
    LbfgsMemory mem(opts.lbfgs_memory);
    double L = al.merit(f, c, mult, rho);
    Vec y = al.first_order_y(c, mult, rho);
    Vec g;
    nlp.grad_lagrangian(z, 1.0, y, g);
    if (!g.allFinite())
      return finish(SolveStatus::Diverged, "non-finite gradient");

    double last_step = 0.0;
    double stationarity =
        (al.project(z - g) - z).lpNorm<Eigen::Infinity>();
    int inner = 0;
    while (stationarity > inner_tol && inner < opts.max_inner) {
      // mask: fixed variables and active bounds with inward gradient
      Vec gm = g;
      for (int i = 0; i < z.size(); ++i) {
        const bool at_lo = z(i) <= al.lb_(i) + 1e-12 && g(i) > 0.0;
        const bool at_hi = z(i) >= al.ub_(i) - 1e-12 && g(i) < 0.0;
        if (al.lb_(i) == al.ub_(i) || at_lo || at_hi) gm(i) = 0.0;
      }
      Vec d = mem.direction(gm);
      for (int i = 0; i < z.size(); ++i)
        if (gm(i) == 0.0) d(i) = 0.0;
      if (d.dot(gm) > -1e-14 * d.norm() * gm.norm()) {
        mem.clear();
        d = -gm;
      }

      // projected backtracking Armijo
      double alpha = 1.0;
      bool accepted = false;
      Vec z_trial, c_trial(nrows);
      double f_trial = 0.0, L_trial = 0.0;
      for (int halving = 0; halving <= opts.max_halvings; ++halving) {
        z_trial = al.project(z + alpha * d);
        f_trial = nlp.eval_objective(z_trial);
        bool finite = std::isfinite(f_trial);
        if (finite && nrows > 0) {
          nlp.eval_constraints(z_trial, c_trial);
          finite = c_trial.allFinite();
        }
        if (finite) {
          L_trial = al.merit(f_trial, c_trial, mult, rho);
          const double pred = g.dot(z_trial - z);
          if (L_trial <= L + opts.armijo_c1 * pred ||
              (pred > -1e-16 && L_trial < L)) {
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // benign stall near stationarity, otherwise a hard failure
        if (stationarity <= 10.0 * inner_tol) break;
        ls_failed_hard = true;
        break;
      }

      Vec y_trial = al.first_order_y(c_trial, mult, rho);
      Vec g_trial;
      nlp.grad_lagrangian(z_trial, 1.0, y_trial, g_trial);
      if (!g_trial.allFinite())
        return finish(SolveStatus::Diverged, "non-finite gradient");

      mem.push(z_trial - z, g_trial - g);
      z = std::move(z_trial);
      f = f_trial;
      c = c_trial;
      L = L_trial;
      g = std::move(g_trial);
      y = std::move(y_trial);
      last_step = alpha;
      stationarity = (al.project(z - g) - z).lpNorm<Eigen::Infinity>();
      ++inner;
    }
    report.inner_iters += inner;
    report.outer_iters = outer;

    const double viol = al.violation(c);
    OuterRecord rec{outer, inner, f, viol, rho, stationarity, last_step};
    report.history.push_back(rec);
    if (trace) trace(rec);

    if (ls_failed_hard)
      return finish(SolveStatus::LineSearchFailure,
                    "line search failed after " +
                        std::to_string(opts.max_halvings) + " halvings");

    if (viol <= opts.constraint_tol && stationarity <= opts.optimality_tol)
      return finish(SolveStatus::Optimal, "");

    // multiplier update (first-order)
    for (int i = 0; i < nrows; ++i) {
      const double raw = mult.lambda(i) + rho * c(i);
      mult.lambda(i) = al.types_[static_cast<size_t>(i)] == RowType::Equality
                           ? raw
                           : std::max(0.0, raw);
    }
    if (viol > 0.25 * viol_prev) {
      rho = std::min(rho * opts.penalty_growth, opts.max_penalty);
    } else {
      inner_tol = std::max(opts.optimality_tol, inner_tol * opts.inner_tol_shrink);
    }
    viol_prev = std::min(viol_prev, viol);
  }

  return finish(SolveStatus::MaxIter, "outer iteration limit reached");
}

}  // namespace dpo
