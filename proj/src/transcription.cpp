#include "dpo/transcription.hpp"

#include <cassert>
#include <cmath>
#include <limits>

#include "dpo/errors.hpp"
#include "dpo/integrators.hpp"
#include "dpo/policy.hpp"

namespace dpo {

double tracking_cost(const Trajectory& nominal,
                     const std::vector<Moments>& state_moments,
                     const std::vector<ControlMoments>& control_moments,
                     const TrackingWeights& weights, const Vec& tail_ref) {
  const int T = nominal.horizon();
  if (static_cast<int>(state_moments.size()) != T ||
      static_cast<int>(control_moments.size()) != T - 1)
    throw DimensionError("tracking_cost: moments sequence length mismatch");
  const int n = static_cast<int>(nominal.states.cols());
  const int n_s = static_cast<int>(state_moments.front().mu.size());

  double cost = 0.0;
  for (int t = 0; t < T; ++t) {
    const Mat& Q = weights.Q[static_cast<size_t>(t)];
    Vec ref(n_s);
    ref.head(n) = nominal.states.row(t).transpose();
    ref.tail(n_s - n) = tail_ref;
    const Vec e = state_moments[static_cast<size_t>(t)].mu - ref;
    cost += state_moments[static_cast<size_t>(t)].P.cwiseProduct(Q).sum() +
            e.dot(Q * e);
  }
  for (int t = 0; t < T - 1; ++t) {
    const Mat& R = weights.R[static_cast<size_t>(t)];
    const Vec e = control_moments[static_cast<size_t>(t)].nu -
                  nominal.controls.row(t).transpose();
    cost += control_moments[static_cast<size_t>(t)].L.cwiseProduct(R).sum() +
            e.dot(R * e);
  }
  return cost;
}

// ---------------------------------------------------------------------------

struct DpoNlp::Impl {
  ProblemSpec spec;
  DecisionLayout layout;
  std::unique_ptr<SampleDynamics> sdyn;
  double rho_relax;

  Vec lb, ub;
  std::vector<RowType> types;
  std::vector<RowBlock> blocks;
  int n_rows = 0;

  std::vector<std::pair<int, int>> pattern;
  std::vector<size_t> block_value_start;

  // caches
  Vec zcache;
  bool cache_valid = false;
  bool cache_derivs = false;
  std::vector<SampleDynamics::Cache> scache;
  Moments terminal_moments;

  explicit Impl(const ProblemSpec& s)
      : spec(s), layout(s), rho_relax(s.friction.relaxation) {
    if (spec.N > 0) sdyn = std::make_unique<SampleDynamics>(spec);
    build_rows();
    build_bounds();
    build_pattern();
    scache.resize(static_cast<size_t>(spec.T - 1));
  }

  bool has_samples() const { return spec.N > 0; }
  int n_obstacles() const { return static_cast<int>(spec.obstacles.circles.size()); }

  int add_block(const std::string& kind, int t, int sample, int count,
                RowType type) {
    const int row0 = n_rows;
    blocks.push_back(RowBlock{kind, row0, count, t, sample});
    n_rows += count;
    types.insert(types.end(), static_cast<size_t>(count), type);
    return row0;
  }

  void build_rows() {
    const int T = spec.T, n = spec.n, m = spec.m, n_s = spec.n_s, N = spec.N;
    for (int t = 0; t < T - 1; ++t) {
      add_block("nominal_dynamics", t, -1, n, RowType::Equality);
      if (N > 0) {
        add_block("sample_dynamics", t, -1, N * n_s, RowType::Equality);
        add_block("policy", t, -1, N * m, RowType::Equality);
      }
      if (spec.friction.enabled)
        add_block("friction", t, -1, 6, RowType::InequalityLe);
      if (n_obstacles() > 0) {
        add_block("obstacle_nominal", t, -1, n_obstacles(), RowType::InequalityLe);
        for (int i = 0; i < N; ++i)
          add_block("obstacle_sample", t, i, n_obstacles(), RowType::InequalityLe);
      }
    }
    if (n_obstacles() > 0) {
      add_block("obstacle_nominal", T - 1, -1, n_obstacles(), RowType::InequalityLe);
      for (int i = 0; i < N; ++i)
        add_block("obstacle_sample", T - 1, i, n_obstacles(), RowType::InequalityLe);
    }
    if (spec.terminal)
      add_block("terminal", T - 1, -1,
                static_cast<int>(spec.terminal->indices.size()), RowType::Equality);
  }

  void build_bounds() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    lb = Vec::Constant(layout.size(), -inf);
    ub = Vec::Constant(layout.size(), inf);
    const int T = spec.T, n = spec.n, m = spec.m, n_s = spec.n_s, N = spec.N;

    Vec u_lo = spec.nominal_control_bounds ? spec.nominal_control_bounds->lower
                                           : spec.nominal_model->control_lower();
    Vec u_hi = spec.nominal_control_bounds ? spec.nominal_control_bounds->upper
                                           : spec.nominal_model->control_upper();
    for (int t = 0; t < T; ++t) {
      if (spec.nominal_state_bounds) {
        lb.segment(layout.nominal_x_offset(t), n) = spec.nominal_state_bounds->lower;
        ub.segment(layout.nominal_x_offset(t), n) = spec.nominal_state_bounds->upper;
      }
      if (t < T - 1) {
        lb.segment(layout.nominal_u_offset(t), m) = u_lo;
        ub.segment(layout.nominal_u_offset(t), m) = u_hi;
      }
    }
    for (int i = 0; i < N; ++i) {
      const Vec su_lo = spec.sample_model(i)->control_lower();
      const Vec su_hi = spec.sample_model(i)->control_upper();
      for (int t = 0; t < T; ++t) {
        if (spec.sample_state_bounds) {
          lb.segment(layout.sample_x_offset(i, t), n_s) =
              spec.sample_state_bounds->lower;
          ub.segment(layout.sample_x_offset(i, t), n_s) =
              spec.sample_state_bounds->upper;
        }
        if (t < T - 1) {
          lb.segment(layout.sample_u_offset(i, t), m) = su_lo;
          ub.segment(layout.sample_u_offset(i, t), m) = su_hi;
        }
      }
    }
    if (layout.has_aux()) {
      for (int t = 0; t < T - 1; ++t)
        lb.segment(layout.aux_offset(t), 3).setZero();
    }
    if (layout.has_duration()) {
      lb(layout.duration_offset()) = spec.free_time.h_min;
      ub(layout.duration_offset()) = spec.free_time.h_max;
    }

    // pins: initial conditions, and the whole nominal in regulator mode
    auto pin = [&](int off, const Vec& v) {
      lb.segment(off, v.size()) = v;
      ub.segment(off, v.size()) = v;
    };
    pin(layout.nominal_x_offset(0), spec.x1);
    for (int i = 0; i < N; ++i)
      pin(layout.sample_x_offset(i, 0), spec.sample_x1.col(i));
    if (spec.nominal_fixed) {
      for (int t = 0; t < T; ++t) {
        pin(layout.nominal_x_offset(t), spec.nominal_cost.x_ref);
        if (t < T - 1) pin(layout.nominal_u_offset(t), spec.nominal_cost.u_ref);
      }
      pin(layout.nominal_x_offset(0), spec.x1);
    }
  }

  // canonical per-step input columns of the sample-dynamics map
  std::vector<int> sample_step_cols(int t) const {
    std::vector<int> cols;
    const int n_obs = layout.n_obs;
    cols.reserve(static_cast<size_t>(spec.N * spec.n_s + spec.m * n_obs + spec.n +
                                     spec.m + 1));
    for (int i = 0; i < spec.N; ++i)
      for (int k = 0; k < spec.n_s; ++k) cols.push_back(layout.sample_x_offset(i, t) + k);
    for (int e = 0; e < spec.m * n_obs; ++e) cols.push_back(layout.theta_offset(t) + e);
    for (int k = 0; k < spec.n; ++k) cols.push_back(layout.nominal_x_offset(t) + k);
    for (int k = 0; k < spec.m; ++k) cols.push_back(layout.nominal_u_offset(t) + k);
    if (layout.has_duration()) cols.push_back(layout.duration_offset());
    return cols;
  }

  bool nominal_uses_h() const {
    return layout.has_duration() && !spec.nominal_model->is_discrete();
  }

  void build_pattern() {
    pattern.clear();
    block_value_start.clear();
    const int n = spec.n, m = spec.m, n_s = spec.n_s;
    const int n_obs = layout.n_obs;
    const int vi = spec.friction.slider_velocity_index;

    for (const RowBlock& b : blocks) {
      block_value_start.push_back(pattern.size());
      const int t = b.t;
      if (b.kind == "nominal_dynamics") {
        const bool aux = layout.has_aux();
        for (int r = 0; r < n; ++r) {
          for (int k = 0; k < n; ++k)
            pattern.emplace_back(b.row0 + r, layout.nominal_x_offset(t) + k);
          for (int k = 0; k < m; ++k)
            pattern.emplace_back(b.row0 + r, layout.nominal_u_offset(t) + k);
          for (int k = 0; k < n; ++k)
            pattern.emplace_back(b.row0 + r, layout.nominal_x_offset(t + 1) + k);
          if (aux) {
            pattern.emplace_back(b.row0 + r, layout.aux_offset(t) + 0);
            pattern.emplace_back(b.row0 + r, layout.aux_offset(t) + 1);
          }
          if (nominal_uses_h())
            pattern.emplace_back(b.row0 + r, layout.duration_offset());
        }
      } else if (b.kind == "sample_dynamics") {
        const std::vector<int> cols = sample_step_cols(t);
        for (int i = 0; i < spec.N; ++i)
          for (int r = 0; r < n_s; ++r) {
            const int row = b.row0 + i * n_s + r;
            for (int col : cols) pattern.emplace_back(row, col);
            pattern.emplace_back(row, layout.sample_x_offset(i, t + 1) + r);
          }
      } else if (b.kind == "policy") {
        for (int i = 0; i < spec.N; ++i)
          for (int r = 0; r < m; ++r) {
            const int row = b.row0 + i * m + r;
            pattern.emplace_back(row, layout.sample_u_offset(i, t) + r);
            for (int k = 0; k < n_obs; ++k)
              pattern.emplace_back(row, layout.theta_offset(t) + r * n_obs + k);
            for (int k = 0; k < n_obs; ++k)
              pattern.emplace_back(
                  row, layout.sample_x_offset(i, t) + spec.policy.observed[k]);
            for (int k = 0; k < n_obs; ++k)
              pattern.emplace_back(
                  row, layout.nominal_x_offset(t) + spec.policy.observed[k]);
            pattern.emplace_back(row, layout.nominal_u_offset(t) + r);
          }
      } else if (b.kind == "friction") {
        const int s = layout.aux_offset(t);
        const int v0 = layout.nominal_x_offset(t) + vi;
        const int v1 = layout.nominal_x_offset(t + 1) + vi;
        // r1: -(psi + vmid), r2: -(psi - vmid)
        pattern.emplace_back(b.row0 + 0, s + 2);
        pattern.emplace_back(b.row0 + 0, v0);
        pattern.emplace_back(b.row0 + 0, v1);
        pattern.emplace_back(b.row0 + 1, s + 2);
        pattern.emplace_back(b.row0 + 1, v0);
        pattern.emplace_back(b.row0 + 1, v1);
        // r3: b+ + b- - mu*Fn
        pattern.emplace_back(b.row0 + 2, s + 0);
        pattern.emplace_back(b.row0 + 2, s + 1);
        // r4: b+ (psi + vmid) - rho
        pattern.emplace_back(b.row0 + 3, s + 0);
        pattern.emplace_back(b.row0 + 3, s + 2);
        pattern.emplace_back(b.row0 + 3, v0);
        pattern.emplace_back(b.row0 + 3, v1);
        // r5: b- (psi - vmid) - rho
        pattern.emplace_back(b.row0 + 4, s + 1);
        pattern.emplace_back(b.row0 + 4, s + 2);
        pattern.emplace_back(b.row0 + 4, v0);
        pattern.emplace_back(b.row0 + 4, v1);
        // r6: psi (mu*Fn - b+ - b-) - rho
        pattern.emplace_back(b.row0 + 5, s + 2);
        pattern.emplace_back(b.row0 + 5, s + 0);
        pattern.emplace_back(b.row0 + 5, s + 1);
      } else if (b.kind == "obstacle_nominal" || b.kind == "obstacle_sample") {
        const int base = b.kind == "obstacle_nominal"
                             ? layout.nominal_x_offset(t)
                             : layout.sample_x_offset(b.sample, t);
        for (int k = 0; k < n_obstacles(); ++k) {
          pattern.emplace_back(b.row0 + k, base + spec.obstacles.ix);
          pattern.emplace_back(b.row0 + k, base + spec.obstacles.iy);
        }
      } else if (b.kind == "terminal") {
        for (size_t k = 0; k < spec.terminal->indices.size(); ++k)
          pattern.emplace_back(b.row0 + static_cast<int>(k),
                               layout.nominal_x_offset(spec.T - 1) +
                                   spec.terminal->indices[k]);
      }
    }
  }

  // --- point evaluation cache ---------------------------------------------

  Mat gather_states(const Vec& z, int t) const {
    Mat S(spec.n_s, spec.N);
    for (int i = 0; i < spec.N; ++i)
      S.col(i) = z.segment(layout.sample_x_offset(i, t), spec.n_s);
    return S;
  }

  Mat gather_theta(const Vec& z, int t) const {
    Mat th(spec.m, layout.n_obs);
    for (int r = 0; r < spec.m; ++r)
      for (int c = 0; c < layout.n_obs; ++c)
        th(r, c) = z(layout.theta_offset(t) + r * layout.n_obs + c);
    return th;
  }

  void ensure_point(const Vec& z, bool need_derivs) {
    if (cache_valid && zcache.size() == z.size() && zcache == z &&
        (cache_derivs || !need_derivs))
      return;
    if (has_samples()) {
      for (int t = 0; t < spec.T - 1; ++t) {
        const Mat states = gather_states(z, t);
        const Mat theta = gather_theta(z, t);
        const Vec xbar = z.segment(layout.nominal_x_offset(t), spec.n);
        const Vec ubar = z.segment(layout.nominal_u_offset(t), spec.m);
        sdyn->eval(t, states, theta, xbar, ubar, layout.stage_duration(z, t),
                   scache[static_cast<size_t>(t)], need_derivs);
      }
      terminal_moments = ensemble_moments(gather_states(z, spec.T - 1), spec.beta);
    }
    zcache = z;
    cache_valid = true;
    cache_derivs = need_derivs;
  }

  // nominal residual, scaled by 1/h for continuous models
  Vec nominal_residual(const Vec& z, int t) const {
    const Vec x = z.segment(layout.nominal_x_offset(t), spec.n);
    const Vec u = z.segment(layout.nominal_u_offset(t), spec.m);
    const Vec xn = z.segment(layout.nominal_x_offset(t + 1), spec.n);
    const DynamicsModel& mdl = *spec.nominal_model;
    if (mdl.is_discrete()) return xn - mdl.step(x, u);
    const double h = layout.stage_duration(z, t);
    Vec aux;
    if (layout.has_aux()) {
      const Vec s = z.segment(layout.aux_offset(t), 2);
      aux = s;
    }
    const Vec mid = 0.5 * (x + xn);
    return (xn - x - h * mdl.ode(mid, u, aux)) / h;
  }

  Vec ref_at(const Vec& z, int t) const {
    Vec ref(spec.n_s);
    ref.head(spec.n) = z.segment(layout.nominal_x_offset(t), spec.n);
    ref.tail(spec.n_s - spec.n) = spec.tail_ref;
    return ref;
  }

  double objective(const Vec& z) {
    ensure_point(z, false);
    const int T = spec.T;
    double J = 0.0;
    // nominal quadratic objective
    const QuadraticObjective& qo = spec.nominal_cost;
    for (int t = 0; t < T; ++t) {
      const Vec e = z.segment(layout.nominal_x_offset(t), spec.n) - qo.x_ref;
      J += e.dot(((t == T - 1) ? qo.QT : qo.Q) * e);
      if (t < T - 1) {
        const Vec eu = z.segment(layout.nominal_u_offset(t), spec.m) - qo.u_ref;
        J += eu.dot(qo.R * eu);
      }
    }
    J += qo.time_weight * (T - 1) * layout.stage_duration(z, 0);

    if (has_samples()) {
      for (int t = 0; t < T - 1; ++t) {
        const auto& c = scache[static_cast<size_t>(t)];
        const Mat& Q = spec.tracking.Q[static_cast<size_t>(t)];
        const Vec e = c.in.mu - ref_at(z, t);
        J += c.in.P.cwiseProduct(Q).sum() + e.dot(Q * e);
        const Mat& R = spec.tracking.R[static_cast<size_t>(t)];
        const Vec eu = c.ctrl.nu - z.segment(layout.nominal_u_offset(t), spec.m);
        J += c.ctrl.L.cwiseProduct(R).sum() + eu.dot(R * eu);
      }
      const Mat& QT = spec.tracking.Q[static_cast<size_t>(T - 1)];
      const Vec e = terminal_moments.mu - ref_at(z, T - 1);
      J += terminal_moments.P.cwiseProduct(QT).sum() + e.dot(QT * e);
    }
    return J;
  }

  void constraints(const Vec& z, Vec& out) {
    ensure_point(z, false);
    out.resize(n_rows);
    const int n = spec.n, m = spec.m, n_s = spec.n_s;
    const int vi = spec.friction.slider_velocity_index;
    const double muFn = spec.friction.mu * spec.friction.normal_force;

    for (const RowBlock& b : blocks) {
      const int t = b.t;
      if (b.kind == "nominal_dynamics") {
        out.segment(b.row0, n) = nominal_residual(z, t);
      } else if (b.kind == "sample_dynamics") {
        const auto& c = scache[static_cast<size_t>(t)];
        for (int i = 0; i < spec.N; ++i)
          out.segment(b.row0 + i * n_s, n_s) =
              z.segment(layout.sample_x_offset(i, t + 1), n_s) - c.next.col(i);
      } else if (b.kind == "policy") {
        const Mat theta = gather_theta(z, t);
        const Vec xbar = z.segment(layout.nominal_x_offset(t), n);
        const Vec ubar = z.segment(layout.nominal_u_offset(t), m);
        for (int i = 0; i < spec.N; ++i) {
          const Vec xi = z.segment(layout.sample_x_offset(i, t), n_s);
          const Vec ui = z.segment(layout.sample_u_offset(i, t), m);
          Vec err(layout.n_obs);
          for (int k = 0; k < layout.n_obs; ++k) {
            const int idx = spec.policy.observed[static_cast<size_t>(k)];
            err(k) = xi(idx) - xbar(idx);
          }
          out.segment(b.row0 + i * m, m) = ui - ubar + theta * err;
        }
      } else if (b.kind == "friction") {
        const int s = layout.aux_offset(t);
        const double bp = z(s), bm = z(s + 1), psi = z(s + 2);
        const double vmid = 0.5 * (z(layout.nominal_x_offset(t) + vi) +
                                   z(layout.nominal_x_offset(t + 1) + vi));
        out(b.row0 + 0) = -(psi + vmid);
        out(b.row0 + 1) = -(psi - vmid);
        out(b.row0 + 2) = bp + bm - muFn;
        out(b.row0 + 3) = bp * (psi + vmid) - rho_relax;
        out(b.row0 + 4) = bm * (psi - vmid) - rho_relax;
        out(b.row0 + 5) = psi * (muFn - bp - bm) - rho_relax;
      } else if (b.kind == "obstacle_nominal" || b.kind == "obstacle_sample") {
        const int base = b.kind == "obstacle_nominal"
                             ? layout.nominal_x_offset(t)
                             : layout.sample_x_offset(b.sample, t);
        const double px = z(base + spec.obstacles.ix);
        const double py = z(base + spec.obstacles.iy);
        for (int k = 0; k < n_obstacles(); ++k) {
          const auto& circ = spec.obstacles.circles[static_cast<size_t>(k)];
          const double dx = px - circ.center(0), dy = py - circ.center(1);
          out(b.row0 + k) = circ.radius * circ.radius - dx * dx - dy * dy;
        }
      } else if (b.kind == "terminal") {
        for (size_t k = 0; k < spec.terminal->indices.size(); ++k)
          out(b.row0 + static_cast<int>(k)) =
              z(layout.nominal_x_offset(spec.T - 1) + spec.terminal->indices[k]) -
              spec.terminal->values(static_cast<Eigen::Index>(k));
      }
    }
  }

  // jacobian values aligned with the pattern
  void jacobian(const Vec& z, Vec& values) {
    ensure_point(z, true);
    values.resize(static_cast<Eigen::Index>(pattern.size()));
    const int n = spec.n, m = spec.m, n_s = spec.n_s;
    const int n_obs = layout.n_obs;
    const int vi = spec.friction.slider_velocity_index;
    const double muFn = spec.friction.mu * spec.friction.normal_force;

    Mat dstates, dtheta, dnext, Jstep;
    Vec dxbar, dubar;

    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      const RowBlock& b = blocks[bi];
      size_t cur = block_value_start[bi];
      const int t = b.t;
      if (b.kind == "nominal_dynamics") {
        Vec aux;
        if (layout.has_aux()) aux = z.segment(layout.aux_offset(t), 2);
        const Vec x = z.segment(layout.nominal_x_offset(t), n);
        const Vec u = z.segment(layout.nominal_u_offset(t), m);
        const Vec xn = z.segment(layout.nominal_x_offset(t + 1), n);
        const double h = layout.stage_duration(z, t);
        MidpointResidual mr =
            midpoint_residual(*spec.nominal_model, x, u, aux, xn, h);
        const bool discrete = spec.nominal_model->is_discrete();
        const double sc = discrete ? 1.0 : 1.0 / h;
        for (int r = 0; r < n; ++r) {
          for (int k = 0; k < n; ++k) values(cur++) = sc * mr.dr_dx(r, k);
          for (int k = 0; k < m; ++k) values(cur++) = sc * mr.dr_du(r, k);
          for (int k = 0; k < n; ++k) values(cur++) = sc * mr.dr_dxnext(r, k);
          if (layout.has_aux()) {
            values(cur++) = sc * mr.dr_daux(r, 0);
            values(cur++) = sc * mr.dr_daux(r, 1);
          }
          if (nominal_uses_h())
            values(cur++) = sc * mr.dr_dh(r) - mr.r(r) / (h * h);
        }
      } else if (b.kind == "sample_dynamics") {
        const auto& c = scache[static_cast<size_t>(t)];
        const std::vector<int> cols = sample_step_cols(t);
        const int q = static_cast<int>(cols.size());
        Jstep.resize(spec.N * n_s, q);
        dstates = Mat::Zero(n_s, spec.N);
        dtheta = Mat::Zero(m, n_obs);
        dxbar = Vec::Zero(n);
        dubar = Vec::Zero(m);
        int qi = 0;
        auto sweep = [&](double dh) {
          sdyn->jvp(c, dstates, dtheta, dxbar, dubar, dh, dnext);
          Jstep.col(qi++) =
              -Eigen::Map<const Vec>(dnext.data(), dnext.size());
        };
        for (int i = 0; i < spec.N; ++i)
          for (int k = 0; k < n_s; ++k) {
            dstates(k, i) = 1.0;
            sweep(0.0);
            dstates(k, i) = 0.0;
          }
        for (int r = 0; r < m; ++r)
          for (int kk = 0; kk < n_obs; ++kk) {
            dtheta(r, kk) = 1.0;
            sweep(0.0);
            dtheta(r, kk) = 0.0;
          }
        for (int k = 0; k < n; ++k) {
          dxbar(k) = 1.0;
          sweep(0.0);
          dxbar(k) = 0.0;
        }
        for (int k = 0; k < m; ++k) {
          dubar(k) = 1.0;
          sweep(0.0);
          dubar(k) = 0.0;
        }
        if (layout.has_duration()) sweep(1.0);
        assert(qi == q);
        for (int row = 0; row < spec.N * n_s; ++row) {
          for (int col = 0; col < q; ++col) values(cur++) = Jstep(row, col);
          values(cur++) = 1.0;  // own next-state component
        }
      } else if (b.kind == "policy") {
        const Mat theta = gather_theta(z, t);
        const Vec xbar = z.segment(layout.nominal_x_offset(t), n);
        for (int i = 0; i < spec.N; ++i) {
          const Vec xi = z.segment(layout.sample_x_offset(i, t), n_s);
          for (int r = 0; r < m; ++r) {
            values(cur++) = 1.0;  // u^(i)(r)
            for (int k = 0; k < n_obs; ++k) {
              const int idx = spec.policy.observed[static_cast<size_t>(k)];
              values(cur++) = xi(idx) - xbar(idx);  // d/d theta(r,k)
            }
            for (int k = 0; k < n_obs; ++k) values(cur++) = theta(r, k);
            for (int k = 0; k < n_obs; ++k) values(cur++) = -theta(r, k);
            values(cur++) = -1.0;  // ubar(r)
          }
        }
      } else if (b.kind == "friction") {
        const int s = layout.aux_offset(t);
        const double bp = z(s), bm = z(s + 1), psi = z(s + 2);
        const double vmid = 0.5 * (z(layout.nominal_x_offset(t) + vi) +
                                   z(layout.nominal_x_offset(t + 1) + vi));
        // r1
        values(cur++) = -1.0;
        values(cur++) = -0.5;
        values(cur++) = -0.5;
        // r2
        values(cur++) = -1.0;
        values(cur++) = 0.5;
        values(cur++) = 0.5;
        // r3
        values(cur++) = 1.0;
        values(cur++) = 1.0;
        // r4
        values(cur++) = psi + vmid;
        values(cur++) = bp;
        values(cur++) = 0.5 * bp;
        values(cur++) = 0.5 * bp;
        // r5
        values(cur++) = psi - vmid;
        values(cur++) = bm;
        values(cur++) = -0.5 * bm;
        values(cur++) = -0.5 * bm;
        // r6
        values(cur++) = muFn - bp - bm;
        values(cur++) = -psi;
        values(cur++) = -psi;
      } else if (b.kind == "obstacle_nominal" || b.kind == "obstacle_sample") {
        const int base = b.kind == "obstacle_nominal"
                             ? layout.nominal_x_offset(t)
                             : layout.sample_x_offset(b.sample, t);
        const double px = z(base + spec.obstacles.ix);
        const double py = z(base + spec.obstacles.iy);
        for (int k = 0; k < n_obstacles(); ++k) {
          const auto& circ = spec.obstacles.circles[static_cast<size_t>(k)];
          values(cur++) = -2.0 * (px - circ.center(0));
          values(cur++) = -2.0 * (py - circ.center(1));
        }
      } else if (b.kind == "terminal") {
        for (size_t k = 0; k < spec.terminal->indices.size(); ++k)
          values(cur++) = 1.0;
      }
      const size_t expected =
          (bi + 1 < blocks.size()) ? block_value_start[bi + 1] : pattern.size();
      assert(cur == expected);
      (void)expected;
    }
  }

  void grad_lagrangian(const Vec& z, double sigma, const Vec& y, Vec& out) {
    const bool have_y = y.size() > 0;
    ensure_point(z, true);
    out = Vec::Zero(layout.size());
    const int T = spec.T, n = spec.n, m = spec.m, n_s = spec.n_s;
    const int vi = spec.friction.slider_velocity_index;
    const double muFn = spec.friction.mu * spec.friction.normal_force;

    // objective: nominal quadratic part
    if (sigma != 0.0) {
      const QuadraticObjective& qo = spec.nominal_cost;
      for (int t = 0; t < T; ++t) {
        const Vec e = z.segment(layout.nominal_x_offset(t), n) - qo.x_ref;
        out.segment(layout.nominal_x_offset(t), n) +=
            sigma * 2.0 * (((t == T - 1) ? qo.QT : qo.Q) * e);
        if (t < T - 1) {
          const Vec eu = z.segment(layout.nominal_u_offset(t), m) - qo.u_ref;
          out.segment(layout.nominal_u_offset(t), m) += sigma * 2.0 * (qo.R * eu);
        }
      }
      if (layout.has_duration())
        out(layout.duration_offset()) += sigma * qo.time_weight * (T - 1);
    }

    // sample-dynamics adjoints plus tracking-cost seeds, step by step
    if (has_samples()) {
      Mat states_bar(n_s, spec.N), theta_bar(m, layout.n_obs), next_bar;
      Vec xbar_bar(n), ubar_bar(m);
      for (size_t bi = 0; bi < blocks.size(); ++bi) {
        const RowBlock& b = blocks[bi];
        if (b.kind != "sample_dynamics") continue;
        const int t = b.t;
        const auto& c = scache[static_cast<size_t>(t)];

        next_bar.resize(0, 0);
        if (have_y) {
          next_bar = Mat(n_s, spec.N);
          for (int i = 0; i < spec.N; ++i)
            next_bar.col(i) = -y.segment(b.row0 + i * n_s, n_s);
          // identity part on x^(i)_{t+1}
          for (int i = 0; i < spec.N; ++i)
            out.segment(layout.sample_x_offset(i, t + 1), n_s) +=
                y.segment(b.row0 + i * n_s, n_s);
        }

        Vec mu_bar, nu_bar;
        Mat P_bar, L_bar;
        if (sigma != 0.0) {
          const Mat& Q = spec.tracking.Q[static_cast<size_t>(t)];
          const Mat& R = spec.tracking.R[static_cast<size_t>(t)];
          const Vec e = c.in.mu - ref_at(z, t);
          const Vec eu = c.ctrl.nu - z.segment(layout.nominal_u_offset(t), m);
          mu_bar = sigma * 2.0 * (Q * e);
          P_bar = sigma * Q;
          nu_bar = sigma * 2.0 * (R * eu);
          L_bar = sigma * R;
          // direct objective dependence on the nominal knot
          out.segment(layout.nominal_x_offset(t), n) -= mu_bar.head(n);
          out.segment(layout.nominal_u_offset(t), m) -= nu_bar;
        }

        if (next_bar.size() == 0 && sigma == 0.0) continue;

        states_bar.setZero();
        theta_bar.setZero();
        xbar_bar.setZero();
        ubar_bar.setZero();
        double h_bar = 0.0;
        sdyn->vjp(c, next_bar, mu_bar, P_bar, nu_bar, L_bar, states_bar, theta_bar,
                  xbar_bar, ubar_bar, h_bar);

        for (int i = 0; i < spec.N; ++i)
          out.segment(layout.sample_x_offset(i, t), n_s) += states_bar.col(i);
        for (int r = 0; r < m; ++r)
          for (int k = 0; k < layout.n_obs; ++k)
            out(layout.theta_offset(t) + r * layout.n_obs + k) += theta_bar(r, k);
        out.segment(layout.nominal_x_offset(t), n) += xbar_bar.head(n);
        out.segment(layout.nominal_u_offset(t), m) += ubar_bar;
        if (layout.has_duration()) out(layout.duration_offset()) += h_bar;
      }

      // terminal tracking term
      if (sigma != 0.0) {
        const Mat& QT = spec.tracking.Q[static_cast<size_t>(T - 1)];
        const Vec ref = ref_at(z, T - 1);
        const Vec e = terminal_moments.mu - ref;
        const Mat states = gather_states(z, T - 1);
        const double cN = 2.0 / (spec.beta * spec.beta * spec.N);
        for (int i = 0; i < spec.N; ++i) {
          const Vec delta = states.col(i) - terminal_moments.mu;
          out.segment(layout.sample_x_offset(i, T - 1), n_s) +=
              sigma * (cN * (QT * delta) + (2.0 / spec.N) * (QT * e));
        }
        out.segment(layout.nominal_x_offset(T - 1), n) -=
            sigma * 2.0 * (QT * e).head(n);
      }
    }

    if (!have_y) return;

    // analytic constraint blocks
    for (const RowBlock& b : blocks) {
      const int t = b.t;
      if (b.kind == "nominal_dynamics") {
        Vec aux;
        if (layout.has_aux()) aux = z.segment(layout.aux_offset(t), 2);
        const Vec x = z.segment(layout.nominal_x_offset(t), n);
        const Vec u = z.segment(layout.nominal_u_offset(t), m);
        const Vec xn = z.segment(layout.nominal_x_offset(t + 1), n);
        const double h = layout.stage_duration(z, t);
        MidpointResidual mr =
            midpoint_residual(*spec.nominal_model, x, u, aux, xn, h);
        const bool discrete = spec.nominal_model->is_discrete();
        const double sc = discrete ? 1.0 : 1.0 / h;
        const Vec yb = y.segment(b.row0, n);
        out.segment(layout.nominal_x_offset(t), n) +=
            sc * (mr.dr_dx.transpose() * yb);
        out.segment(layout.nominal_u_offset(t), m) +=
            sc * (mr.dr_du.transpose() * yb);
        out.segment(layout.nominal_x_offset(t + 1), n) +=
            sc * (mr.dr_dxnext.transpose() * yb);
        if (layout.has_aux())
          out.segment(layout.aux_offset(t), 2) +=
              sc * (mr.dr_daux.transpose() * yb);
        if (nominal_uses_h())
          out(layout.duration_offset()) +=
              yb.dot(sc * mr.dr_dh - mr.r / (h * h));
      } else if (b.kind == "policy") {
        const Mat theta = gather_theta(z, t);
        const Vec xbar = z.segment(layout.nominal_x_offset(t), n);
        for (int i = 0; i < spec.N; ++i) {
          const Vec xi = z.segment(layout.sample_x_offset(i, t), n_s);
          for (int r = 0; r < m; ++r) {
            const double yr = y(b.row0 + i * m + r);
            if (yr == 0.0) continue;
            out(layout.sample_u_offset(i, t) + r) += yr;
            out(layout.nominal_u_offset(t) + r) -= yr;
            for (int k = 0; k < layout.n_obs; ++k) {
              const int idx = spec.policy.observed[static_cast<size_t>(k)];
              out(layout.theta_offset(t) + r * layout.n_obs + k) +=
                  yr * (xi(idx) - xbar(idx));
              out(layout.sample_x_offset(i, t) + idx) += yr * theta(r, k);
              out(layout.nominal_x_offset(t) + idx) -= yr * theta(r, k);
            }
          }
        }
      } else if (b.kind == "friction") {
        const int s = layout.aux_offset(t);
        const double bp = z(s), bm = z(s + 1), psi = z(s + 2);
        const int v0 = layout.nominal_x_offset(t) + vi;
        const int v1 = layout.nominal_x_offset(t + 1) + vi;
        const double vmid = 0.5 * (z(v0) + z(v1));
        const double y0 = y(b.row0 + 0), y1 = y(b.row0 + 1), y2 = y(b.row0 + 2);
        const double y3 = y(b.row0 + 3), y4 = y(b.row0 + 4), y5 = y(b.row0 + 5);
        out(s + 2) += -y0 - y1 + y3 * bp + y4 * bm + y5 * (muFn - bp - bm);
        out(v0) += 0.5 * (-y0 + y1 + y3 * bp - y4 * bm);
        out(v1) += 0.5 * (-y0 + y1 + y3 * bp - y4 * bm);
        out(s + 0) += y2 + y3 * (psi + vmid) - y5 * psi;
        out(s + 1) += y2 + y4 * (psi - vmid) - y5 * psi;
      } else if (b.kind == "obstacle_nominal" || b.kind == "obstacle_sample") {
        const int base = b.kind == "obstacle_nominal"
                             ? layout.nominal_x_offset(t)
                             : layout.sample_x_offset(b.sample, t);
        const double px = z(base + spec.obstacles.ix);
        const double py = z(base + spec.obstacles.iy);
        for (int k = 0; k < n_obstacles(); ++k) {
          const double yk = y(b.row0 + k);
          if (yk == 0.0) continue;
          const auto& circ = spec.obstacles.circles[static_cast<size_t>(k)];
          out(base + spec.obstacles.ix) += yk * -2.0 * (px - circ.center(0));
          out(base + spec.obstacles.iy) += yk * -2.0 * (py - circ.center(1));
        }
      } else if (b.kind == "terminal") {
        for (size_t k = 0; k < spec.terminal->indices.size(); ++k)
          out(layout.nominal_x_offset(spec.T - 1) + spec.terminal->indices[k]) +=
              y(b.row0 + static_cast<int>(k));
      }
    }
  }
};

// ---------------------------------------------------------------------------

DpoNlp::DpoNlp(const ProblemSpec& spec) : impl_(std::make_unique<Impl>(spec)) {
  ValidationReport rep = validate(spec);
  if (!rep.ok()) {
    std::string msg = "cannot assemble NLP from invalid spec:";
    for (const auto& v : rep.violations) msg += " [" + v + "]";
    throw AssemblyError(msg);
  }
}

DpoNlp::~DpoNlp() = default;

int DpoNlp::num_vars() const { return impl_->layout.size(); }
int DpoNlp::num_rows() const { return impl_->n_rows; }
const std::vector<RowType>& DpoNlp::row_types() const { return impl_->types; }
const Vec& DpoNlp::lower_bounds() const { return impl_->lb; }
const Vec& DpoNlp::upper_bounds() const { return impl_->ub; }

double DpoNlp::eval_objective(const Vec& z) { return impl_->objective(z); }

void DpoNlp::eval_gradient(const Vec& z, Vec& grad) {
  impl_->grad_lagrangian(z, 1.0, Vec(), grad);
}

void DpoNlp::eval_constraints(const Vec& z, Vec& c) { impl_->constraints(z, c); }

const std::vector<std::pair<int, int>>& DpoNlp::jacobian_pattern() const {
  return impl_->pattern;
}

void DpoNlp::eval_jacobian(const Vec& z, Vec& values) { impl_->jacobian(z, values); }

void DpoNlp::grad_lagrangian(const Vec& z, double sigma_f, const Vec& y, Vec& out) {
  impl_->grad_lagrangian(z, sigma_f, y, out);
}

std::string DpoNlp::row_name(int row) const {
  for (const auto& b : impl_->blocks) {
    if (row >= b.row0 && row < b.row0 + b.count) {
      std::string s = b.kind + "[t=" + std::to_string(b.t);
      if (b.sample >= 0) s += ",i=" + std::to_string(b.sample);
      s += ",local=" + std::to_string(row - b.row0) + "]";
      return s;
    }
  }
  return "row " + std::to_string(row);
}

const DecisionLayout& DpoNlp::layout() const { return impl_->layout; }
const ProblemSpec& DpoNlp::spec() const { return impl_->spec; }

void DpoNlp::set_friction_relaxation(double rho) {
  impl_->rho_relax = rho;
  impl_->cache_valid = false;
}

double DpoNlp::friction_relaxation() const { return impl_->rho_relax; }

const std::vector<DpoNlp::RowBlock>& DpoNlp::row_blocks() const {
  return impl_->blocks;
}

void DpoNlp::moments_at(const Vec& z, std::vector<Moments>& state_moments,
                        std::vector<ControlMoments>& control_moments) {
  impl_->ensure_point(z, false);
  state_moments.clear();
  control_moments.clear();
  for (int t = 0; t < impl_->spec.T - 1; ++t) {
    state_moments.push_back(impl_->scache[static_cast<size_t>(t)].in);
    control_moments.push_back(impl_->scache[static_cast<size_t>(t)].ctrl);
  }
  state_moments.push_back(impl_->terminal_moments);
}

}  // namespace dpo
