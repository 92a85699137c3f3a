#include "dpo/integrators.hpp"

#include <cmath>
#include <limits>

#include "dpo/errors.hpp"

namespace dpo {

MidpointResidual midpoint_residual(const DynamicsModel& model, const Vec& x,
                                   const Vec& u, const Vec& aux, const Vec& x_next,
                                   double h) {
  const int n = model.state_dim();
  MidpointResidual out;
  if (model.is_discrete()) {
    Mat A, B;
    model.step_jacobians(x, u, A, B);
    out.r = x_next - model.step(x, u);
    out.dr_dx = -A;
    out.dr_dxnext = Mat::Identity(n, n);
    out.dr_du = -B;
    out.dr_daux.resize(n, 0);
    out.dr_dh = Vec::Zero(n);
    return out;
  }
  const Vec mid = 0.5 * (x + x_next);
  const Vec f = model.ode(mid, u, aux);
  Mat fx, fu, faux;
  model.ode_jacobians(mid, u, aux, fx, fu, faux);
  out.r = x_next - x - h * f;
  out.dr_dx = -Mat::Identity(n, n) - (0.5 * h) * fx;
  out.dr_dxnext = Mat::Identity(n, n) - (0.5 * h) * fx;
  out.dr_du = -h * fu;
  out.dr_daux = -h * faux;
  out.dr_dh = -f;
  return out;
}

StepResult discrete_step(const DynamicsModel& model, const Vec& x, const Vec& u,
                         double h, bool with_derivatives) {
  const int n = model.state_dim();
  StepResult out;
  if (model.is_discrete()) {
    out.x_next = model.step(x, u);
    if (with_derivatives) {
      model.step_jacobians(x, u, out.A, out.B);
      out.fh = Vec::Zero(n);
    }
    return out;
  }

  // Newton iteration on r(x+) = x+ - x - h f((x+x+)/2, u). Failure returns
  // NaN so NLP line searches can reject the trial point.
  const Vec aux;  // explicit stepping is only used for aux-free models
  Vec xn = x + h * model.ode(x, u, aux);
  Mat fx, fu, faux;
  const double x_scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
  bool converged = false;
  for (int it = 0; it < 50 && xn.allFinite(); ++it) {
    const Vec mid = 0.5 * (x + xn);
    const Vec f = model.ode(mid, u, aux);
    const Vec r = xn - x - h * f;
    if (!r.allFinite()) break;
    if (r.lpNorm<Eigen::Infinity>() < 1e-13 * x_scale) {
      converged = true;
      break;
    }
    model.ode_jacobians(mid, u, aux, fx, fu, faux);
    Mat G = Mat::Identity(n, n) - (0.5 * h) * fx;
    xn -= G.partialPivLu().solve(r);
  }
  if (!converged && xn.allFinite()) {
    // accept the last iterate only if it is essentially converged
    const Vec mid = 0.5 * (x + xn);
    const Vec r = xn - x - h * model.ode(mid, u, aux);
    converged = r.allFinite() && r.lpNorm<Eigen::Infinity>() <= 1e-8 * x_scale;
  }
  if (!converged) {
    out.x_next = Vec::Constant(n, std::numeric_limits<double>::quiet_NaN());
    if (with_derivatives) {
      out.A = Mat::Zero(n, n);
      out.B = Mat::Zero(n, model.control_dim());
      out.fh = Vec::Zero(n);
    }
    return out;
  }
  out.x_next = xn;
  if (with_derivatives) {
    const Vec mid = 0.5 * (x + xn);
    model.ode_jacobians(mid, u, aux, fx, fu, faux);
    Mat G = Mat::Identity(n, n) - (0.5 * h) * fx;
    auto lu = G.partialPivLu();
    out.A = lu.solve(Mat(Mat::Identity(n, n) + (0.5 * h) * fx));
    out.B = lu.solve(Mat(h * fu));
    out.fh = lu.solve(model.ode(mid, u, aux));
  }
  return out;
}

Vec rk3_step(const DynamicsModel& model, const Vec& x, const Vec& u, double h) {
  const Vec aux;
  const Vec k1 = model.ode(x, u, aux);
  const Vec k2 = model.ode(x + 0.5 * h * k1, u, aux);
  const Vec k3 = model.ode(x - h * k1 + 2.0 * h * k2, u, aux);
  return x + (h / 6.0) * (k1 + 4.0 * k2 + k3);
}

}  // namespace dpo
