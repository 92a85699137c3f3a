#pragma once

#include "dpo/models.hpp"

namespace dpo {

// Implicit midpoint residual r(x+) = x+ - x - h*f((x+x+)/2, u, aux) and its
// Jacobians, used as an equality constraint in transcription (no inner solve).
struct MidpointResidual {
  Vec r;
  Mat dr_dx;      // d r / d x_t
  Mat dr_dxnext;  // d r / d x_{t+1}
  Mat dr_du;
  Mat dr_daux;
  Vec dr_dh;
};

MidpointResidual midpoint_residual(const DynamicsModel& model, const Vec& x,
                                   const Vec& u, const Vec& aux, const Vec& x_next,
                                   double h);

// Explicit discrete step x+ = F(x, u, h) with derivatives. Continuous models
// are stepped with implicit midpoint solved by Newton iteration; derivatives
// come from the implicit function theorem. Discrete models use their own map
// (h ignored). Additive disturbances are applied by the caller.
struct StepResult {
  Vec x_next;
  Mat A;   // d x+ / d x
  Mat B;   // d x+ / d u
  Vec fh;  // d x+ / d h
};

StepResult discrete_step(const DynamicsModel& model, const Vec& x, const Vec& u,
                         double h, bool with_derivatives = true);

// Kutta's third-order scheme (nodes 0, 1/2, 1; weights 1/6, 2/3, 1/6).
Vec rk3_step(const DynamicsModel& model, const Vec& x, const Vec& u, double h);

}  // namespace dpo
