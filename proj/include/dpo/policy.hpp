#pragma once

#include <vector>

#include "dpo/models.hpp"
#include "dpo/types.hpp"

namespace dpo {

// u = ubar - theta * (obs(x) - obs(xbar)). The observation map selects the
// observable components of the (possibly augmented) sample state; the same
// indices select the compared components of the nominal state.
Vec policy_evaluate(const PolicyClass& pc, const Mat& theta, const Vec& x,
                    const Vec& xbar, const Vec& ubar);

// Closed-form Jacobians of the linear policy class. d_theta is m x (m*n_obs)
// with theta vectorized row-major.
struct PolicyJacobians {
  Mat d_theta;
  Mat d_x;     // m x n_s
  Mat d_xbar;  // m x n
  Mat d_ubar;  // m x m
};

PolicyJacobians policy_jacobians(const PolicyClass& pc, const Mat& theta,
                                 const Vec& x, const Vec& xbar, const Vec& ubar,
                                 int n_s, int n);

}  // namespace dpo
