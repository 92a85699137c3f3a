#include "dpo/policy.hpp"

#include "dpo/errors.hpp"

namespace dpo {

Vec policy_evaluate(const PolicyClass& pc, const Mat& theta, const Vec& x,
                    const Vec& xbar, const Vec& ubar) {
  const int n_obs = pc.n_obs();
  if (theta.cols() != n_obs) throw DimensionError("policy: gain block mismatch");
  Vec err(n_obs);
  for (int k = 0; k < n_obs; ++k) {
    const int idx = pc.observed[static_cast<size_t>(k)];
    err(k) = x(idx) - xbar(idx);
  }
  return ubar - theta * err;
}

PolicyJacobians policy_jacobians(const PolicyClass& pc, const Mat& theta,
                                 const Vec& x, const Vec& xbar, const Vec& ubar,
                                 int n_s, int n) {
  const int m = static_cast<int>(theta.rows());
  const int n_obs = pc.n_obs();
  PolicyJacobians J;
  J.d_theta = Mat::Zero(m, m * n_obs);
  J.d_x = Mat::Zero(m, n_s);
  J.d_xbar = Mat::Zero(m, n);
  J.d_ubar = Mat::Identity(m, m);
  (void)ubar;
  for (int k = 0; k < n_obs; ++k) {
    const int idx = pc.observed[static_cast<size_t>(k)];
    const double err = x(idx) - xbar(idx);
    for (int r = 0; r < m; ++r) {
      J.d_theta(r, r * n_obs + k) = -err;  // row-major vec(theta)
      J.d_x(r, idx) = -theta(r, k);
      J.d_xbar(r, idx) = theta(r, k);
    }
  }
  return J;
}

}  // namespace dpo
