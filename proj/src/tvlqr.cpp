#include "dpo/tvlqr.hpp"

#include <Eigen/Cholesky>

#include "dpo/errors.hpp"

namespace dpo {

void linearize_step(const DynamicsModel& model, const Vec& x, const Vec& u,
                    const Vec& x_next, double h, Mat& A, Mat& B) {
  if (model.is_discrete()) {
    model.step_jacobians(x, u, A, B);
    return;
  }
  const int n = model.state_dim();
  const Vec aux = Vec::Zero(model.aux_dim());
  const Vec mid = 0.5 * (x + x_next);
  Mat fx, fu, faux;
  model.ode_jacobians(mid, u, aux, fx, fu, faux);
  Mat G = Mat::Identity(n, n) - (0.5 * h) * fx;
  auto lu = G.partialPivLu();
  A = lu.solve(Mat(Mat::Identity(n, n) + (0.5 * h) * fx));
  B = lu.solve(Mat(h * fu));
}

RiccatiSolution riccati_recursion(const std::vector<Mat>& A,
                                  const std::vector<Mat>& B,
                                  const std::vector<Mat>& Q,
                                  const std::vector<Mat>& R, const Mat& QT) {
  const int steps = static_cast<int>(A.size());
  RiccatiSolution sol;
  sol.gains.resize(static_cast<size_t>(steps));
  sol.cost_to_go.resize(static_cast<size_t>(steps) + 1);
  sol.cost_to_go.back() = QT;

  for (int t = steps - 1; t >= 0; --t) {
    const Mat& P = sol.cost_to_go[static_cast<size_t>(t) + 1];
    const Mat& At = A[static_cast<size_t>(t)];
    const Mat& Bt = B[static_cast<size_t>(t)];
    Mat H = R[static_cast<size_t>(t)] + Bt.transpose() * P * Bt;
    Eigen::LLT<Mat> llt(0.5 * (H + H.transpose()));
    if (llt.info() != Eigen::Success)
      throw RiccatiSingular("R + B'PB not positive definite at step " +
                            std::to_string(t));
    Mat K = llt.solve(Bt.transpose() * P * At);
    Mat Acl = At - Bt * K;
    Mat Pt = Q[static_cast<size_t>(t)] +
             K.transpose() * R[static_cast<size_t>(t)] * K +
             Acl.transpose() * P * Acl;
    sol.cost_to_go[static_cast<size_t>(t)] = 0.5 * (Pt + Pt.transpose());
    sol.gains[static_cast<size_t>(t)] = std::move(K);
  }
  return sol;
}

RiccatiSolution tvlqr(const Trajectory& nominal, const DynamicsModel& model,
                      const std::vector<Mat>& Q, const std::vector<Mat>& R,
                      const Mat& QT) {
  const int steps = nominal.horizon() - 1;
  std::vector<Mat> A(static_cast<size_t>(steps)), B(static_cast<size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    linearize_step(model, nominal.states.row(t).transpose(),
                   nominal.controls.row(t).transpose(),
                   nominal.states.row(t + 1).transpose(),
                   nominal.step_durations(t), A[static_cast<size_t>(t)],
                   B[static_cast<size_t>(t)]);
  }
  return riccati_recursion(A, B, Q, R, QT);
}

RiccatiSolution tvlqr(const Trajectory& nominal, const DynamicsModel& model,
                      const Mat& Q, const Mat& R, const Mat& QT) {
  const size_t steps = static_cast<size_t>(nominal.horizon() - 1);
  return tvlqr(nominal, model, std::vector<Mat>(steps, Q),
               std::vector<Mat>(steps, R), QT);
}

}  // namespace dpo
