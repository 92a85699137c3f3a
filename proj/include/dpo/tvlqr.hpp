#pragma once

#include <vector>

#include "dpo/models.hpp"
#include "dpo/types.hpp"

namespace dpo {

struct RiccatiSolution {
  std::vector<Mat> gains;        // T-1 gains, m x n
  std::vector<Mat> cost_to_go;   // T matrices, n x n, PSD
};

// Linearization (A, B) of one implicit-midpoint step along a knot pair via
// implicit-function differentiation of the residual. Discrete models use
// their own step Jacobians. Aux inputs, if any, are held at zero.
void linearize_step(const DynamicsModel& model, const Vec& x, const Vec& u,
                    const Vec& x_next, double h, Mat& A, Mat& B);

// Backward Riccati recursion on explicit linearizations.
RiccatiSolution riccati_recursion(const std::vector<Mat>& A,
                                  const std::vector<Mat>& B,
                                  const std::vector<Mat>& Q,
                                  const std::vector<Mat>& R, const Mat& QT);

// Finite-horizon TVLQR about a nominal trajectory, discretized the same way
// the transcription is.
RiccatiSolution tvlqr(const Trajectory& nominal, const DynamicsModel& model,
                      const std::vector<Mat>& Q, const std::vector<Mat>& R,
                      const Mat& QT);
RiccatiSolution tvlqr(const Trajectory& nominal, const DynamicsModel& model,
                      const Mat& Q, const Mat& R, const Mat& QT);

}  // namespace dpo
