#include <Eigen/Eigenvalues>

#include "dpo/types.hpp"

namespace dpo {

namespace {

bool symmetric(const Mat& A, double tol = 1e-10) {
  return A.rows() == A.cols() && (A - A.transpose()).lpNorm<Eigen::Infinity>() <= tol;
}

double min_eigenvalue(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

ValidationReport validate(const ProblemSpec& spec) {
  ValidationReport rep;
  auto flag = [&](const std::string& s) { rep.violations.push_back(s); };

  if (spec.T < 2) flag("T < 2");
  if (spec.n < 1 || spec.m < 1) flag("state/control dimension < 1");
  if (spec.n_s < spec.n) flag("n_s < n");
  if (spec.N > 0 && spec.N != 2 * spec.n_s) flag("N != 2*n_s");

  if (spec.N > 0) {
    if (static_cast<int>(spec.W.size()) != spec.T - 1) flag("W list length != T-1");
    for (const Mat& W : spec.W) {
      if (W.rows() != spec.d || W.cols() != spec.d) {
        flag("W dimension mismatch");
        break;
      }
      if (!symmetric(W) || min_eigenvalue(W) <= 0.0) {
        flag("W not PD");
        break;
      }
    }
  }

  if (static_cast<int>(spec.tracking.Q.size()) != spec.T) {
    flag("Q list length != T");
  } else {
    for (const Mat& Q : spec.tracking.Q) {
      if (Q.rows() != spec.n_s || Q.cols() != spec.n_s) {
        flag("Q dimension mismatch");
        break;
      }
      if (!symmetric(Q, 1e-9) || min_eigenvalue(Q) < -1e-10) {
        flag("Q not PSD");
        break;
      }
    }
  }
  if (static_cast<int>(spec.tracking.R.size()) != spec.T - 1) {
    flag("R list length != T-1");
  } else {
    for (const Mat& R : spec.tracking.R) {
      if (R.rows() != spec.m || R.cols() != spec.m) {
        flag("R dimension mismatch");
        break;
      }
      if (!symmetric(R, 1e-9) || min_eigenvalue(R) <= 0.0) {
        flag("R not PD");
        break;
      }
    }
  }

  if (!spec.nominal_model) {
    flag("nominal model missing");
  } else {
    if (spec.nominal_model->state_dim() != spec.n) flag("nominal model state dim");
    if (spec.nominal_model->control_dim() != spec.m) flag("nominal model control dim");
    if (spec.friction.enabled && spec.nominal_model->aux_dim() != 2)
      flag("friction enabled but nominal model has no aux inputs");
  }
  if (spec.N > 0) {
    const auto sz = spec.sample_models.size();
    if (sz != 1 && sz != static_cast<size_t>(spec.N))
      flag("sample_models length != N or 1");
    for (const auto& mdl : spec.sample_models) {
      if (!mdl) {
        flag("sample model missing");
        break;
      }
      if (mdl->state_dim() != spec.n_s || mdl->control_dim() != spec.m) {
        flag("sample model dimensions mismatch");
        break;
      }
    }
  }

  if (spec.N > 0) {
    const int n_obs = spec.policy.n_obs();
    if (n_obs < 1 || n_obs > spec.n_s) flag("observation map size invalid");
    std::vector<bool> seen(static_cast<size_t>(spec.n_s), false);
    for (int idx : spec.policy.observed) {
      if (idx < 0 || idx >= spec.n_s || idx >= spec.n || seen[static_cast<size_t>(idx)]) {
        flag("observation indices invalid");
        break;
      }
      seen[static_cast<size_t>(idx)] = true;
    }
  }

  if (spec.x1.size() != spec.n) flag("nominal initial state dimension");
  if (spec.N > 0 &&
      (spec.sample_x1.rows() != spec.n_s || spec.sample_x1.cols() != spec.N))
    flag("sample initial state dimensions");
  if (spec.tail_ref.size() != spec.n_s - spec.n) flag("tail reference dimension");

  if (spec.free_time.enabled) {
    if (!(spec.free_time.h_min > 0.0) || spec.free_time.h_max < spec.free_time.h_min)
      flag("free final time bounds invalid");
    if (spec.free_time.h_init < spec.free_time.h_min ||
        spec.free_time.h_init > spec.free_time.h_max)
      flag("free final time initial value out of bounds");
  } else if (!(spec.dt > 0.0)) {
    flag("dt <= 0");
  }

  for (const auto& c : spec.obstacles.circles)
    if (!(c.radius > 0.0)) {
      flag("obstacle radius <= 0");
      break;
    }

  if (spec.terminal) {
    if (spec.terminal->values.size() !=
        static_cast<Eigen::Index>(spec.terminal->indices.size()))
      flag("terminal constraint size mismatch");
    for (int idx : spec.terminal->indices)
      if (idx < 0 || idx >= spec.n) {
        flag("terminal constraint index invalid");
        break;
      }
  }

  return rep;
}

}  // namespace dpo
