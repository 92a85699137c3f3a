#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dpo/models.hpp"

namespace dpo {

enum class RowType { Equality, InequalityLe };

// Generic sparse-NLP callback contract:
//
//   min f(z)   s.t.  c_i(z) = 0 or c_i(z) <= 0,   lb <= z <= ub
//
// The built-in augmented-Lagrangian solver consumes exactly this interface,
// and it is the seam where an external sparse NLP solver would be adapted.
class Nlp {
 public:
  virtual ~Nlp() = default;

  virtual int num_vars() const = 0;
  virtual int num_rows() const = 0;
  virtual const std::vector<RowType>& row_types() const = 0;
  virtual const Vec& lower_bounds() const = 0;
  virtual const Vec& upper_bounds() const = 0;

  virtual double eval_objective(const Vec& z) = 0;
  virtual void eval_gradient(const Vec& z, Vec& grad) = 0;
  virtual void eval_constraints(const Vec& z, Vec& c) = 0;

  // Sparsity pattern as (row, col) pairs; eval_jacobian fills values aligned
  // with the pattern, same order.
  virtual const std::vector<std::pair<int, int>>& jacobian_pattern() const = 0;
  virtual void eval_jacobian(const Vec& z, Vec& values) = 0;

  // out = sigma_f * grad f(z) + J(z)^T y. The default assembles the triplet
  // Jacobian; implementations with an adjoint fast path override it.
  virtual void grad_lagrangian(const Vec& z, double sigma_f, const Vec& y, Vec& out);

  // Diagnostics: human-readable location of a constraint row.
  virtual std::string row_name(int row) const;
};

}  // namespace dpo
