#include "dpo/nlp.hpp"

namespace dpo {

void Nlp::grad_lagrangian(const Vec& z, double sigma_f, const Vec& y, Vec& out) {
  out = Vec::Zero(num_vars());
  if (sigma_f != 0.0) {
    Vec g;
    eval_gradient(z, g);
    out += sigma_f * g;
  }
  if (y.size() > 0) {
    Vec values;
    eval_jacobian(z, values);
    const auto& pat = jacobian_pattern();
    for (size_t k = 0; k < pat.size(); ++k)
      out(pat[k].second) += values(static_cast<Eigen::Index>(k)) * y(pat[k].first);
  }
}

std::string Nlp::row_name(int row) const { return "row " + std::to_string(row); }

}  // namespace dpo
