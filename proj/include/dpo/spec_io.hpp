#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "dpo/types.hpp"

namespace dpo {

// Problem files are JSON documents; matrices are row-major nested arrays with
// {"diag": [...]} and {"scale": s, "dim": n} shorthands. See
// docs/config_schema.md.
ProblemSpec load_problem_spec(const nlohmann::json& doc);
ProblemSpec load_problem_spec_file(const std::string& path);

// Matrix/vector parsing helpers shared with the experiment configs.
Mat parse_matrix(const nlohmann::json& node, int dim);
Vec parse_vector(const nlohmann::json& node);

}  // namespace dpo
