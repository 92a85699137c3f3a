#include "dpo/spec_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "dpo/errors.hpp"
#include "dpo/unscented.hpp"

namespace dpo {

using nlohmann::json;

Vec parse_vector(const json& node) {
  if (node.is_array()) {
    Vec v(node.size());
    for (size_t i = 0; i < node.size(); ++i) v(i) = node[i].get<double>();
    return v;
  }
  if (node.is_object() && node.contains("constant") && node.contains("dim"))
    return Vec::Constant(node.at("dim").get<int>(), node.at("constant").get<double>());
  throw ConfigError("cannot parse vector: " + node.dump());
}

Mat parse_matrix(const json& node, int dim) {
  if (node.is_number())
    return node.get<double>() * Mat::Identity(dim, dim);
  if (node.is_array()) {
    const int rows = static_cast<int>(node.size());
    const int cols = static_cast<int>(node.at(0).size());
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = node[i][j].get<double>();
    return m;
  }
  if (node.is_object()) {
    if (node.contains("diag")) {
      Vec d = parse_vector(node.at("diag"));
      return d.asDiagonal();
    }
    if (node.contains("scale")) {
      const int k = node.value("dim", dim);
      return node.at("scale").get<double>() * Mat::Identity(k, k);
    }
  }
  throw ConfigError("cannot parse matrix: " + node.dump());
}

namespace {

std::vector<Mat> parse_matrix_sequence(const json& node, int dim, int count) {
  std::vector<Mat> out;
  if (node.is_object() && node.contains("per_step")) {
    for (const auto& item : node.at("per_step")) out.push_back(parse_matrix(item, dim));
    if (static_cast<int>(out.size()) != count)
      throw ConfigError("per_step matrix list has wrong length");
    return out;
  }
  out.assign(static_cast<size_t>(count), parse_matrix(node, dim));
  return out;
}

}  // namespace

ProblemSpec load_problem_spec(const json& doc) {
  ProblemSpec spec;
  spec.name = doc.value("name", std::string("unnamed"));
  spec.T = doc.at("horizon").get<int>();
  spec.beta = doc.value("beta", 1.0);

  spec.nominal_model = make_model(doc.at("nominal_model"));
  spec.n = spec.nominal_model->state_dim();
  spec.m = spec.nominal_model->control_dim();

  if (doc.contains("sample_models")) {
    for (const auto& node : doc.at("sample_models"))
      spec.sample_models.push_back(make_model(node));
  } else {
    spec.sample_models.push_back(spec.nominal_model);
  }
  spec.n_s = spec.sample_models.front()->state_dim();
  spec.N = doc.value("num_samples", 2 * spec.n_s);
  spec.d = doc.value("disturbance_dim", spec.n_s);

  if (spec.N > 0)
    spec.W = parse_matrix_sequence(doc.at("disturbance_cov"), spec.d, spec.T - 1);

  // tracking weights: stage Q for t = 1..T-1, terminal QT
  if (doc.contains("tracking_weights")) {
    const json& tw = doc.at("tracking_weights");
    Mat Q = parse_matrix(tw.at("Q"), spec.n_s);
    Mat QT = parse_matrix(tw.at("QT"), spec.n_s);
    Mat R = parse_matrix(tw.at("R"), spec.m);
    spec.tracking.Q.assign(static_cast<size_t>(spec.T), Q);
    spec.tracking.Q.back() = QT;
    spec.tracking.R.assign(static_cast<size_t>(spec.T - 1), R);
  }

  const json& obj = doc.at("nominal_objective");
  spec.nominal_cost.Q = parse_matrix(obj.value("Q", json(0.0)), spec.n);
  spec.nominal_cost.R = parse_matrix(obj.value("R", json(0.0)), spec.m);
  spec.nominal_cost.QT = parse_matrix(obj.value("QT", json(0.0)), spec.n);
  spec.nominal_cost.x_ref = obj.contains("x_ref") ? parse_vector(obj.at("x_ref"))
                                                  : Vec::Zero(spec.n);
  spec.nominal_cost.u_ref = obj.contains("u_ref") ? parse_vector(obj.at("u_ref"))
                                                  : Vec::Zero(spec.m);
  spec.nominal_cost.time_weight = obj.value("time_weight", 0.0);

  if (doc.contains("policy")) {
    const json& pol = doc.at("policy");
    const std::string kind = pol.value("kind", std::string("linear_state_feedback"));
    spec.policy.kind = (kind == "linear_output_feedback")
                           ? PolicyClass::Kind::LinearOutputFeedback
                           : PolicyClass::Kind::LinearStateFeedback;
    if (pol.contains("observed_indices")) {
      for (const auto& v : pol.at("observed_indices"))
        spec.policy.observed.push_back(v.get<int>());
    }
  }
  if (spec.policy.observed.empty()) {
    for (int i = 0; i < spec.n_s; ++i) spec.policy.observed.push_back(i);
    if (spec.policy.kind == PolicyClass::Kind::LinearOutputFeedback)
      spec.policy.observed.resize(static_cast<size_t>(spec.n));
  }

  if (doc.contains("free_final_time")) {
    const json& ft = doc.at("free_final_time");
    spec.free_time.enabled = ft.value("enabled", true);
    spec.free_time.h_min = ft.value("min", 0.0);
    spec.free_time.h_max = ft.value("max", 0.0);
    spec.free_time.h_init = ft.value("init", 0.5 * (spec.free_time.h_min +
                                                    spec.free_time.h_max));
  }
  spec.dt = doc.value("timestep", 1.0);

  const json& ic = doc.at("initial_conditions");
  spec.x1 = parse_vector(ic.at("nominal"));
  spec.tail_ref = doc.contains("tail_reference")
                      ? parse_vector(doc.at("tail_reference"))
                      : Vec::Zero(spec.n_s - spec.n);
  if (spec.N > 0) {
    if (ic.contains("samples")) {
      const json& samples = ic.at("samples");
      spec.sample_x1.resize(spec.n_s, spec.N);
      if (static_cast<int>(samples.size()) != spec.N)
        throw ConfigError("initial_conditions.samples must list N states");
      for (int i = 0; i < spec.N; ++i)
        spec.sample_x1.col(i) = parse_vector(samples[static_cast<size_t>(i)]);
    } else {
      // deterministic sigma points of (x1 augmented, P1)
      Mat P1 = parse_matrix(ic.value("sample_cov", json(1e-3)), spec.n_s);
      Vec mu(spec.n_s);
      mu.head(spec.n) = spec.x1;
      mu.tail(spec.n_s - spec.n) = spec.tail_ref;
      spec.sample_x1 = state_sigma_points(Moments{mu, P1}, spec.beta);
    }
  }

  spec.nominal_fixed = doc.value("nominal_fixed", false);

  if (doc.contains("constraints")) {
    const json& cons = doc.at("constraints");
    if (cons.contains("terminal")) {
      TerminalConstraint tc;
      for (const auto& v : cons.at("terminal").at("indices"))
        tc.indices.push_back(v.get<int>());
      tc.values = parse_vector(cons.at("terminal").at("values"));
      spec.terminal = tc;
    }
    if (cons.contains("obstacles")) {
      const json& obs = cons.at("obstacles");
      if (obs.contains("position_indices")) {
        spec.obstacles.ix = obs.at("position_indices").at(0).get<int>();
        spec.obstacles.iy = obs.at("position_indices").at(1).get<int>();
      }
      for (const auto& c : obs.at("circles")) {
        ObstacleField::Circle circle;
        Vec center = parse_vector(c.at("center"));
        circle.center = Eigen::Vector2d(center(0), center(1));
        circle.radius = c.at("radius").get<double>();
        spec.obstacles.circles.push_back(circle);
      }
    }
    if (cons.contains("control_bounds")) {
      VarBounds b;
      b.lower = parse_vector(cons.at("control_bounds").at("lower"));
      b.upper = parse_vector(cons.at("control_bounds").at("upper"));
      spec.nominal_control_bounds = b;
    }
    if (cons.contains("state_bounds")) {
      VarBounds b;
      b.lower = parse_vector(cons.at("state_bounds").at("lower"));
      b.upper = parse_vector(cons.at("state_bounds").at("upper"));
      spec.nominal_state_bounds = b;
    }
    if (cons.contains("sample_state_bounds")) {
      VarBounds b;
      b.lower = parse_vector(cons.at("sample_state_bounds").at("lower"));
      b.upper = parse_vector(cons.at("sample_state_bounds").at("upper"));
      spec.sample_state_bounds = b;
    }
    if (cons.contains("friction")) {
      const json& fr = cons.at("friction");
      spec.friction.enabled = true;
      spec.friction.mu = fr.at("mu").get<double>();
      spec.friction.relaxation = fr.value("relaxation", 1e-6);
      spec.friction.slider_velocity_index = fr.value("slider_velocity_index", 2);
      if (fr.contains("normal_force")) {
        spec.friction.normal_force = fr.at("normal_force").get<double>();
      } else {
        const json& mp = doc.at("nominal_model").value("params", json::object());
        spec.friction.normal_force = (mp.value("cart_mass", 1.0) +
                                      mp.value("pole_mass", 0.2)) *
                                     mp.value("gravity", 9.81);
      }
    }
  }

  return spec;
}

ProblemSpec load_problem_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file: " + path);
  json doc = json::parse(in);
  return load_problem_spec(doc);
}

}  // namespace dpo
