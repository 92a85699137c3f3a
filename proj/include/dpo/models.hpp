#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace dpo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dynamics model used for transcription and simulation.
//
// Continuous-time models expose ode() and are discretized with implicit
// midpoint (transcription) or RK3 (simulation). Discrete-time models
// override is_discrete() and step()/step_jacobians() directly.
//
// Disturbances enter additively on the discrete state update; models never
// see w. An optional aux input vector carries per-knot decision variables
// (cart-pole friction slacks) into the continuous dynamics.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int aux_dim() const { return 0; }

  virtual bool is_discrete() const { return false; }

  // Continuous dynamics xdot = f(x, u, aux). aux may be empty when
  // aux_dim() == 0.
  virtual Vec ode(const Vec& x, const Vec& u, const Vec& aux) const;
  virtual void ode_jacobians(const Vec& x, const Vec& u, const Vec& aux,
                             Mat& fx, Mat& fu, Mat& faux) const;

  // Discrete dynamics x+ = f(x, u); only for is_discrete() models.
  virtual Vec step(const Vec& x, const Vec& u) const;
  virtual void step_jacobians(const Vec& x, const Vec& u, Mat& A, Mat& B) const;

  // Per-component control bounds (used for nominal and sample variables and
  // for actuator clamping in simulation).
  virtual Vec control_lower() const;
  virtual Vec control_upper() const;

  Vec ode(const Vec& x, const Vec& u) const { return ode(x, u, Vec()); }
};

using ModelPtr = std::shared_ptr<const DynamicsModel>;

// Construction from a JSON node: {"type": "...", "params": {...}}.
ModelPtr make_model(const nlohmann::json& node);

// Direct factories (used in tests and synthetic problems).
ModelPtr make_double_integrator();
ModelPtr make_unicycle();
ModelPtr make_cartpole(double mc, double mp, double len, double gravity);
// friction_mode: "none" has no friction, "aux" takes (F, b+, b-) as inputs,
// "smooth" uses a tanh kinetic-friction approximation of strength mu.
ModelPtr make_cartpole_friction(double mc, double mp, double len, double gravity,
                                double mu, const std::string& friction_mode,
                                double smooth_scale = 100.0);
ModelPtr make_rocket_nominal(double mr, double jr, double lr, double gravity,
                             const Vec& u_lo, const Vec& u_hi);
ModelPtr make_rocket_slosh(double mr, double jr, double lr, double mf, double lf,
                           double df, double gravity, const Vec& u_lo, const Vec& u_hi);
ModelPtr make_quadrotor(double mass, const Vec& inertia_diag, double arm,
                        double torque_coeff, double gravity, const Vec& u_max,
                        int broken_rotor = -1);
// x+ = A x + B u, for tests and synthetic scaling problems.
ModelPtr make_linear_discrete(const Mat& A, const Mat& B);

}  // namespace dpo
