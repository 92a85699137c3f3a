#include "dpo/models.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "dpo/errors.hpp"

namespace dpo {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Vec DynamicsModel::ode(const Vec&, const Vec&, const Vec&) const {
  throw Error(name() + ": ode() not available");
}

void DynamicsModel::ode_jacobians(const Vec&, const Vec&, const Vec&, Mat&, Mat&,
                                  Mat&) const {
  throw Error(name() + ": ode_jacobians() not available");
}

Vec DynamicsModel::step(const Vec&, const Vec&) const {
  throw Error(name() + ": step() not available");
}

void DynamicsModel::step_jacobians(const Vec&, const Vec&, Mat&, Mat&) const {
  throw Error(name() + ": step_jacobians() not available");
}

Vec DynamicsModel::control_lower() const {
  return Vec::Constant(control_dim(), -kInf);
}

Vec DynamicsModel::control_upper() const {
  return Vec::Constant(control_dim(), kInf);
}

// ---------------------------------------------------------------------------
// Double integrator, discrete time.

class DoubleIntegrator final : public DynamicsModel {
 public:
  std::string name() const override { return "double_integrator"; }
  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  bool is_discrete() const override { return true; }

  Vec step(const Vec& x, const Vec& u) const override {
    Vec xp(2);
    xp(0) = x(0) + x(1);
    xp(1) = x(1) + u(0);
    return xp;
  }

  void step_jacobians(const Vec&, const Vec&, Mat& A, Mat& B) const override {
    A = (Mat(2, 2) << 1, 1, 0, 1).finished();
    B = (Mat(2, 1) << 0, 1).finished();
  }
};

// ---------------------------------------------------------------------------
// Unicycle: state (y, z, phi), controls (forward speed, turn rate).

class Unicycle final : public DynamicsModel {
 public:
  std::string name() const override { return "unicycle"; }
  int state_dim() const override { return 3; }
  int control_dim() const override { return 2; }

  Vec ode(const Vec& x, const Vec& u, const Vec&) const override {
    Vec xd(3);
    xd(0) = u(0) * std::cos(x(2));
    xd(1) = u(0) * std::sin(x(2));
    xd(2) = u(1);
    return xd;
  }

  void ode_jacobians(const Vec& x, const Vec& u, const Vec&, Mat& fx, Mat& fu,
                     Mat& faux) const override {
    fx = Mat::Zero(3, 3);
    fu = Mat::Zero(3, 2);
    faux.resize(3, 0);
    const double c = std::cos(x(2)), s = std::sin(x(2));
    fx(0, 2) = -u(0) * s;
    fx(1, 2) = u(0) * c;
    fu(0, 0) = c;
    fu(1, 0) = s;
    fu(2, 1) = 1.0;
  }
};

// ---------------------------------------------------------------------------
// Cart-pole: state (y, phi, ydot, phidot), phi measured from the downward
// position, control is the horizontal force on the cart. Friction on the
// slider enters as an extra horizontal force beta:
//   mode none:   beta = 0
//   mode aux:    beta = aux(0) - aux(1), slack variables from the NLP
//   mode smooth: beta = -mu*(mc+mp)*g*tanh(k*ydot)

class Cartpole final : public DynamicsModel {
 public:
  enum class Friction { None, Aux, Smooth };

  Cartpole(double mc, double mp, double len, double g, double mu, Friction mode,
           double smooth_scale)
      : mc_(mc), mp_(mp), l_(len), g_(g), mu_(mu), mode_(mode), k_(smooth_scale) {}

  std::string name() const override {
    switch (mode_) {
      case Friction::Aux: return "cartpole_friction";
      case Friction::Smooth: return "cartpole_friction_smooth";
      default: return "cartpole";
    }
  }
  int state_dim() const override { return 4; }
  int control_dim() const override { return 1; }
  int aux_dim() const override { return mode_ == Friction::Aux ? 2 : 0; }

  double normal_force() const { return (mc_ + mp_) * g_; }

  Vec ode(const Vec& x, const Vec& u, const Vec& aux) const override {
    const double phi = x(1), yd = x(2), w = x(3);
    const double s = std::sin(phi), c = std::cos(phi);
    const double F = u(0) + friction_force(yd, aux);
    const double D = mc_ + mp_ * s * s;
    Vec xd(4);
    xd(0) = yd;
    xd(1) = w;
    xd(2) = (F + mp_ * s * (l_ * w * w + g_ * c)) / D;
    xd(3) = (-F * c - mp_ * l_ * w * w * c * s - (mc_ + mp_) * g_ * s) / (l_ * D);
    return xd;
  }

  void ode_jacobians(const Vec& x, const Vec& u, const Vec& aux, Mat& fx, Mat& fu,
                     Mat& faux) const override {
    const double phi = x(1), yd = x(2), w = x(3);
    const double s = std::sin(phi), c = std::cos(phi);
    const double c2 = std::cos(2 * phi);
    const double F = u(0) + friction_force(yd, aux);
    const double D = mc_ + mp_ * s * s;
    const double dD = 2 * mp_ * s * c;

    const double N1 = F + mp_ * s * (l_ * w * w + g_ * c);
    const double dN1_phi = mp_ * c * l_ * w * w + mp_ * g_ * c2;
    const double N2 = -F * c - mp_ * l_ * w * w * c * s - (mc_ + mp_) * g_ * s;
    const double dN2_phi = F * s - mp_ * l_ * w * w * c2 - (mc_ + mp_) * g_ * c;

    fx = Mat::Zero(4, 4);
    fu = Mat::Zero(4, 1);
    faux = Mat::Zero(4, aux_dim());

    fx(0, 2) = 1.0;
    fx(1, 3) = 1.0;

    // acceleration sensitivities to the total horizontal force
    const double dydd_dF = 1.0 / D;
    const double dwd_dF = -c / (l_ * D);

    fx(2, 1) = (dN1_phi * D - N1 * dD) / (D * D);
    fx(2, 3) = 2 * mp_ * s * l_ * w / D;
    fx(3, 1) = (dN2_phi * D - N2 * dD) / (l_ * D * D);
    fx(3, 3) = -2 * mp_ * w * c * s / D;

    fu(2, 0) = dydd_dF;
    fu(3, 0) = dwd_dF;

    if (mode_ == Friction::Smooth) {
      const double t = std::tanh(k_ * yd);
      const double dbeta = -mu_ * normal_force() * k_ * (1.0 - t * t);
      fx(2, 2) = dydd_dF * dbeta;
      fx(3, 2) = dwd_dF * dbeta;
    } else if (mode_ == Friction::Aux) {
      faux(2, 0) = dydd_dF;
      faux(2, 1) = -dydd_dF;
      faux(3, 0) = dwd_dF;
      faux(3, 1) = -dwd_dF;
    }
  }

 private:
  double friction_force(double yd, const Vec& aux) const {
    switch (mode_) {
      case Friction::Aux: return aux(0) - aux(1);
      case Friction::Smooth: return -mu_ * normal_force() * std::tanh(k_ * yd);
      default: return 0.0;
    }
  }

  double mc_, mp_, l_, g_, mu_;
  Friction mode_;
  double k_;
};

// ---------------------------------------------------------------------------
// Planar rocket. State (y, z, phi, ydot, zdot, phidot); controls are body
// frame thrust (Fy lateral, Fz axial) applied at distance lr below the center
// of mass, plus a heavily penalized direct attitude torque channel.
//
// Rotation convention: world = R(phi) * body with R = [[c,-s],[s,c]], so the
// gimbal torque about the out-of-plane axis is lr*Fy.

class RocketNominal final : public DynamicsModel {
 public:
  RocketNominal(double mr, double jr, double lr, double g, Vec u_lo, Vec u_hi)
      : mr_(mr), jr_(jr), lr_(lr), g_(g), u_lo_(std::move(u_lo)), u_hi_(std::move(u_hi)) {}

  std::string name() const override { return "rocket_nominal"; }
  int state_dim() const override { return 6; }
  int control_dim() const override { return 3; }
  Vec control_lower() const override { return u_lo_; }
  Vec control_upper() const override { return u_hi_; }

  Vec ode(const Vec& x, const Vec& u, const Vec&) const override {
    const double c = std::cos(x(2)), s = std::sin(x(2));
    Vec xd(6);
    xd.head(3) = x.tail(3);
    xd(3) = (u(0) * c - u(1) * s) / mr_;
    xd(4) = (u(0) * s + u(1) * c) / mr_ - g_;
    xd(5) = (lr_ * u(0) + u(2)) / jr_;
    return xd;
  }

  void ode_jacobians(const Vec& x, const Vec& u, const Vec&, Mat& fx, Mat& fu,
                     Mat& faux) const override {
    const double c = std::cos(x(2)), s = std::sin(x(2));
    fx = Mat::Zero(6, 6);
    fu = Mat::Zero(6, 3);
    faux.resize(6, 0);
    fx.topRightCorner(3, 3).setIdentity();
    fx(3, 2) = (-u(0) * s - u(1) * c) / mr_;
    fx(4, 2) = (u(0) * c - u(1) * s) / mr_;
    fu(3, 0) = c / mr_;
    fu(3, 1) = -s / mr_;
    fu(4, 0) = s / mr_;
    fu(4, 1) = c / mr_;
    fu(5, 0) = lr_ / jr_;
    fu(5, 2) = 1.0 / jr_;
  }

 private:
  double mr_, jr_, lr_, g_;
  Vec u_lo_, u_hi_;
};

// Rocket with a fuel-slosh pendulum appended: state
// (y, z, phi, ydot, zdot, phidot, psi, psidot). The pendulum (mass mf,
// length lf) hangs from a pivot df below the center of mass; psi is the
// world-frame angle from straight down. Derived from the Lagrangian of the
// two-body system with generalized coordinates q = (y, z, phi, psi).

class RocketSlosh final : public DynamicsModel {
 public:
  RocketSlosh(double mr, double jr, double lr, double mf, double lf, double df,
              double g, Vec u_lo, Vec u_hi)
      : mr_(mr), jr_(jr), lr_(lr), mf_(mf), lf_(lf), df_(df), g_(g),
        u_lo_(std::move(u_lo)), u_hi_(std::move(u_hi)) {}

  std::string name() const override { return "rocket_slosh"; }
  int state_dim() const override { return 8; }
  int control_dim() const override { return 3; }
  Vec control_lower() const override { return u_lo_; }
  Vec control_upper() const override { return u_hi_; }

  Vec ode(const Vec& x, const Vec& u, const Vec&) const override {
    Eigen::Vector4d qdd = accel(x, u);
    Vec xd(8);
    xd(0) = x(3);
    xd(1) = x(4);
    xd(2) = x(5);
    xd(3) = qdd(0);
    xd(4) = qdd(1);
    xd(5) = qdd(2);
    xd(6) = x(7);
    xd(7) = qdd(3);
    return xd;
  }

  void ode_jacobians(const Vec& x, const Vec& u, const Vec&, Mat& fx, Mat& fu,
                     Mat& faux) const override {
    fx = Mat::Zero(8, 8);
    fu = Mat::Zero(8, 3);
    faux.resize(8, 0);
    fx(0, 3) = fx(1, 4) = fx(2, 5) = fx(6, 7) = 1.0;

    const double phi = x(2), psi = x(6), phid = x(5), psid = x(7);
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    const double cpsi = std::cos(psi), spsi = std::sin(psi);
    const double cd = std::cos(phi - psi), sd = std::sin(phi - psi);
    const double mt = mr_ + mf_, a = mf_ * df_, b = mf_ * lf_, k = mf_ * df_ * lf_;

    Eigen::Matrix4d M = mass_matrix(phi, psi);
    Eigen::Matrix4d Minv = M.inverse();
    Eigen::Vector4d qdd = Minv * rhs(x, u);

    // d(qdd)/dxi = Minv * (d(rhs)/dxi - dM/dxi * qdd)
    auto fill = [&](int col, const Eigen::Vector4d& drhs, const Eigen::Matrix4d& dM) {
      Eigen::Vector4d dq = Minv * (drhs - dM * qdd);
      fx(3, col) = dq(0);
      fx(4, col) = dq(1);
      fx(5, col) = dq(2);
      fx(7, col) = dq(3);
    };

    // phi column
    {
      Eigen::Matrix4d dM = Eigen::Matrix4d::Zero();
      dM(0, 2) = dM(2, 0) = -a * sphi;
      dM(1, 2) = dM(2, 1) = a * cphi;
      dM(2, 3) = dM(3, 2) = -k * sd;
      Eigen::Vector4d drhs;
      const double c = std::cos(phi), s = std::sin(phi);
      // force: d/dphi of world thrust; bias and gravity terms in phi
      drhs(0) = (-u(0) * s - u(1) * c) - (-a * cphi * phid * phid);
      drhs(1) = (u(0) * c - u(1) * s) - (-a * sphi * phid * phid);
      drhs(2) = -(k * cd * psid * psid) - mf_ * g_ * df_ * cphi;
      drhs(3) = -(-k * cd * phid * phid);
      fill(2, drhs, dM);
    }
    // psi column
    {
      Eigen::Matrix4d dM = Eigen::Matrix4d::Zero();
      dM(0, 3) = dM(3, 0) = -b * spsi;
      dM(1, 3) = dM(3, 1) = b * cpsi;
      dM(2, 3) = dM(3, 2) = k * sd;
      Eigen::Vector4d drhs;
      drhs(0) = -(-b * cpsi * psid * psid);
      drhs(1) = -(-b * spsi * psid * psid);
      drhs(2) = -(-k * cd * psid * psid);
      drhs(3) = -(k * cd * phid * phid) - mf_ * g_ * lf_ * cpsi;
      fill(6, drhs, dM);
    }
    // phidot column
    {
      Eigen::Vector4d drhs;
      drhs(0) = -(-2 * a * sphi * phid);
      drhs(1) = -(2 * a * cphi * phid);
      drhs(2) = 0.0;
      drhs(3) = -(-2 * k * sd * phid);
      fill(5, drhs, Eigen::Matrix4d::Zero());
    }
    // psidot column
    {
      Eigen::Vector4d drhs;
      drhs(0) = -(-2 * b * spsi * psid);
      drhs(1) = -(2 * b * cpsi * psid);
      drhs(2) = -(2 * k * sd * psid);
      drhs(3) = 0.0;
      fill(7, drhs, Eigen::Matrix4d::Zero());
    }
    // controls
    {
      const double c = std::cos(phi), s = std::sin(phi);
      Eigen::Matrix<double, 4, 3> dQ;
      dQ << c, -s, 0,
            s, c, 0,
            lr_, 0, 1,
            0, 0, 0;
      Eigen::Matrix<double, 4, 3> dq = Minv * dQ;
      fu(3, 0) = dq(0, 0); fu(3, 1) = dq(0, 1); fu(3, 2) = dq(0, 2);
      fu(4, 0) = dq(1, 0); fu(4, 1) = dq(1, 1); fu(4, 2) = dq(1, 2);
      fu(5, 0) = dq(2, 0); fu(5, 1) = dq(2, 1); fu(5, 2) = dq(2, 2);
      fu(7, 0) = dq(3, 0); fu(7, 1) = dq(3, 1); fu(7, 2) = dq(3, 2);
    }
    (void)mt; (void)spsi;
  }

 private:
  Eigen::Matrix4d mass_matrix(double phi, double psi) const {
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    const double cpsi = std::cos(psi), spsi = std::sin(psi);
    const double cd = std::cos(phi - psi);
    const double mt = mr_ + mf_, a = mf_ * df_, b = mf_ * lf_, k = mf_ * df_ * lf_;
    Eigen::Matrix4d M;
    M << mt, 0, a * cphi, b * cpsi,
         0, mt, a * sphi, b * spsi,
         a * cphi, a * sphi, jr_ + mf_ * df_ * df_, k * cd,
         b * cpsi, b * spsi, k * cd, mf_ * lf_ * lf_;
    return M;
  }

  // rhs = Q - bias - gravity
  Eigen::Vector4d rhs(const Vec& x, const Vec& u) const {
    const double phi = x(2), psi = x(6), phid = x(5), psid = x(7);
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    const double cpsi = std::cos(psi), spsi = std::sin(psi);
    const double sd = std::sin(phi - psi);
    const double mt = mr_ + mf_, a = mf_ * df_, b = mf_ * lf_, k = mf_ * df_ * lf_;

    Eigen::Vector4d bias;
    bias << -a * sphi * phid * phid - b * spsi * psid * psid,
            a * cphi * phid * phid + b * cpsi * psid * psid,
            k * sd * psid * psid,
            -k * sd * phid * phid;
    Eigen::Vector4d grav(0, mt * g_, mf_ * g_ * df_ * sphi, mf_ * g_ * lf_ * spsi);
    Eigen::Vector4d Q(u(0) * cphi - u(1) * sphi, u(0) * sphi + u(1) * cphi,
                      lr_ * u(0) + u(2), 0);
    return Q - bias - grav;
  }

  Eigen::Vector4d accel(const Vec& x, const Vec& u) const {
    return mass_matrix(x(2), x(6)).inverse() * rhs(x, u);
  }

  double mr_, jr_, lr_, mf_, lf_, df_, g_;
  Vec u_lo_, u_hi_;
};

// ---------------------------------------------------------------------------
// Quadrotor with four rotor thrusts. State is (position, ZYX Euler angles
// (roll, pitch, yaw), world velocity, body rates). Rotors 1..4 sit on the
// +x, +y, -x, -y arms; yaw torque comes from motor drag. A broken rotor is
// the same dynamics with that thrust's upper bound halved.

class Quadrotor final : public DynamicsModel {
 public:
  Quadrotor(double mass, Vec inertia, double arm, double gamma, double g,
            Vec u_max, int broken)
      : m_(mass), J_(std::move(inertia)), L_(arm), gamma_(gamma), g_(g),
        u_max_(std::move(u_max)), broken_(broken) {
    if (broken_ >= 0) u_max_(broken_) *= 0.5;
  }

  std::string name() const override {
    return broken_ >= 0 ? "quadrotor_broken_" + std::to_string(broken_ + 1)
                        : "quadrotor";
  }
  int state_dim() const override { return 12; }
  int control_dim() const override { return 4; }
  Vec control_lower() const override { return Vec::Zero(4); }
  Vec control_upper() const override { return u_max_; }

  Vec ode(const Vec& x, const Vec& u, const Vec&) const override {
    const double cphi = std::cos(x(3)), sphi = std::sin(x(3));
    const double cth = std::cos(x(4)), sth = std::sin(x(4));
    const double cpsi = std::cos(x(5)), spsi = std::sin(x(5));
    const double tth = sth / cth;
    const double p = x(9), q = x(10), r = x(11);
    const double F = u.sum();

    Vec xd(12);
    xd.head(3) = x.segment(6, 3);
    xd(3) = p + (q * sphi + r * cphi) * tth;
    xd(4) = q * cphi - r * sphi;
    xd(5) = (q * sphi + r * cphi) / cth;
    xd(6) = (F / m_) * (cpsi * sth * cphi + spsi * sphi);
    xd(7) = (F / m_) * (spsi * sth * cphi - cpsi * sphi);
    xd(8) = (F / m_) * (cth * cphi) - g_;
    const double tx = L_ * (u(1) - u(3));
    const double ty = L_ * (u(2) - u(0));
    const double tz = gamma_ * (u(0) - u(1) + u(2) - u(3));
    xd(9) = (tx - (J_(2) - J_(1)) * q * r) / J_(0);
    xd(10) = (ty - (J_(0) - J_(2)) * r * p) / J_(1);
    xd(11) = (tz - (J_(1) - J_(0)) * p * q) / J_(2);
    return xd;
  }

  void ode_jacobians(const Vec& x, const Vec& u, const Vec&, Mat& fx, Mat& fu,
                     Mat& faux) const override {
    fx = Mat::Zero(12, 12);
    fu = Mat::Zero(12, 4);
    faux.resize(12, 0);
    const double cphi = std::cos(x(3)), sphi = std::sin(x(3));
    const double cth = std::cos(x(4)), sth = std::sin(x(4));
    const double cpsi = std::cos(x(5)), spsi = std::sin(x(5));
    const double tth = sth / cth;
    const double p = x(9), q = x(10), r = x(11);
    const double F = u.sum();

    fx.block(0, 6, 3, 3).setIdentity();

    // Euler kinematics
    fx(3, 3) = (q * cphi - r * sphi) * tth;
    fx(3, 4) = (q * sphi + r * cphi) / (cth * cth);
    fx(3, 9) = 1.0;
    fx(3, 10) = sphi * tth;
    fx(3, 11) = cphi * tth;
    fx(4, 3) = -q * sphi - r * cphi;
    fx(4, 10) = cphi;
    fx(4, 11) = -sphi;
    fx(5, 3) = (q * cphi - r * sphi) / cth;
    fx(5, 4) = (q * sphi + r * cphi) * tth / cth;
    fx(5, 10) = sphi / cth;
    fx(5, 11) = cphi / cth;

    // thrust direction column of R and its angle derivatives
    Eigen::Vector3d e3(cpsi * sth * cphi + spsi * sphi,
                       spsi * sth * cphi - cpsi * sphi,
                       cth * cphi);
    Eigen::Vector3d de3_phi(-cpsi * sth * sphi + spsi * cphi,
                            -spsi * sth * sphi - cpsi * cphi,
                            -cth * sphi);
    Eigen::Vector3d de3_th(cpsi * cth * cphi, spsi * cth * cphi, -sth * cphi);
    Eigen::Vector3d de3_psi(-spsi * sth * cphi + cpsi * sphi,
                            cpsi * sth * cphi + spsi * sphi, 0.0);
    fx.block(6, 3, 3, 1) = (F / m_) * de3_phi;
    fx.block(6, 4, 3, 1) = (F / m_) * de3_th;
    fx.block(6, 5, 3, 1) = (F / m_) * de3_psi;
    for (int i = 0; i < 4; ++i) fu.block(6, i, 3, 1) = e3 / m_;

    // body-rate dynamics
    fx(9, 10) = -(J_(2) - J_(1)) * r / J_(0);
    fx(9, 11) = -(J_(2) - J_(1)) * q / J_(0);
    fx(10, 9) = -(J_(0) - J_(2)) * r / J_(1);
    fx(10, 11) = -(J_(0) - J_(2)) * p / J_(1);
    fx(11, 9) = -(J_(1) - J_(0)) * q / J_(2);
    fx(11, 10) = -(J_(1) - J_(0)) * p / J_(2);

    fu(9, 1) = L_ / J_(0);
    fu(9, 3) = -L_ / J_(0);
    fu(10, 0) = -L_ / J_(1);
    fu(10, 2) = L_ / J_(1);
    fu(11, 0) = gamma_ / J_(2);
    fu(11, 1) = -gamma_ / J_(2);
    fu(11, 2) = gamma_ / J_(2);
    fu(11, 3) = -gamma_ / J_(2);
  }

 private:
  double m_;
  Vec J_;
  double L_, gamma_, g_;
  Vec u_max_;
  int broken_;
};

// ---------------------------------------------------------------------------

class LinearDiscrete final : public DynamicsModel {
 public:
  LinearDiscrete(Mat A, Mat B) : A_(std::move(A)), B_(std::move(B)) {}
  std::string name() const override { return "linear_discrete"; }
  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }
  bool is_discrete() const override { return true; }
  Vec step(const Vec& x, const Vec& u) const override { return A_ * x + B_ * u; }
  void step_jacobians(const Vec&, const Vec&, Mat& A, Mat& B) const override {
    A = A_;
    B = B_;
  }

 private:
  Mat A_, B_;
};

// ---------------------------------------------------------------------------
// Factories

ModelPtr make_double_integrator() { return std::make_shared<DoubleIntegrator>(); }
ModelPtr make_unicycle() { return std::make_shared<Unicycle>(); }

ModelPtr make_cartpole(double mc, double mp, double len, double gravity) {
  return std::make_shared<Cartpole>(mc, mp, len, gravity, 0.0,
                                    Cartpole::Friction::None, 0.0);
}

ModelPtr make_cartpole_friction(double mc, double mp, double len, double gravity,
                                double mu, const std::string& friction_mode,
                                double smooth_scale) {
  Cartpole::Friction mode;
  if (friction_mode == "aux") mode = Cartpole::Friction::Aux;
  else if (friction_mode == "smooth") mode = Cartpole::Friction::Smooth;
  else if (friction_mode == "none") mode = Cartpole::Friction::None;
  else throw ConfigError("unknown cartpole friction mode: " + friction_mode);
  return std::make_shared<Cartpole>(mc, mp, len, gravity, mu, mode, smooth_scale);
}

ModelPtr make_rocket_nominal(double mr, double jr, double lr, double gravity,
                             const Vec& u_lo, const Vec& u_hi) {
  return std::make_shared<RocketNominal>(mr, jr, lr, gravity, u_lo, u_hi);
}

ModelPtr make_rocket_slosh(double mr, double jr, double lr, double mf, double lf,
                           double df, double gravity, const Vec& u_lo,
                           const Vec& u_hi) {
  return std::make_shared<RocketSlosh>(mr, jr, lr, mf, lf, df, gravity, u_lo, u_hi);
}

ModelPtr make_quadrotor(double mass, const Vec& inertia_diag, double arm,
                        double torque_coeff, double gravity, const Vec& u_max,
                        int broken_rotor) {
  return std::make_shared<Quadrotor>(mass, inertia_diag, arm, torque_coeff, gravity,
                                     u_max, broken_rotor);
}

ModelPtr make_linear_discrete(const Mat& A, const Mat& B) {
  return std::make_shared<LinearDiscrete>(A, B);
}

namespace {

Vec json_vec(const nlohmann::json& node) {
  Vec v(node.size());
  for (size_t i = 0; i < node.size(); ++i) v(i) = node[i].get<double>();
  return v;
}

Mat json_mat(const nlohmann::json& node) {
  const size_t rows = node.size();
  const size_t cols = node.at(0).size();
  Mat m(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t j = 0; j < cols; ++j) m(i, j) = node[i][j].get<double>();
  return m;
}

}  // namespace

ModelPtr make_model(const nlohmann::json& node) {
  const std::string type = node.at("type").get<std::string>();
  const nlohmann::json p = node.value("params", nlohmann::json::object());

  if (type == "double_integrator") return make_double_integrator();
  if (type == "unicycle") return make_unicycle();
  if (type == "cartpole" || type == "cartpole_friction") {
    const double mc = p.value("cart_mass", 1.0);
    const double mp = p.value("pole_mass", 0.2);
    const double len = p.value("pole_length", 0.5);
    const double g = p.value("gravity", 9.81);
    if (type == "cartpole") return make_cartpole(mc, mp, len, g);
    return make_cartpole_friction(mc, mp, len, g, p.value("mu", 0.1),
                                  p.value("mode", std::string("aux")),
                                  p.value("smooth_scale", 100.0));
  }
  if (type == "rocket_nominal" || type == "rocket_slosh") {
    const double mr = p.value("mass", 1.0);
    const double jr = p.value("inertia", 0.1);
    const double lr = p.value("thruster_offset", 0.5);
    const double g = p.value("gravity", 9.81);
    Vec lo = p.contains("u_lower") ? json_vec(p.at("u_lower"))
                                   : Vec::Constant(3, -kInf);
    Vec hi = p.contains("u_upper") ? json_vec(p.at("u_upper"))
                                   : Vec::Constant(3, kInf);
    if (type == "rocket_nominal") return make_rocket_nominal(mr, jr, lr, g, lo, hi);
    return make_rocket_slosh(mr, jr, lr, p.value("fuel_mass", 0.1),
                             p.value("pendulum_length", 0.2),
                             p.value("pivot_offset", 0.05), g, lo, hi);
  }
  if (type == "quadrotor") {
    const double mass = p.value("mass", 1.0);
    Vec inertia = p.contains("inertia") ? json_vec(p.at("inertia"))
                                        : (Vec(3) << 0.01, 0.01, 0.02).finished();
    const double arm = p.value("arm_length", 0.175);
    const double gamma = p.value("torque_coeff", 0.1);
    const double g = p.value("gravity", 9.81);
    Vec u_max = p.contains("u_max") ? json_vec(p.at("u_max")) : Vec::Constant(4, 7.5);
    return make_quadrotor(mass, inertia, arm, gamma, g, u_max,
                          p.value("broken_rotor", 0) - 1);
  }
  if (type == "linear_discrete") {
    return make_linear_discrete(json_mat(p.at("A")), json_mat(p.at("B")));
  }
  throw ConfigError("unknown model type: " + type);
}

}  // namespace dpo
