#include "oved/projectile.hpp"

#include <cmath>

namespace oved::projectile {

namespace {

// Kernel functions of the closed-form solution, with series branches below
// s = 0.1 where the direct expressions cancel:
//   P(s) = (1 - e^-s) / s
//   Q(s) = (1 - s - e^-s) / s^2
//   P'(s), Q'(s) their derivatives.
double kernel_p(double s) {
  if (s == 0.0) return 1.0;
  return -std::expm1(-s) / s;
}

double kernel_q(double s) {
  if (std::abs(s) < 0.1) {
    return -1.0 / 2 + s * (1.0 / 6 + s * (-1.0 / 24 + s * (1.0 / 120 + s * (-1.0 / 720 +
           s * (1.0 / 5040 + s * (-1.0 / 40320 + s * (1.0 / 362880)))))));
  }
  return (-std::expm1(-s) - s) / (s * s);
}

double kernel_dp(double s) {
  if (std::abs(s) < 0.1) {
    return -1.0 / 2 + s * (1.0 / 3 + s * (-1.0 / 8 + s * (1.0 / 30 + s * (-1.0 / 144 +
           s * (1.0 / 840 + s * (-1.0 / 5760 + s * (1.0 / 45360)))))));
  }
  return (std::exp(-s) * (1.0 + s) - 1.0) / (s * s);
}

double kernel_dq(double s) {
  if (std::abs(s) < 0.1) {
    return 1.0 / 6 + s * (-1.0 / 12 + s * (1.0 / 40 + s * (-1.0 / 180 + s * (1.0 / 1008 +
           s * (-1.0 / 6720 + s * (1.0 / 51840))))));
  }
  return (std::exp(-s) * (s + 2.0) + s - 2.0) / (s * s * s);
}

// chi - log1p(chi); series below 1e-4 per the compensated Eq.-(25) scheme.
double chi_minus_log1p(double chi) {
  if (std::abs(chi) < 1e-4) {
    return chi * chi * (1.0 / 2 + chi * (-1.0 / 3 + chi * (1.0 / 4)));
  }
  return chi - std::log1p(chi);
}

// 2 f(chi) - chi^2/(1+chi), the bracket of the m/ell/mu partials.
double bracket_a(double chi) {
  if (std::abs(chi) < 1e-3) {
    return chi * chi * chi *
           (1.0 / 3 + chi * (-1.0 / 2 + chi * (3.0 / 5 + chi * (-2.0 / 3))));
  }
  return 2.0 * chi_minus_log1p(chi) - chi * chi / (1.0 + chi);
}

// f(chi) - chi^2/(1+chi), the bracket of the g partial.
double bracket_b(double chi) {
  if (std::abs(chi) < 1e-3) {
    return chi * chi * (-1.0 / 2 + chi * (2.0 / 3 + chi * (-3.0 / 4 + chi * (4.0 / 5))));
  }
  return chi_minus_log1p(chi) - chi * chi / (1.0 + chi);
}

struct DerivedParams {
  double b;    // 3 pi e^mu ell
  double tau;  // m / b
  double chi;  // b v0 / (m g) = v0 / (g tau)
};

DerivedParams derived(const Control& x, const Theta& th) {
  const double b = 3.0 * M_PI * std::exp(th.mu) * x.ell;
  const double tau = x.m / b;
  return DerivedParams{b, tau, x.v0 / (th.g * tau)};
}

}  // namespace

Control Control::from_vector(const Eigen::VectorXd& x) {
  require(x.size() == 4, "projectile control must have 4 components (m, ell, u0, v0)");
  Control c{x[0], x[1], x[2], x[3]};
  require(c.m > 0.0 && c.ell > 0.0 && c.v0 > 0.0,
          "projectile control requires m > 0, ell > 0, v0 > 0");
  require(x.allFinite(), "projectile control must be finite");
  return c;
}

Eigen::VectorXd Control::to_vector() const {
  Eigen::VectorXd v(4);
  v << m, ell, u0, v0;
  return v;
}

Theta Theta::from_vector(const Eigen::VectorXd& t) {
  require(t.size() == 2, "projectile theta must have 2 components (g, mu)");
  Theta th{t[0], t[1]};
  require(th.g > 0.0, "projectile theta requires g > 0");
  require(t.allFinite(), "projectile theta must be finite");
  return th;
}

Eigen::VectorXd Theta::to_vector() const {
  Eigen::VectorXd v(2);
  v << g, mu;
  return v;
}

double altitude(const Control& x, const Theta& th, double t) {
  require(t >= 0.0, "altitude: t must be >= 0");
  const auto d = derived(x, th);
  const double s = t / d.tau;
  return x.u0 + x.v0 * t * kernel_p(s) + th.g * t * t * kernel_q(s);
}

double velocity(const Control& x, const Theta& th, double t) {
  require(t >= 0.0, "velocity: t must be >= 0");
  const auto d = derived(x, th);
  const double s = t / d.tau;
  return x.v0 * std::exp(-s) - th.g * t * kernel_p(s);
}

double acceleration(const Control& x, const Theta& th, double t) {
  require(t >= 0.0, "acceleration: t must be >= 0");
  const auto d = derived(x, th);
  const double s = t / d.tau;
  return -(x.v0 / d.tau + th.g) * std::exp(-s);
}

double time_of_max(const Control& x, const Theta& th) {
  const auto d = derived(x, th);
  return d.tau * std::log1p(d.chi);
}

double qoi_max_altitude(const Control& x, const Theta& th) {
  const auto d = derived(x, th);
  return x.u0 + th.g * d.tau * d.tau * chi_minus_log1p(d.chi);
}

Eigen::Matrix<double, 6, 1> grad_qoi(const Control& x, const Theta& th) {
  const auto d = derived(x, th);
  const double c = th.g * d.tau * d.tau;  // m^2 g / b^2
  const double a = bracket_a(d.chi);
  const double b = bracket_b(d.chi);
  Eigen::Matrix<double, 6, 1> g;
  g[0] = c / x.m * a;                         // d/dm
  g[1] = -c / x.ell * a;                      // d/dell
  g[2] = 1.0;                                 // d/du0
  g[3] = d.tau * d.chi / (1.0 + d.chi);       // d/dv0
  g[4] = d.tau * d.tau * b;                   // d/dg
  g[5] = -c * a;                              // d/dmu
  return g;
}

Eigen::Matrix<double, 6, 1> grad_altitude(const Control& x, const Theta& th, double t) {
  require(t >= 0.0, "grad_altitude: t must be >= 0");
  const auto d = derived(x, th);
  const double s = t / d.tau;
  // Sensitivity w.r.t. s, chained into (m, ell, mu) through tau.
  const double w = x.v0 * t * kernel_dp(s) + th.g * t * t * kernel_dq(s);
  Eigen::Matrix<double, 6, 1> g;
  g[0] = -s / x.m * w;
  g[1] = s / x.ell * w;
  g[2] = 1.0;
  g[3] = t * kernel_p(s);
  g[4] = t * t * kernel_q(s);
  g[5] = s * w;
  return g;
}

Eigen::Matrix<double, 6, 1> grad_acceleration(const Control& x, const Theta& th, double t) {
  require(t >= 0.0, "grad_acceleration: t must be >= 0");
  const auto d = derived(x, th);
  const double s = t / d.tau;
  const double e = std::exp(-s);
  const double dtau = e / d.tau * (x.v0 / d.tau - t / d.tau * (x.v0 / d.tau + th.g));
  Eigen::Matrix<double, 6, 1> g;
  g[0] = dtau * d.tau / x.m;
  g[1] = -dtau * d.tau / x.ell;
  g[2] = 0.0;
  g[3] = -e / d.tau;
  g[4] = -e;
  g[5] = -dtau * d.tau;
  return g;
}

double reynolds(const Control& x, const Theta& th, double t, double rho) {
  return rho * x.ell * std::abs(velocity(x, th, t)) / std::exp(th.mu);
}

double drag_coefficient(double re) {
  require(re > 0.0, "drag_coefficient: Re must be > 0");
  return 24.0 / re * (1.0 + 0.15 * std::pow(re, 0.681)) + 0.407 / (1.0 + 8710.0 / re);
}

namespace {

// Drag acceleration (with sign) of the nonlinear model, written so the
// Re -> 0 limit reduces exactly to the linear model's 3 pi visc ell v / m.
double fine_drag_accel(double v, const Control& x, const FineModelConstants& c) {
  const double re = c.rho * x.ell * std::abs(v) / c.visc;
  const double stokes = 24.0 * c.visc / (c.rho * x.ell) * v * (1.0 + 0.15 * std::pow(re, 0.681));
  const double newton = 0.407 * v * std::abs(v) * re / (re + 8710.0);
  return c.rho * M_PI * x.ell * x.ell / (8.0 * x.m) * (stokes + newton);
}

struct FineState {
  double u, v;
};

FineState fine_rhs(const FineState& y, const Control& x, const FineModelConstants& c) {
  return FineState{y.v, -c.g - fine_drag_accel(y.v, x, c)};
}

// RK4 over the grid with ceil((t1-t0)*spu) substeps per interval.
std::vector<FineState> integrate(const Control& x, const std::vector<double>& t_grid,
                                 const FineModelConstants& c, int spu, double* max_re) {
  std::vector<FineState> out;
  out.reserve(t_grid.size());
  FineState y{x.u0, x.v0};
  double t = 0.0;
  *max_re = c.rho * x.ell * std::abs(x.v0) / c.visc;
  for (double tg : t_grid) {
    require(tg >= t, "fine_trajectory: time grid must be sorted and nonnegative");
    const double span = tg - t;
    const int nsub = span > 0.0 ? static_cast<int>(std::ceil(span * spu)) : 0;
    const double h = nsub > 0 ? span / nsub : 0.0;
    for (int k = 0; k < nsub; ++k) {
      const FineState k1 = fine_rhs(y, x, c);
      const FineState k2 = fine_rhs({y.u + 0.5 * h * k1.u, y.v + 0.5 * h * k1.v}, x, c);
      const FineState k3 = fine_rhs({y.u + 0.5 * h * k2.u, y.v + 0.5 * h * k2.v}, x, c);
      const FineState k4 = fine_rhs({y.u + h * k3.u, y.v + h * k3.v}, x, c);
      y.u += h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
      y.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
      const double re = c.rho * x.ell * std::abs(y.v) / c.visc;
      if (re > *max_re) *max_re = re;
    }
    t = tg;
    out.push_back(y);
  }
  return out;
}

}  // namespace

FineTrajectory fine_trajectory(const Control& x, const std::vector<double>& t_grid,
                               const FineModelConstants& c, int steps_per_unit_time) {
  require(!t_grid.empty(), "fine_trajectory: empty time grid");
  require(steps_per_unit_time >= 1, "fine_trajectory: steps_per_unit_time must be >= 1");

  double re_full = 0.0, re_half = 0.0;
  const auto full = integrate(x, t_grid, c, steps_per_unit_time, &re_full);
  const auto half = integrate(x, t_grid, c, 2 * steps_per_unit_time, &re_half);

  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double scale = std::max({1.0, std::abs(full[i].u), std::abs(half[i].u)});
    require_numeric(std::abs(full[i].u - half[i].u) < 1e-6 * scale,
                    "fine_trajectory: step-halving check failed; use a smaller step "
                    "(more steps_per_unit_time)");
  }

  FineTrajectory traj;
  traj.t = t_grid;
  traj.u.reserve(t_grid.size());
  traj.v.reserve(t_grid.size());
  for (const auto& s : half) {
    traj.u.push_back(s.u);
    traj.v.push_back(s.v);
  }
  traj.max_reynolds = re_half;
  traj.laminar = re_half < 2e5;
  return traj;
}

double fine_altitude(const Control& x, double t, const FineModelConstants& c) {
  return fine_trajectory(x, {t}, c).u.back();
}

std::vector<double> synthetic_observations(const Control& x, double t, int n, const RngSpec& rng,
                                           double noise_rel, const FineModelConstants& c) {
  require(n >= 1, "synthetic_observations: n must be >= 1");
  require(noise_rel >= 0.0, "synthetic_observations: noise level must be >= 0");
  const double base = fine_altitude(x, t, c);
  RngStream stream(rng);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& y : out) y = base * (1.0 + noise_rel * stream.normal());
  return out;
}

namespace {

const std::vector<std::string> kLabels = {"m", "ell", "u0", "v0", "g", "mu"};

class QoiFunctional final : public ModelFunctional {
 public:
  QoiFunctional() : ModelFunctional("max_altitude", FunctionalKind::qoi, 4, 2, 0, kLabels) {}
  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
               const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return qoi_max_altitude(Control::from_vector(x), Theta::from_vector(th));
  }
  Eigen::VectorXd grad_xtheta(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
                              const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return grad_qoi(Control::from_vector(x), Theta::from_vector(th));
  }
  GradientMethod gradient_method() const override { return GradientMethod::analytic; }
};

class AltitudeFunctional final : public ModelFunctional {
 public:
  AltitudeFunctional() : ModelFunctional("altitude", FunctionalKind::observable, 4, 2, 1, kLabels) {}
  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
               const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return altitude(Control::from_vector(x), Theta::from_vector(th), z[0]);
  }
  Eigen::VectorXd grad_xtheta(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
                              const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return grad_altitude(Control::from_vector(x), Theta::from_vector(th), z[0]);
  }
  GradientMethod gradient_method() const override { return GradientMethod::analytic; }
};

class AccelerationFunctional final : public ModelFunctional {
 public:
  AccelerationFunctional()
      : ModelFunctional("acceleration", FunctionalKind::observable, 4, 2, 1, kLabels) {}
  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
               const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return acceleration(Control::from_vector(x), Theta::from_vector(th), z[0]);
  }
  Eigen::VectorXd grad_xtheta(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
                              const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return grad_acceleration(Control::from_vector(x), Theta::from_vector(th), z[0]);
  }
  GradientMethod gradient_method() const override { return GradientMethod::analytic; }
};

}  // namespace

FunctionalPtr qoi_functional() { return std::make_shared<QoiFunctional>(); }
FunctionalPtr altitude_functional() { return std::make_shared<AltitudeFunctional>(); }
FunctionalPtr acceleration_functional() { return std::make_shared<AccelerationFunctional>(); }

}  // namespace oved::projectile
