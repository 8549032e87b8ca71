#pragma once

#include <Eigen/Core>
#include <vector>

#include "oved/functional.hpp"
#include "oved/rng.hpp"

namespace oved::projectile {

// Control parameters x = (m, ell, u0, v0): mass [kg], diameter [m],
// initial altitude [m], initial upward speed [m/s].
struct Control {
  double m;
  double ell;
  double u0;
  double v0;

  static Control from_vector(const Eigen::VectorXd& x);
  Eigen::VectorXd to_vector() const;
};

// Model parameters theta = (g, mu): gravitational acceleration [m/s^2] and
// log-viscosity (viscosity = exp(mu) Pa s).
struct Theta {
  double g;
  double mu;

  static Theta from_vector(const Eigen::VectorXd& t);
  Eigen::VectorXd to_vector() const;
};

// Fixed constants of the truth surrogate (and of the Reynolds number).
struct FineModelConstants {
  double g = 9.81;
  double visc = 1.8e-5;
  double rho = 1.2;
};

// Closed-form solution of the linear-drag launch problem:
//   u(t) = u0 + v0 t P(s) + g t^2 Q(s),   s = t / tau,  tau = m / (3 pi e^mu ell),
// with P(s) = (1 - e^-s)/s and Q(s) = (1 - s - e^-s)/s^2 evaluated in
// cancellation-safe form (series below s = 0.1). The drag-free limit
// u0 + v0 t - g t^2 / 2 is exact as s -> 0.
double altitude(const Control& x, const Theta& th, double t);
double velocity(const Control& x, const Theta& th, double t);
double acceleration(const Control& x, const Theta& th, double t);

// Apex time t* = tau ln(1 + chi), chi = 3 pi e^mu ell v0 / (m g).
double time_of_max(const Control& x, const Theta& th);

// Maximum altitude q = u0 + g tau^2 (chi - log1p(chi)); the bracket switches
// to its series chi^2/2 - chi^3/3 + ... for small chi where the direct
// difference cancels.
double qoi_max_altitude(const Control& x, const Theta& th);

// Analytic gradients with respect to (m, ell, u0, v0, g, mu).
Eigen::Matrix<double, 6, 1> grad_qoi(const Control& x, const Theta& th);
Eigen::Matrix<double, 6, 1> grad_altitude(const Control& x, const Theta& th, double t);
Eigen::Matrix<double, 6, 1> grad_acceleration(const Control& x, const Theta& th, double t);

// Re(t) = rho ell |u'(t)| / visc with the linear-model velocity.
double reynolds(const Control& x, const Theta& th, double t, double rho = 1.2);

// Nonlinear-drag truth surrogate: RK4 integration of
//   m u'' + (rho pi ell^2 c_D(Re) / 8) u' |u'| = -m g
// with the laminar drag-coefficient correlation. Fixed step with a
// step-halving consistency check (relative change < 1e-6 required).
struct FineTrajectory {
  std::vector<double> t;
  std::vector<double> u;
  std::vector<double> v;
  double max_reynolds = 0.0;
  bool laminar = true;  // max Re stayed below 2e5
};

double drag_coefficient(double reynolds_number);

FineTrajectory fine_trajectory(const Control& x, const std::vector<double>& t_grid,
                               const FineModelConstants& c = {}, int steps_per_unit_time = 2000);

// Fine-model altitude at a single time.
double fine_altitude(const Control& x, double t, const FineModelConstants& c = {});

// Pseudo-experimental draws Y_exp = u_fine(x, t) * N(1, noise_rel^2).
std::vector<double> synthetic_observations(const Control& x, double t, int n, const RngSpec& rng,
                                           double noise_rel = 0.05,
                                           const FineModelConstants& c = {});

// Functionals over (x, theta) with coordinates (m, ell, u0, v0, g, mu).
FunctionalPtr qoi_functional();                   // max altitude, z-free
FunctionalPtr altitude_functional();              // u(t), z = t
FunctionalPtr acceleration_functional();          // u''(t), z = t

}  // namespace oved::projectile
