#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oved/projectile.hpp"
#include "oved/rng.hpp"
#include "test_util.hpp"

using namespace oved;
using namespace oved::projectile;
using testutil::rel_err;

namespace {

const double kMuBar = -5.0 * std::log(10.0);
const Control kXPred{0.05, 0.01, 1.0, 100.0};
const Control kXValTent{2.5, 0.05, 1.0, 20.0};
const Theta kThetaBar{9.81, kMuBar};
const Theta kThetaFine{9.81, std::log(1.8e-5)};

// Test-only RK4 integrator of the linear-drag ODE, the independent oracle
// for the closed-form solution.
double rk4_linear_altitude(const Control& x, const Theta& th, double t_end, double h) {
  const double b = 3.0 * M_PI * std::exp(th.mu) * x.ell;
  double u = x.u0, v = x.v0, t = 0.0;
  const auto acc = [&](double vel) { return -th.g - b * vel / x.m; };
  const auto n = static_cast<long>(std::ceil(t_end / h));
  const double step = t_end / static_cast<double>(n);
  for (long i = 0; i < n; ++i) {
    const double k1u = v, k1v = acc(v);
    const double k2u = v + 0.5 * step * k1v, k2v = acc(v + 0.5 * step * k1v);
    const double k3u = v + 0.5 * step * k2v, k3v = acc(v + 0.5 * step * k2v);
    const double k4u = v + step * k3v, k4v = acc(v + step * k3v);
    u += step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    t += step;
  }
  return u;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& p, double rel_step = 1e-6) {
  Eigen::VectorXd g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double h = std::max(rel_step, rel_step * std::abs(p[i]));
    Eigen::VectorXd pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    g[i] = (f(pp) - f(pm)) / (2.0 * h);
  }
  return g;
}

Eigen::VectorXd pack(const Control& x, const Theta& th) {
  Eigen::VectorXd p(6);
  p << x.m, x.ell, x.u0, x.v0, th.g, th.mu;
  return p;
}

Control unpack_x(const Eigen::VectorXd& p) { return Control{p[0], p[1], p[2], p[3]}; }
Theta unpack_th(const Eigen::VectorXd& p) { return Theta{p[4], p[5]}; }

}  // namespace

TEST_CASE("altitude initial condition and drag-free limit") {
  CHECK(altitude(kXPred, kThetaBar, 0.0) == kXPred.u0);

  const Theta nodrape{9.81, -40.0};
  for (double t : {0.5, 1.0, 5.0, 10.0}) {
    const double ballistic = kXPred.u0 + kXPred.v0 * t - 0.5 * 9.81 * t * t;
    CHECK(rel_err(altitude(kXPred, nodrape, t), ballistic) < 1e-6);
  }
}

TEST_CASE("altitude matches an RK4 oracle of the linear ODE") {
  const double closed = altitude(kXPred, kThetaBar, 1.0);
  const double rk4 = rk4_linear_altitude(kXPred, kThetaBar, 1.0, 1e-5);
  CHECK(rel_err(closed, rk4) < 1e-8);

  // and at a strong-drag configuration
  const Control heavy_drag{0.001, 0.1, 0.0, 5.0};
  const Theta th{9.81, std::log(1e-2)};
  CHECK(rel_err(altitude(heavy_drag, th, 0.3), rk4_linear_altitude(heavy_drag, th, 0.3, 1e-6)) <
        1e-8);
}

TEST_CASE("altitude is C1: finite differences match the analytic velocity") {
  RngStream s(RngSpec{101, 0});
  for (int rep = 0; rep < 100; ++rep) {
    const Control x{s.uniform(0.01, 5.0), s.uniform(0.005, 0.1), s.uniform(0.0, 2.0),
                    s.uniform(10.0, 120.0)};
    const Theta th{s.uniform(9.7, 9.9), s.uniform(-14.0, -9.0)};
    const double t = s.uniform(0.1, 10.0);
    const double h = 1e-6 * std::max(1.0, t);
    const double fd = (altitude(x, th, t + h) - altitude(x, th, t - h)) / (2.0 * h);
    CHECK(rel_err(fd, velocity(x, th, t)) < 1e-6);
  }
}

TEST_CASE("acceleration closed form") {
  // u''(0) = -g - 3 pi e^mu ell v0 / m
  const double b = 3.0 * M_PI * std::exp(kThetaBar.mu) * kXPred.ell;
  CHECK(rel_err(acceleration(kXPred, kThetaBar, 0.0), -9.81 - b * kXPred.v0 / kXPred.m) < 1e-12);

  // terminal regime: |u''(10 tau)| < 1e-3 g
  const double tau = kXPred.m / b;
  CHECK(std::abs(acceleration(kXPred, kThetaBar, 10.0 * tau)) < 1e-3 * 9.81);

  // negligible-drag scenario: u''(0) ~ -g
  CHECK(rel_err(acceleration(kXValTent, kThetaFine, 0.0), -9.81) < 1e-3);

  // consistency with a second difference of the altitude
  const double t = 1.7, h = 1e-4;
  const double fd2 = (altitude(kXPred, kThetaBar, t + h) - 2.0 * altitude(kXPred, kThetaBar, t) +
                      altitude(kXPred, kThetaBar, t - h)) /
                     (h * h);
  CHECK(rel_err(fd2, acceleration(kXPred, kThetaBar, t)) < 1e-5);
}

TEST_CASE("qoi closed form, frozen oracles") {
  // drag-free limit at mu = -40
  const double dragfree = 1.0 + 100.0 * 100.0 / (2.0 * 9.81);
  CHECK(rel_err(qoi_max_altitude(kXPred, Theta{9.81, -40.0}), dragfree) < 1e-6);

  // 50-digit evaluation of the max-altitude expression at x_pred, mean theta
  CHECK(rel_err(qoi_max_altitude(kXPred, kThetaBar), 510.61871605376725) < 1e-11);

  // q equals the altitude at the apex time
  for (const Control& x : {kXPred, kXValTent}) {
    const double t_star = time_of_max(x, kThetaBar);
    CHECK(rel_err(qoi_max_altitude(x, kThetaBar), altitude(x, kThetaBar, t_star)) < 1e-10);
  }
}

TEST_CASE("compensated evaluation survives chi ~ 1e-6 where the naive form cancels") {
  // chi = 9.9916e-7 at this point; 50-digit oracle:
  const Control x{1.0, 0.01, 1.0, 10.4};
  const double oracle = 6.5127384278229993577;
  const double q = qoi_max_altitude(x, kThetaBar);
  CHECK(rel_err(q, oracle) < 1e-10);

  // the naive Eq.-(25) arithmetic loses at least 5 digits here
  const double b = 3.0 * M_PI * std::exp(kThetaBar.mu) * x.ell;
  const double naive = x.u0 + x.m * x.v0 / b -
                       x.m * x.m * 9.81 / (b * b) * std::log(1.0 + b * x.v0 / (x.m * 9.81));
  CHECK(rel_err(naive, oracle) > 1e-6);
}

TEST_CASE("time of max altitude") {
  // drag-free limit: v0 / g
  CHECK(rel_err(time_of_max(kXPred, Theta{9.81, -40.0}), 100.0 / 9.81) < 1e-9);

  // tentative scenario at fine-model theta: t* ~ 2 (frozen high-precision value)
  CHECK(rel_err(time_of_max(kXValTent, kThetaFine), 2.0387289324808061) < 1e-12);

  // velocity vanishes at t*, analytically and by finite differences
  const double t_star = time_of_max(kXPred, kThetaBar);
  CHECK(std::abs(velocity(kXPred, kThetaBar, t_star)) < 1e-10 * kXPred.v0);
  const double h = 1e-4;
  const double fd =
      (altitude(kXPred, kThetaBar, t_star + h) - altitude(kXPred, kThetaBar, t_star - h)) /
      (2.0 * h);
  CHECK(std::abs(fd) < 1e-6 * kXPred.v0);
}

TEST_CASE("qoi invariants: above launch height, monotone in drag") {
  RngStream s(RngSpec{102, 0});
  for (int rep = 0; rep < 50; ++rep) {
    const Control x{s.uniform(0.01, 5.0), s.uniform(0.005, 0.1), s.uniform(0.0, 2.0),
                    s.uniform(10.0, 120.0)};
    const Theta th{s.uniform(9.7, 9.9), s.uniform(-16.0, -8.0)};
    CHECK(qoi_max_altitude(x, th) >= x.u0);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double mu = -16.0; mu <= -6.0; mu += 0.5) {
    const double q = qoi_max_altitude(kXPred, Theta{9.81, mu});
    CHECK(q < prev);
    prev = q;
  }
}

TEST_CASE("analytic qoi gradient") {
  for (const Control& x : {kXPred, kXValTent}) {
    const auto g = grad_qoi(x, kThetaBar);
    CHECK(g[2] == 1.0);  // affine in u0

    const auto fd = fd_gradient(
        [](const Eigen::VectorXd& p) {
          return qoi_max_altitude(unpack_x(p), unpack_th(p));
        },
        pack(x, kThetaBar));
    for (int i = 0; i < 6; ++i) {
      const double scale = std::max({std::abs(g[i]), std::abs(fd[i]), 1e-6});
      CHECK(std::abs(g[i] - fd[i]) / scale < 1e-5);
    }
  }

  // drag-free limit of the gradient
  const auto g = grad_qoi(kXPred, Theta{9.81, -40.0});
  Eigen::VectorXd expected(6);
  expected << 0.0, 0.0, 1.0, 100.0 / 9.81, -100.0 * 100.0 / (2.0 * 9.81 * 9.81), 0.0;
  for (int i = 0; i < 6; ++i) CHECK(std::abs(g[i] - expected[i]) < 1e-4);
}

TEST_CASE("analytic observable gradients") {
  for (const double t : {0.3, 2.0, 9.5}) {
    const auto ga = grad_altitude(kXPred, kThetaBar, t);
    CHECK(ga[2] == 1.0);  // altitude is affine in u0
    const auto gacc = grad_acceleration(kXPred, kThetaBar, t);
    CHECK(gacc[2] == 0.0);

    const auto fda = fd_gradient(
        [t](const Eigen::VectorXd& p) { return altitude(unpack_x(p), unpack_th(p), t); },
        pack(kXPred, kThetaBar));
    const auto fdacc = fd_gradient(
        [t](const Eigen::VectorXd& p) { return acceleration(unpack_x(p), unpack_th(p), t); },
        pack(kXPred, kThetaBar));
    for (int i = 0; i < 6; ++i) {
      const double sa = std::max({std::abs(ga[i]), std::abs(fda[i]), 1e-6});
      CHECK(std::abs(ga[i] - fda[i]) / sa < 1e-5);
      const double sacc = std::max({std::abs(gacc[i]), std::abs(fdacc[i]), 1e-6});
      CHECK(std::abs(gacc[i] - fdacc[i]) / sacc < 1e-5);
    }
  }

  // drag-free limits: grad u -> (0, 0, 1, t, -t^2/2, 0), grad u'' -> (0,0,0,0,-1,0)
  const Theta nodrape{9.81, -40.0};
  const double t = 3.0;
  const auto ga = grad_altitude(kXPred, nodrape, t);
  CHECK(std::abs(ga[0]) < 1e-4);
  CHECK(std::abs(ga[1]) < 1e-4);
  CHECK(std::abs(ga[3] - t) < 1e-4);
  CHECK(std::abs(ga[4] + 0.5 * t * t) < 1e-4);
  CHECK(std::abs(ga[5]) < 1e-4);
  const auto gacc = grad_acceleration(kXPred, nodrape, t);
  CHECK(std::abs(gacc[4] + 1.0) < 1e-6);
  CHECK(std::abs(gacc[3]) < 1e-6);
}

TEST_CASE("reynolds number") {
  // Eq.-26 value at the initial time with the fine-model constants
  CHECK(rel_err(reynolds(kXPred, kThetaFine, 0.0), 66666.666666666672) < 1e-12);
  // the tentative validation scenario was built to match it
  CHECK(rel_err(reynolds(kXValTent, kThetaFine, 0.0), reynolds(kXPred, kThetaFine, 0.0)) <
        1e-12);
  // zero velocity at the apex
  const double t_star = time_of_max(kXPred, kThetaBar);
  CHECK(reynolds(kXPred, kThetaBar, t_star) < 1e-8);
}

TEST_CASE("drag coefficient correlation") {
  // low-Re limit: c_D ~ 24/Re within 1% at Re = 1e-3
  CHECK(rel_err(drag_coefficient(1e-3), 24.0 / 1e-3) < 0.01);
  CHECK_THROWS_AS(drag_coefficient(0.0), invalid_argument);
}

TEST_CASE("fine trajectory behavior") {
  SUBCASE("free-fall onset from rest") {
    const Control x{1.0, 0.05, 10.0, 0.0};
    const double u = fine_altitude(x, 0.01);
    CHECK(rel_err(u, 10.0 - 0.5 * 9.81 * 0.01 * 0.01) < 1e-4);
  }

  SUBCASE("low-Reynolds regime reduces to the linear model") {
    // Stokes-scale droplet: Re stays ~1e-3 and both drag laws agree
    const Control x{5.2e-13, 1e-5, 0.1, 0.001};
    const double t = 0.005;
    const double fine = fine_trajectory(x, {t}, FineModelConstants{}, 2000000).u.back();
    const double linear = altitude(x, kThetaFine, t);
    CHECK(rel_err(fine, linear) < 1e-3);
  }

  SUBCASE("drag only dissipates over the flight horizon") {
    const std::vector<double> grid = [] {
      std::vector<double> g;
      for (int i = 1; i <= 80; ++i) g.push_back(2.0 * 20.0 / 9.81 * i / 80.0);
      return g;
    }();
    const auto traj = fine_trajectory(kXValTent, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double parabola =
          kXValTent.u0 + kXValTent.v0 * grid[i] - 0.5 * 9.81 * grid[i] * grid[i];
      CHECK(traj.u[i] <= parabola + 1e-9);
    }
  }

  SUBCASE("laminar flag trips above Re = 2e5") {
    Eigen::VectorXd xv(4);
    xv << 1.0, 0.1, 0.705, 100.446;
    const auto traj = fine_trajectory(Control::from_vector(xv), {0.1});
    CHECK(traj.max_reynolds > 2e5);
    CHECK(!traj.laminar);

    const auto slow = fine_trajectory(kXValTent, {0.1});
    CHECK(slow.laminar);
  }
}

TEST_CASE("synthetic observations") {
  SUBCASE("noiseless override returns the fine altitude") {
    const auto draws = synthetic_observations(kXValTent, 1.0, 5, RngSpec{3, 3}, 0.0);
    const double base = fine_altitude(kXValTent, 1.0);
    for (double d : draws) CHECK(d == base);
  }

  SUBCASE("multiplicative 5% noise moment check") {
    const int n = 100000;
    const auto draws = synthetic_observations(kXValTent, 1.0, n, RngSpec{12, 5});
    double mean = 0.0;
    for (double d : draws) mean += d;
    mean /= n;
    double var = 0.0;
    for (double d : draws) var += (d - mean) * (d - mean);
    var /= (n - 1);
    CHECK(std::abs(std::sqrt(var) / mean - 0.05) < 0.002);
  }

  SUBCASE("noise is multiplicative: draws scale with the signal") {
    const auto a = synthetic_observations(kXValTent, 1.0, 100, RngSpec{6, 6});
    const auto b = synthetic_observations(kXValTent, 1.5, 100, RngSpec{6, 6});
    const double ua = fine_altitude(kXValTent, 1.0);
    const double ub = fine_altitude(kXValTent, 1.5);
    for (int i = 0; i < 100; ++i) CHECK(rel_err(a[i] / ua, b[i] / ub) < 1e-12);
  }
}

TEST_CASE("control and theta validation") {
  Eigen::VectorXd bad(4);
  bad << -1.0, 0.01, 1.0, 100.0;
  CHECK_THROWS_AS(Control::from_vector(bad), invalid_argument);
  Eigen::VectorXd badth(2);
  badth << -9.81, -11.0;
  CHECK_THROWS_AS(Theta::from_vector(badth), invalid_argument);
  CHECK_THROWS_AS(altitude(kXPred, kThetaBar, -1.0), invalid_argument);
}

