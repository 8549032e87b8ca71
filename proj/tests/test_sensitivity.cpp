#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "oved/influence.hpp"
#include "oved/parallel.hpp"
#include "oved/projectile.hpp"
#include "test_util.hpp"

using namespace oved;

namespace {

InfluenceMatrix wrap(const Eigen::MatrixXd& m) {
  InfluenceMatrix im;
  im.m = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) im.coords.push_back("c" + std::to_string(i));
  return im;
}

Eigen::MatrixXd random_symmetric(int d, RngStream& s) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = s.uniform(-1.0, 1.0);
  return 0.5 * (a + a.transpose());
}

Eigen::VectorXd x_pred() {
  Eigen::VectorXd x(4);
  x << 0.05, 0.01, 1.0, 100.0;
  return x;
}

Distribution paper_theta() {
  return Distribution::product(
      {Distribution::normal(9.81, 0.01), Distribution::normal(-5.0 * std::log(10.0), 0.5)});
}

}  // namespace

TEST_CASE("affine functional gives an exact outer product") {
  Eigen::VectorXd a(3);
  a << 1.0, -2.0, 0.5;
  const CallableFunctional f(
      "affine", FunctionalKind::qoi, 2, 1, 0,
      [a](const Eigen::VectorXd& x, const Eigen::VectorXd& th, const Eigen::VectorXd&) {
        return a[0] * x[0] + a[1] * x[1] + a[2] * th[0] + 3.0;
      });
  const auto m = influence_matrix(f, Eigen::Vector2d(0.3, 0.4), Eigen::VectorXd(),
                                  Distribution::normal(0.0, 2.0), 50, RngSpec{1, 1});
  // constant gradient: finite-difference evaluation, so compare loosely
  const Eigen::MatrixXd expected = a * a.transpose();
  CHECK((m.m - expected).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(m.meta.n_samples == 50);
}

TEST_CASE("projectile influence matrix matches a direct sample-mean oracle") {
  const auto f = projectile::qoi_functional();
  const RngSpec rng{77, 3};
  const int n = 10000;
  const auto thetas = sample(paper_theta(), n, rng);
  const auto m = influence_matrix_from_samples(*f, x_pred(), Eigen::VectorXd(), thetas, rng);

  // independent accumulation with the same draws
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(6, 6);
  for (const auto& th : thetas) {
    const Eigen::VectorXd g = projectile::grad_qoi(
        projectile::Control::from_vector(x_pred()), projectile::Theta::from_vector(th));
    oracle += g * g.transpose();
  }
  oracle /= n;
  CHECK((m.m - oracle).cwiseAbs().maxCoeff() <= 1e-12 * oracle.cwiseAbs().maxCoeff());

  // same spec reproduces bitwise; the estimator does not depend on threads
  set_thread_count(4);
  const auto m2 = influence_matrix(*f, x_pred(), Eigen::VectorXd(), paper_theta(), n, rng);
  set_thread_count(1);
  const auto m3 = influence_matrix(*f, x_pred(), Eigen::VectorXd(), paper_theta(), n, rng);
  CHECK(m2.m == m3.m);
  CHECK(m2.meta.convergence_delta == m3.meta.convergence_delta);
}

TEST_CASE("influence matrix is PSD up to roundoff and symmetric") {
  const auto f = projectile::qoi_functional();
  const auto m = influence_matrix(*f, x_pred(), Eigen::VectorXd(), paper_theta(), 500,
                                  RngSpec{5, 0});
  CHECK((m.m - m.m.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const auto eig = eig_sym(m);
  const double norm = spectral_norm_sym(m.m);
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
    CHECK(eig.eigenvalues[i] >= -1e-10 * norm);
}

TEST_CASE("projectile QoI influence matrix ignores the initial altitude") {
  const auto f = projectile::qoi_functional();
  Eigen::VectorXd xa = x_pred(), xb = x_pred();
  xb[2] = 0.3;  // different u0
  const auto thetas = sample(paper_theta(), 2000, RngSpec{9, 9});
  const auto ma = influence_matrix_from_samples(*f, xa, Eigen::VectorXd(), thetas);
  const auto mb = influence_matrix_from_samples(*f, xb, Eigen::VectorXd(), thetas);
  CHECK((ma.m - mb.m).cwiseAbs().maxCoeff() < 1e-14 * ma.m.cwiseAbs().maxCoeff());
}

TEST_CASE("dirac theta produces a rank-one influence matrix") {
  const auto f = projectile::qoi_functional();
  const auto theta = Distribution::product(
      {Distribution::dirac(9.81), Distribution::dirac(-5.0 * std::log(10.0))});
  const auto m = influence_matrix(*f, x_pred(), Eigen::VectorXd(), theta, 1000, RngSpec{4, 4});
  const auto eig = eig_sym(m);
  CHECK(eig.eigenvalues[1] / eig.eigenvalues[0] < 1e-8);
}

TEST_CASE("eig_sym on reference matrices") {
  SUBCASE("identity") {
    const auto e = eig_sym(Eigen::MatrixXd::Identity(3, 3));
    for (int i = 0; i < 3; ++i) CHECK(e.eigenvalues[i] == doctest::Approx(1.0));
  }
  SUBCASE("diagonal") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
    d.diagonal() << 4.0, 1.0, 0.0;
    const auto e = eig_sym(d);
    CHECK(e.eigenvalues[0] == doctest::Approx(4.0));
    CHECK(e.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(e.eigenvalues[2] == doctest::Approx(0.0));
    CHECK(std::abs(e.eigenvectors(0, 0)) == doctest::Approx(1.0));
    // sign convention: largest component positive
    CHECK(e.eigenvectors(0, 0) > 0.0);
  }
  SUBCASE("rank-1 outer product") {
    Eigen::Vector3d a(1.0, 2.0, 2.0);
    const auto e = eig_sym((a * a.transpose()).eval());
    CHECK(e.eigenvalues[0] == doctest::Approx(9.0));
    CHECK(std::abs(e.eigenvalues[1]) < 1e-12);
    CHECK((e.eigenvectors.col(0) - a / 3.0).norm() < 1e-12);
  }
  SUBCASE("orthonormality and residual") {
    RngStream s(RngSpec{12, 0});
    const Eigen::MatrixXd m = random_symmetric(6, s);
    const auto e = eig_sym(m);
    CHECK((e.eigenvectors.transpose() * e.eigenvectors - Eigen::MatrixXd::Identity(6, 6))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    const double norm = spectral_norm_sym(m);
    for (int i = 0; i < 6; ++i)
      CHECK((m * e.eigenvectors.col(i) - e.eigenvalues[i] * e.eigenvectors.col(i)).norm() <=
            1e-8 * norm);
    // descending order
    for (int i = 0; i + 1 < 6; ++i) CHECK(e.eigenvalues[i] >= e.eigenvalues[i + 1]);
  }
  SUBCASE("asymmetric input is rejected") {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 1) = 1.0;
    CHECK_THROWS_AS(eig_sym(bad), numeric_error);
  }
}

TEST_CASE("spectral distance reference values and SVD oracle") {
  const auto m = wrap(Eigen::MatrixXd::Identity(4, 4) * 2.0);
  CHECK(spectral_distance(m, m) == 0.0);

  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(2, 2), d2 = Eigen::MatrixXd::Zero(2, 2);
  d1(0, 0) = 3.0;
  d2(1, 1) = 1.0;
  CHECK(spectral_distance(wrap(d1), wrap(d2)) == doctest::Approx(3.0));

  RngStream s(RngSpec{21, 0});
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd a = random_symmetric(6, s);
    const Eigen::MatrixXd b = random_symmetric(6, s);
    const double dist = spectral_distance(wrap(a), wrap(b));
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a - b);
    CHECK(std::abs(dist - svd.singularValues()[0]) < 1e-10);
  }

  // dimension / label mismatch
  CHECK_THROWS_AS(spectral_distance(wrap(Eigen::MatrixXd::Identity(2, 2)),
                                    wrap(Eigen::MatrixXd::Identity(3, 3))),
                  invalid_argument);
}

TEST_CASE("spectral distance triangle inequality on random triples") {
  RngStream s(RngSpec{22, 0});
  for (int rep = 0; rep < 200; ++rep) {
    const auto a = wrap(random_symmetric(5, s));
    const auto b = wrap(random_symmetric(5, s));
    const auto c = wrap(random_symmetric(5, s));
    CHECK(spectral_distance(a, c) <=
          spectral_distance(a, b) + spectral_distance(b, c) + 1e-10);
    CHECK(spectral_distance(a, b) == doctest::Approx(spectral_distance(b, a)));
  }
}

TEST_CASE("normalized distance is scale invariant") {
  RngStream s(RngSpec{23, 0});
  Eigen::MatrixXd base = random_symmetric(4, s);
  base = (base * base.transpose()).eval();  // PSD with positive trace
  const auto m1 = wrap(base);
  const auto m2 = wrap((3.7 * base).eval());
  CHECK(normalized_distance(m1, m2) < 1e-14);

  Eigen::MatrixXd o1 = Eigen::MatrixXd::Zero(2, 2), o2 = Eigen::MatrixXd::Zero(2, 2);
  o1(0, 0) = 1.0;
  o2(1, 1) = 1.0;
  CHECK(normalized_distance(wrap(o1), wrap(o2)) == doctest::Approx(1.0));

  // scale invariance in both arguments
  Eigen::MatrixXd other = random_symmetric(4, s);
  other = (other * other.transpose()).eval();
  const auto a = wrap(other);
  const auto b = wrap(base);
  const auto scaled_a = wrap((2.5 * other).eval());
  const auto scaled_b = wrap((0.3 * base).eval());
  CHECK(std::abs(normalized_distance(a, b) - normalized_distance(scaled_a, scaled_b)) < 1e-12);

  CHECK_THROWS_AS(normalized_distance(wrap(Eigen::MatrixXd::Zero(4, 4)), m1), numeric_error);
}

TEST_CASE("altitude observed at the per-theta apex matches the QoI influence matrix") {
  // The observable u(t*) with t* the (x, theta)-dependent apex time is the
  // same functional as the QoI, so the normalized distance vanishes.
  const auto apex_altitude = std::make_shared<CallableFunctional>(
      "altitude_at_apex", FunctionalKind::qoi, 4, 2, 0,
      [](const Eigen::VectorXd& x, const Eigen::VectorXd& th, const Eigen::VectorXd&) {
        const auto ctl = projectile::Control::from_vector(x);
        const auto theta = projectile::Theta::from_vector(th);
        return projectile::altitude(ctl, theta, projectile::time_of_max(ctl, theta));
      });

  Eigen::VectorXd x_val(4);
  x_val << 1.0, 0.1, 0.705, 100.446;
  const auto thetas = sample(paper_theta(), 2000, RngSpec{31, 0});
  const auto m_obs =
      influence_matrix_from_samples(*apex_altitude, x_val, Eigen::VectorXd(), thetas);
  const auto m_qoi = influence_matrix_from_samples(*projectile::qoi_functional(), x_val,
                                                   Eigen::VectorXd(), thetas);
  InfluenceMatrix m_obs_relabel = m_obs;
  m_obs_relabel.coords = m_qoi.coords;
  CHECK(normalized_distance(m_obs_relabel, m_qoi) < 1e-8);
}

TEST_CASE("gradient failures carry the sample index") {
  const CallableFunctional f(
      "fragile", FunctionalKind::qoi, 1, 1, 0,
      [](const Eigen::VectorXd&, const Eigen::VectorXd& th, const Eigen::VectorXd&) {
        if (th[0] > 0.0) throw numeric_error("boom");
        return th[0];
      });
  // Dirac at a failing point: the error names the first sample
  CHECK_THROWS_WITH_AS(
      influence_matrix(f, Eigen::VectorXd::Ones(1), Eigen::VectorXd(),
                       Distribution::dirac(1.0), 3, RngSpec{1, 0}),
      doctest::Contains("sample 0"), numeric_error);
}
