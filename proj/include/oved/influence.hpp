#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "oved/distribution.hpp"
#include "oved/functional.hpp"

namespace oved {

struct InfluenceMeta {
  std::string functional_id;
  Eigen::VectorXd x;
  Eigen::VectorXd z;  // empty for QoI functionals
  int n_samples = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  GradientMethod gradient = GradientMethod::finite_difference;
  // Spectral norm of the change of the running mean over the last 10% of
  // samples; a cheap convergence indicator for the Monte-Carlo estimate.
  double convergence_delta = 0.0;
};

// Symmetric PSD matrix of second moments of the functional gradient over the
// model-parameter distribution, in (x1..x_dx, theta1..theta_dtheta) order.
struct InfluenceMatrix {
  Eigen::MatrixXd m;
  std::vector<std::string> coords;
  InfluenceMeta meta;

  Eigen::Index dim() const { return m.rows(); }
};

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;   // sorted descending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns aligned with eigenvalues
};

// Monte-Carlo estimate M = (1/n) sum_k grad h(x, theta_k, z) grad h(...)^T
// with theta_k ~ theta_dist. Duplicate theta draws (e.g. Dirac components)
// evaluate the gradient once; accumulation runs in fixed sample order so the
// result is bitwise reproducible and thread-count independent.
InfluenceMatrix influence_matrix(const ModelFunctional& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& z, const Distribution& theta_dist, int n,
                                 const RngSpec& rng);

// Same estimator over a caller-supplied sample list (used for common random
// numbers across optimizer candidates).
InfluenceMatrix influence_matrix_from_samples(const ModelFunctional& f, const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& z,
                                              const std::vector<Eigen::VectorXd>& thetas,
                                              const RngSpec& provenance = {});

// Eigendecomposition of a symmetric matrix with descending eigenvalues and a
// deterministic sign convention (largest-magnitude component positive).
EigenDecomposition eig_sym(const Eigen::MatrixXd& m);
EigenDecomposition eig_sym(const InfluenceMatrix& m);

// Spectral norm of a symmetric matrix (largest |eigenvalue|).
double spectral_norm_sym(const Eigen::MatrixXd& m);

// d(M1, M2) = ||M1 - M2||_2. Requires matching dimensions and coordinates.
double spectral_distance(const InfluenceMatrix& m1, const InfluenceMatrix& m2);

// d(M1/Tr(M1), M2/Tr(M2)); errors on nonpositive trace (degenerate,
// identically-zero-gradient functional).
double normalized_distance(const InfluenceMatrix& m1, const InfluenceMatrix& m2);

}  // namespace oved
