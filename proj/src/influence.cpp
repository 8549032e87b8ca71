#include "oved/influence.hpp"

#include <Eigen/Eigenvalues>
#include <cstring>
#include <unordered_map>

#include "oved/parallel.hpp"

namespace oved {

namespace {

struct VecHash {
  std::size_t operator()(const std::vector<double>& v) const {
    std::size_t h = 0xcbf29ce484222325ull;
    for (double d : v) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(d));
      std::memcpy(&bits, &d, sizeof(bits));
      h ^= bits;
      h *= 0x100000001b3ull;
    }
    return h;
  }
};

void check_symmetric(const Eigen::MatrixXd& m, double rel_tol) {
  require(m.rows() == m.cols(), "eig_sym: matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  require_numeric(asym <= rel_tol * scale, "eig_sym: matrix is not symmetric within tolerance");
}

}  // namespace

InfluenceMatrix influence_matrix_from_samples(const ModelFunctional& f, const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& z,
                                              const std::vector<Eigen::VectorXd>& thetas,
                                              const RngSpec& provenance) {
  require(!thetas.empty(), "influence_matrix: needs at least one sample");
  const auto n = thetas.size();
  const int d = f.dim_x() + f.dim_theta();

  // Deduplicate repeated draws (Dirac components make every draw identical);
  // the gradient is deterministic in theta so this changes nothing.
  std::unordered_map<std::vector<double>, int, VecHash> unique_ids;
  std::vector<const Eigen::VectorXd*> unique_thetas;
  std::vector<int> slot(n);
  std::vector<std::size_t> first_index;  // sample index that introduced each unique theta
  std::vector<double> key;
  for (std::size_t k = 0; k < n; ++k) {
    key.assign(thetas[k].data(), thetas[k].data() + thetas[k].size());
    auto [it, inserted] = unique_ids.try_emplace(key, static_cast<int>(unique_thetas.size()));
    if (inserted) {
      unique_thetas.push_back(&thetas[k]);
      first_index.push_back(k);
    }
    slot[k] = it->second;
  }

  std::vector<Eigen::VectorXd> grads(unique_thetas.size());
  parallel_for(unique_thetas.size(), [&](std::size_t u) {
    Eigen::VectorXd g;
    try {
      g = f.grad_xtheta(x, *unique_thetas[u], z);
    } catch (const std::exception& e) {
      throw numeric_error("influence_matrix: gradient evaluation failed at sample " +
                          std::to_string(first_index[u]) + ": " + e.what());
    }
    require_numeric(g.allFinite(), "influence_matrix: non-finite gradient at sample " +
                                       std::to_string(first_index[u]));
    grads[u] = std::move(g);
  });

  // Fixed-order accumulation; independent of thread count by construction.
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd snapshot;
  const std::size_t k90 = (n * 9) / 10;
  std::size_t snapshot_n = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::VectorXd& g = grads[static_cast<std::size_t>(slot[k])];
    sum.noalias() += g * g.transpose();
    if (k + 1 == k90) {
      snapshot = sum;
      snapshot_n = k90;
    }
  }

  InfluenceMatrix out;
  out.m = sum / static_cast<double>(n);
  // Enforce exact symmetry (the accumulation is symmetric up to roundoff).
  out.m = ((out.m + out.m.transpose()) * 0.5).eval();
  out.coords = f.coord_labels();
  out.meta.functional_id = f.id();
  out.meta.x = x;
  out.meta.z = z;
  out.meta.n_samples = static_cast<int>(n);
  out.meta.master_seed = provenance.master_seed;
  out.meta.stream_id = provenance.stream_id;
  out.meta.gradient = f.gradient_method();
  if (snapshot_n > 0 && snapshot_n < n) {
    const Eigen::MatrixXd partial = snapshot / static_cast<double>(snapshot_n);
    out.meta.convergence_delta = spectral_norm_sym(
        ((out.m - partial + (out.m - partial).transpose()) * 0.5).eval());
  }
  return out;
}

InfluenceMatrix influence_matrix(const ModelFunctional& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& z, const Distribution& theta_dist, int n,
                                 const RngSpec& rng) {
  require(n >= 1, "influence_matrix: n must be >= 1");
  require(theta_dist.dim() == f.dim_theta(),
          "influence_matrix: theta distribution dimension mismatch");
  const auto thetas = sample(theta_dist, n, rng);
  return influence_matrix_from_samples(f, x, z, thetas, rng);
}

EigenDecomposition eig_sym(const Eigen::MatrixXd& m) {
  check_symmetric(m, 1e-12);
  const Eigen::MatrixXd sym = (m + m.transpose()) * 0.5;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  require_numeric(solver.info() == Eigen::Success, "eig_sym: eigensolver failed");

  const Eigen::Index d = m.rows();
  EigenDecomposition out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  // Eigen returns ascending order; flip to descending.
  for (Eigen::Index i = 0; i < d; ++i) {
    out.eigenvalues[i] = solver.eigenvalues()[d - 1 - i];
    out.eigenvectors.col(i) = solver.eigenvectors().col(d - 1 - i);
  }
  // Sign convention: largest-magnitude component positive.
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::Index imax = 0;
    out.eigenvectors.col(i).cwiseAbs().maxCoeff(&imax);
    if (out.eigenvectors(imax, i) < 0.0) out.eigenvectors.col(i) = -out.eigenvectors.col(i);
  }
  return out;
}

EigenDecomposition eig_sym(const InfluenceMatrix& m) { return eig_sym(m.m); }

double spectral_norm_sym(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(((m + m.transpose()) * 0.5).eval(),
                                                        Eigen::EigenvaluesOnly);
  require_numeric(solver.info() == Eigen::Success, "spectral_norm: eigensolver failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {
void check_compatible(const InfluenceMatrix& m1, const InfluenceMatrix& m2) {
  require(m1.dim() == m2.dim(), "influence distance: dimension mismatch");
  require(m1.coords == m2.coords, "influence distance: coordinate labels mismatch");
}
}  // namespace

double spectral_distance(const InfluenceMatrix& m1, const InfluenceMatrix& m2) {
  check_compatible(m1, m2);
  return spectral_norm_sym(m1.m - m2.m);
}

double normalized_distance(const InfluenceMatrix& m1, const InfluenceMatrix& m2) {
  check_compatible(m1, m2);
  const double t1 = m1.m.trace();
  const double t2 = m2.m.trace();
  require_numeric(t1 > 0.0 && t2 > 0.0,
                  "normalized_distance: nonpositive trace (degenerate functional with "
                  "identically zero gradient)");
  return spectral_norm_sym(m1.m / t1 - m2.m / t2);
}

}  // namespace oved
