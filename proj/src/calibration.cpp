#include "oved/calibration.hpp"

#include <Eigen/Cholesky>
#include <atomic>
#include <cmath>
#include <limits>

#include "oved/parallel.hpp"

namespace oved {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double log_likelihood(const LikelihoodSpec& spec, const ModelFunctional& h_obs,
                      const Eigen::VectorXd& theta) {
  spec.validate();
  const double log_norm = -std::log(std::sqrt(2.0 * M_PI) * spec.sigma);
  double total = 0.0;
  for (const auto& obs : spec.observations) {
    const double pred = h_obs.value(obs.x, theta, obs.z);
    require_numeric(is_finite(pred), "log_likelihood: model evaluation is not finite");
    const double r = pred - obs.y;
    total += log_norm - r * r / (2.0 * spec.sigma * spec.sigma);
  }
  return total;
}

Eigen::VectorXd PosteriorChain::mean() const {
  const auto rows = samples.rows() - burn_in;
  return samples.bottomRows(rows).colwise().mean();
}

Eigen::MatrixXd PosteriorChain::covariance() const {
  const auto rows = samples.rows() - burn_in;
  const Eigen::MatrixXd tail = samples.bottomRows(rows);
  const Eigen::RowVectorXd mu = tail.colwise().mean();
  const Eigen::MatrixXd centered = tail.rowwise() - mu;
  return centered.transpose() * centered / static_cast<double>(rows - 1);
}

std::vector<double> PosteriorChain::component(int j, bool drop_burn_in) const {
  const Eigen::Index start = drop_burn_in ? burn_in : 0;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(samples.rows() - start));
  for (Eigen::Index i = start; i < samples.rows(); ++i) out.push_back(samples(i, j));
  return out;
}

PosteriorChain posterior_sample(const LikelihoodSpec& spec, const ModelFunctional& h_obs,
                                const Distribution& prior, int n,
                                const Eigen::VectorXd& proposal_scale, const RngSpec& rng,
                                double burn_in_fraction) {
  spec.validate();
  require(n >= 1, "posterior_sample: n must be >= 1");
  require(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0,
          "posterior_sample: burn-in fraction must lie in [0, 1)");
  const int d = prior.dim();
  require(proposal_scale.size() == d, "posterior_sample: proposal scale dimension mismatch");
  require((proposal_scale.array() > 0.0).all(), "posterior_sample: proposal scales must be > 0");

  const auto log_target = [&](const Eigen::VectorXd& theta) -> double {
    const double lp = prior.log_density(theta);
    if (!std::isfinite(lp)) return -kInf;
    return lp + log_likelihood(spec, h_obs, theta);
  };

  Eigen::VectorXd current = prior.mean();
  double current_ld = log_target(current);
  require_numeric(std::isfinite(current_ld),
                  "posterior_sample: zero prior density at the initial point");

  RngStream stream(rng);
  PosteriorChain chain;
  chain.samples.resize(n, d);
  chain.log_density.resize(n);
  long accepted = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd proposal = current;
    for (int j = 0; j < d; ++j) proposal[j] += proposal_scale[j] * stream.normal();
    const double proposal_ld = log_target(proposal);
    const double log_alpha = proposal_ld - current_ld;
    const double u = stream.uniform01();
    if (std::isfinite(proposal_ld) && std::log(std::max(u, 1e-300)) < log_alpha) {
      current = std::move(proposal);
      current_ld = proposal_ld;
      ++accepted;
    }
    chain.samples.row(i) = current;
    chain.log_density[i] = current_ld;
  }
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(n);
  chain.burn_in = static_cast<int>(burn_in_fraction * n);
  if (chain.burn_in >= n) chain.burn_in = n - 1;
  return chain;
}

DOptimalResult d_optimal_design(
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& fisher, const Box& box,
    const OptimizerOptions& opts) {
  opts.validate();
  std::atomic<long> finite_evals{0};

  // Minimize -log det I; singular or indefinite Fisher matrices reject the point.
  const Objective objective = [&](const Eigen::VectorXd& p) -> double {
    Eigen::MatrixXd info;
    try {
      info = fisher(p);
    } catch (const std::exception&) {
      return kInf;
    }
    if (info.rows() != info.cols() || info.size() == 0) return kInf;
    const Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) return kInf;  // singular / not PD
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < info.rows(); ++i) {
      const double l = llt.matrixL()(i, i);
      if (!(l > 0.0)) return kInf;
      log_det += 2.0 * std::log(l);
    }
    ++finite_evals;
    return -log_det;
  };

  const auto starts = lhs_sample(box, opts.n_starts, opts.rng.substream(0));
  DOptimalResult result;
  result.per_start.resize(starts.size());
  parallel_for(starts.size(), [&](std::size_t s) {
    auto& record = result.per_start[s];
    record.start = starts[s];
    try {
      const SearchResult r = pattern_search(objective, starts[s], box, opts);
      record.optimum = r.x;
      record.objective = r.f;
      record.evals = r.evals;
    } catch (const std::exception&) {
      record.optimum = starts[s];
      record.objective = kInf;
      record.failed = true;
    }
  });

  const DesignResult::StartRecord* best = nullptr;
  for (const auto& r : result.per_start) {
    if (r.failed || !is_finite(r.objective)) continue;
    if (best == nullptr || r.objective < best->objective) best = &r;
  }
  require_numeric(best != nullptr && finite_evals.load() > 0,
                  "d_optimal_design: Fisher matrix singular everywhere; the model is not "
                  "identifiable from this design space");
  result.point = best->optimum;
  result.log_det = -best->objective;
  return result;
}

}  // namespace oved
