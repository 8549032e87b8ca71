#pragma once

#include <functional>
#include <vector>

#include "oved/design.hpp"
#include "oved/distribution.hpp"
#include "oved/functional.hpp"

namespace oved {

struct Observation {
  Eigen::VectorXd x;  // calibration scenario
  Eigen::VectorXd z;  // sensor parameters (empty for QoI-kind observables)
  double y = 0.0;     // measured value
};

// Gaussian additive-error likelihood with a single noise level shared by
// every calibration scenario.
struct LikelihoodSpec {
  double sigma = 1.0;
  std::vector<Observation> observations;

  void validate() const {
    require(sigma > 0.0, "LikelihoodSpec: sigma must be > 0");
    require(!observations.empty(), "LikelihoodSpec: needs at least one observation");
  }
};

// Sum over observations of -log(sqrt(2 pi) sigma) - (h(x,theta,z) - y)^2 / (2 sigma^2).
double log_likelihood(const LikelihoodSpec& spec, const ModelFunctional& h_obs,
                      const Eigen::VectorXd& theta);

struct PosteriorChain {
  Eigen::MatrixXd samples;      // one row per draw
  Eigen::VectorXd log_density;  // unnormalized log posterior per draw
  double acceptance_rate = 0.0;
  int burn_in = 0;

  Eigen::VectorXd mean() const;        // post burn-in
  Eigen::MatrixXd covariance() const;  // post burn-in
  std::vector<double> component(int j, bool drop_burn_in = true) const;
};

// Random-walk Metropolis targeting likelihood x prior (the evidence is never
// computed). The chain starts at the prior mean; proposals are Gaussian with
// componentwise scales. Burn-in defaults to 20% of the chain.
PosteriorChain posterior_sample(const LikelihoodSpec& spec, const ModelFunctional& h_obs,
                                const Distribution& prior, int n,
                                const Eigen::VectorXd& proposal_scale, const RngSpec& rng,
                                double burn_in_fraction = 0.2);

struct DOptimalResult {
  Eigen::VectorXd point;  // (x_cal, z_cal)
  double log_det = 0.0;
  std::vector<DesignResult::StartRecord> per_start;
};

// D-optimal calibration design for linear-in-theta models: maximize
// log det I(x, z) over the box with the design module's multistart pattern
// search. Points with a singular Fisher matrix are rejected; if every
// evaluation is singular the model is not identifiable from one observation.
DOptimalResult d_optimal_design(
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& fisher, const Box& box,
    const OptimizerOptions& opts);

}  // namespace oved
