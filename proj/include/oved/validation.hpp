#pragma once

#include <functional>
#include <optional>

#include "oved/calibration.hpp"
#include "oved/design.hpp"
#include "oved/empirical_cdf.hpp"

namespace oved {

// Propagate model-parameter uncertainty through a functional: n evaluations
// h(x, theta_k, z) with theta_k ~ theta_dist, returned as an empirical
// distribution.
Distribution propagate(const ModelFunctional& h, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& z, const Distribution& theta_dist, int n,
                       const RngSpec& rng);

struct DiscrepancySample {
  std::vector<double> e;  // realizations of E = Y_exp - h_obs(x, Theta, z)
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  int n_exp_pool = 0;  // size of the experimental sample list resampled from
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

// Discrepancy realizations with the experimental draw and the model draw
// sampled independently (separate substreams of rng).
DiscrepancySample discrepancy(const std::vector<double>& y_exp_samples,
                              const ModelFunctional& h_obs, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& z, const Distribution& theta_dist, int n,
                              const RngSpec& rng);

// Model reliability metric: gamma = #{|e| < epsilon} / n.
double reliability_metric(const DiscrepancySample& d, double epsilon);

struct ValidationVerdict {
  double gamma = 0.0;
  double epsilon = 0.0;
  double eta = 0.0;
  bool invalidated = true;  // not-invalidated iff gamma >= eta
};

// Experimental data source: draws n observations of Y_exp at (x, z).
using ExperimentSource =
    std::function<std::vector<double>(const Eigen::VectorXd& x, const Eigen::VectorXd& z, int n,
                                      const RngSpec& rng)>;

struct WorkflowConfig {
  FunctionalPtr h_qoi;
  std::vector<FunctionalPtr> h_lab;
  Eigen::VectorXd x_pred;
  Box x_lab;
  SensorDomain z_lab;
  Distribution prior = Distribution::dirac(0.0);
  double epsilon = 1.0;
  double eta = 0.9;
  double cov_budget = 0.5;  // max admissible coefficient of variation of Q
  int n_exp = 10000;
  int n_model = 10000;
  int n_propagate = 10000;
  int n_mc = 1000;  // influence-matrix sample size
  OptimizerOptions opts;
  RngSpec rng;
  ExperimentSource experiment;

  // Stage overrides: skip the corresponding optimization when set.
  std::optional<Eigen::VectorXd> force_x_val;
  std::optional<std::pair<int, Eigen::VectorXd>> force_sensor;  // (functional index, z)

  // Optional calibration stage (Algorithm 1 with data already acquired).
  struct Calibration {
    LikelihoodSpec likelihood;
    FunctionalPtr h_obs;
    Eigen::VectorXd proposal_scale;
    int chain_length = 20000;
    double burn_in_fraction = 0.2;
  };
  std::optional<Calibration> calibration;
};

struct WorkflowResult {
  enum class Status { completed, exited_uncertainty_too_large };
  Status status = Status::completed;

  // Propagation stage
  double q_mean = 0.0, q_std = 0.0, q_cov = 0.0;
  std::vector<double> q_samples;

  // Design stage (present when the workflow proceeded)
  std::optional<DesignResult> scenario;
  std::optional<SensorChoice> sensor;
  Eigen::VectorXd x_val;
  Eigen::VectorXd z_val;
  std::string h_obs_id;

  // Validation stage
  std::optional<DiscrepancySample> disc;
  ValidationVerdict verdict;

  // Calibration stage
  std::optional<PosteriorChain> posterior;
};

// Algorithm-2 orchestration: optional calibration, uncertainty propagation
// with the coefficient-of-variation gate, experiment design, synthetic or
// file-based data acquisition, reliability metric, verdict.
WorkflowResult run_validation_workflow(const WorkflowConfig& config);

// Turns a posterior chain into a product of per-component empirical
// marginals (component dependence is dropped) for reuse as f_Theta.
Distribution posterior_to_distribution(const PosteriorChain& chain);

}  // namespace oved
