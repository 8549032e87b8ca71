#include "oved/validation.hpp"

#include <cmath>

#include "oved/parallel.hpp"

namespace oved {

Distribution propagate(const ModelFunctional& h, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& z, const Distribution& theta_dist, int n,
                       const RngSpec& rng) {
  require(n >= 1, "propagate: n must be >= 1");
  const auto thetas = sample(theta_dist, n, rng);
  std::vector<double> values(thetas.size());
  parallel_for(thetas.size(), [&](std::size_t k) {
    double v;
    try {
      v = h.value(x, thetas[k], z);
    } catch (const std::exception& e) {
      throw numeric_error("propagate: evaluation failed at sample " + std::to_string(k) + ": " +
                          e.what());
    }
    require_numeric(is_finite(v),
                    "propagate: non-finite value at sample " + std::to_string(k));
    values[k] = v;
  });
  return Distribution::empirical(std::move(values));
}

DiscrepancySample discrepancy(const std::vector<double>& y_exp_samples,
                              const ModelFunctional& h_obs, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& z, const Distribution& theta_dist, int n,
                              const RngSpec& rng) {
  require(!y_exp_samples.empty(), "discrepancy: experimental sample list must be nonempty");
  require(n >= 1, "discrepancy: n must be >= 1");

  // Independent streams for the experimental draw and the model draw.
  const Distribution y_dist = Distribution::empirical(y_exp_samples);
  RngStream y_stream(rng.substream(0));
  const auto thetas = sample(theta_dist, n, rng.substream(1));

  std::vector<double> y_draws(static_cast<std::size_t>(n));
  for (auto& y : y_draws) y = y_dist.sample(y_stream)[0];

  std::vector<double> model_values(thetas.size());
  parallel_for(thetas.size(), [&](std::size_t k) {
    model_values[k] = h_obs.value(x, thetas[k], z);
    require_numeric(is_finite(model_values[k]),
                    "discrepancy: non-finite model value at sample " + std::to_string(k));
  });

  DiscrepancySample out;
  out.e.resize(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < out.e.size(); ++k) out.e[k] = y_draws[k] - model_values[k];
  out.x = x;
  out.z = z;
  out.n_exp_pool = static_cast<int>(y_exp_samples.size());
  out.master_seed = rng.master_seed;
  out.stream_id = rng.stream_id;
  return out;
}

double reliability_metric(const DiscrepancySample& d, double epsilon) {
  require(epsilon > 0.0, "reliability_metric: epsilon must be > 0");
  require(!d.e.empty(), "reliability_metric: empty discrepancy sample");
  std::size_t count = 0;
  for (double e : d.e)
    if (std::abs(e) < epsilon) ++count;
  return static_cast<double>(count) / static_cast<double>(d.e.size());
}

Distribution posterior_to_distribution(const PosteriorChain& chain) {
  const auto d = chain.samples.cols();
  require(d >= 1, "posterior_to_distribution: empty chain");
  if (d == 1) return Distribution::empirical(chain.component(0));
  std::vector<Distribution> marginals;
  marginals.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j)
    marginals.push_back(Distribution::empirical(chain.component(static_cast<int>(j))));
  return Distribution::product(std::move(marginals));
}

WorkflowResult run_validation_workflow(const WorkflowConfig& config) {
  require(config.h_qoi != nullptr, "workflow: missing QoI functional");
  require(!config.h_lab.empty(), "workflow: H_lab must be nonempty");
  require(static_cast<bool>(config.experiment), "workflow: missing experimental data source");
  require(config.epsilon > 0.0, "workflow: epsilon must be > 0");
  require(config.eta >= 0.0 && config.eta <= 1.0, "workflow: eta must lie in [0, 1]");

  WorkflowResult result;
  Distribution f_theta = config.prior;

  // Stage 1 (optional): calibration, Algorithm 1 with data in hand.
  if (config.calibration) {
    const auto& cal = *config.calibration;
    try {
      result.posterior = posterior_sample(cal.likelihood, *cal.h_obs, config.prior,
                                          cal.chain_length, cal.proposal_scale,
                                          config.rng.substream(8), cal.burn_in_fraction);
    } catch (const std::exception& e) {
      throw numeric_error(std::string("workflow [calibration]: ") + e.what());
    }
    f_theta = posterior_to_distribution(*result.posterior);
  }

  // Stage 2: propagate Q at the prediction scenario; uncertainty gate.
  Distribution q_dist = Distribution::dirac(0.0);
  try {
    q_dist = propagate(*config.h_qoi, config.x_pred, Eigen::VectorXd(), f_theta,
                       config.n_propagate, config.rng.substream(4));
  } catch (const std::exception& e) {
    throw numeric_error(std::string("workflow [propagate]: ") + e.what());
  }
  {
    const auto& samples = std::get<Distribution::Empirical>(q_dist.node()).samples;
    result.q_samples = samples;
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(samples.size() > 1 ? samples.size() - 1 : 1);
    result.q_mean = mean;
    result.q_std = std::sqrt(var);
    result.q_cov = mean != 0.0 ? result.q_std / std::abs(mean)
                               : std::numeric_limits<double>::infinity();
  }
  if (result.q_cov > config.cov_budget) {
    result.status = WorkflowResult::Status::exited_uncertainty_too_large;
    return result;
  }

  // Stage 3: experiment design (Algorithm 3), with optional forcing.
  if (config.force_x_val) {
    result.x_val = *config.force_x_val;
  } else {
    try {
      result.scenario = optimize_scenario(*config.h_qoi, config.x_pred, f_theta, config.x_lab,
                                          config.opts, config.n_mc);
    } catch (const std::exception& e) {
      throw numeric_error(std::string("workflow [design-scenario]: ") + e.what());
    }
    result.x_val = result.scenario->best_point;
  }

  int h_index = 0;
  if (config.force_sensor) {
    h_index = config.force_sensor->first;
    require(h_index >= 0 && h_index < static_cast<int>(config.h_lab.size()),
            "workflow: forced sensor functional index out of range");
    result.z_val = config.force_sensor->second;
  } else {
    try {
      result.sensor = optimize_sensor(config.h_lab, config.z_lab, result.x_val, *config.h_qoi,
                                      f_theta, config.opts, config.n_mc);
    } catch (const std::exception& e) {
      throw numeric_error(std::string("workflow [design-sensor]: ") + e.what());
    }
    h_index = result.sensor->functional_index;
    result.z_val = result.sensor->z;
  }
  const ModelFunctional& h_obs = *config.h_lab[static_cast<std::size_t>(h_index)];
  result.h_obs_id = h_obs.id();

  // Stage 4: acquire experimental observations.
  std::vector<double> y_exp;
  try {
    y_exp = config.experiment(result.x_val, result.z_val, config.n_exp, config.rng.substream(5));
  } catch (const std::exception& e) {
    throw numeric_error(std::string("workflow [experiment]: ") + e.what());
  }
  require_numeric(!y_exp.empty(), "workflow [experiment]: data source returned no samples");

  // Stage 5: discrepancy and reliability metric.
  try {
    result.disc = discrepancy(y_exp, h_obs, result.x_val, result.z_val, f_theta, config.n_model,
                              config.rng.substream(6));
  } catch (const std::exception& e) {
    throw numeric_error(std::string("workflow [discrepancy]: ") + e.what());
  }
  result.verdict.gamma = reliability_metric(*result.disc, config.epsilon);
  result.verdict.epsilon = config.epsilon;
  result.verdict.eta = config.eta;
  result.verdict.invalidated = !(result.verdict.gamma >= config.eta);
  result.status = WorkflowResult::Status::completed;
  return result;
}

}  // namespace oved
