#include "oved/design.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#include "oved/parallel.hpp"

namespace oved {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd empty_vec() { return Eigen::VectorXd(0); }

// Flat directions of the objective at x: finite difference across 1% of the
// box width below 1e-10 (affine directions of the functional show up here).
std::vector<int> flat_directions(const Objective& f, const Eigen::VectorXd& x, double f0,
                                 const Box& box) {
  std::vector<int> flat;
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    const double w = box.width()[i];
    if (w == 0.0) {
      flat.push_back(static_cast<int>(i));
      continue;
    }
    const double delta = 0.01 * w;
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += delta;
    xm[i] -= delta;
    xp = box.clamp(xp);
    xm = box.clamp(xm);
    const double fp = (xp == x) ? f0 : f(xp);
    const double fm = (xm == x) ? f0 : f(xm);
    if (std::abs(fp - f0) < 1e-10 && std::abs(fm - f0) < 1e-10) flat.push_back(static_cast<int>(i));
  }
  return flat;
}

}  // namespace

DesignResult optimize_scenario(const ModelFunctional& h_qoi, const Eigen::VectorXd& x_pred,
                               const Distribution& theta_dist, const Box& x_lab,
                               const OptimizerOptions& opts, int n_samples) {
  opts.validate();
  require(h_qoi.kind() == FunctionalKind::qoi, "optimize_scenario: functional must be a QoI");
  require(x_lab.dim() == h_qoi.dim_x(), "optimize_scenario: box dimension mismatch");

  // Common random numbers: one pinned theta sample set for the target and
  // for every candidate scenario.
  const RngSpec theta_rng = opts.rng.substream(0);
  const auto thetas = sample(theta_dist, n_samples, theta_rng);
  const InfluenceMatrix target =
      influence_matrix_from_samples(h_qoi, x_pred, empty_vec(), thetas, theta_rng);
  const double target_norm = spectral_norm_sym(target.m);

  std::atomic<long> rejected{0};
  const Objective objective = [&](const Eigen::VectorXd& x) -> double {
    try {
      const InfluenceMatrix m =
          influence_matrix_from_samples(h_qoi, x, empty_vec(), thetas, theta_rng);
      return spectral_distance(m, target);
    } catch (const std::exception&) {
      ++rejected;
      return kInf;
    }
  };

  const auto starts = lhs_sample(x_lab, opts.n_starts, opts.rng.substream(1));

  DesignResult result;
  result.per_start.resize(starts.size());
  parallel_for(starts.size(), [&](std::size_t s) {
    auto& record = result.per_start[s];
    record.start = starts[s];
    try {
      const SearchResult r = pattern_search(objective, starts[s], x_lab, opts);
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
  require_numeric(best != nullptr, "optimize_scenario: every start failed");

  result.best_point = best->optimum;
  result.best_objective = best->objective;
  result.target_norm = target_norm;
  result.normalized_objective = target_norm > 0.0 ? best->objective / target_norm : kInf;
  result.flat_coordinates = flat_directions(objective, result.best_point,
                                            result.best_objective, x_lab);
  (void)rejected;
  return result;
}

SensorChoice optimize_sensor(const std::vector<FunctionalPtr>& h_lab, const SensorDomain& z_lab,
                             const Eigen::VectorXd& x_val, const ModelFunctional& h_qoi,
                             const Distribution& theta_dist, const OptimizerOptions& opts,
                             int n_samples) {
  opts.validate();
  require(!h_lab.empty(), "optimize_sensor: H_lab must be nonempty");

  const RngSpec theta_rng = opts.rng.substream(0);
  const auto thetas = sample(theta_dist, n_samples, theta_rng);
  const InfluenceMatrix target =
      influence_matrix_from_samples(h_qoi, x_val, empty_vec(), thetas, theta_rng);
  require_numeric(target.m.trace() > 0.0,
                  "optimize_sensor: target influence matrix has nonpositive trace");

  SensorChoice choice;
  for (std::size_t fi = 0; fi < h_lab.size(); ++fi) {
    const ModelFunctional& h_obs = *h_lab[fi];
    const Objective objective = [&](const Eigen::VectorXd& z) -> double {
      try {
        const InfluenceMatrix m =
            influence_matrix_from_samples(h_obs, x_val, z, thetas, theta_rng);
        return normalized_distance(m, target);
      } catch (const std::exception&) {
        return kInf;
      }
    };

    SensorChoice::Candidate cand;
    cand.functional_id = h_obs.id();
    cand.objective = kInf;

    if (h_obs.dim_z() == 0) {
      cand.z = empty_vec();
      cand.objective = objective(empty_vec());
    } else if (const auto* grid = std::get_if<std::vector<Eigen::VectorXd>>(&z_lab)) {
      require(!grid->empty(), "optimize_sensor: empty sensor grid");
      std::vector<double> values(grid->size());
      parallel_for(grid->size(), [&](std::size_t i) { values[i] = objective((*grid)[i]); });
      for (std::size_t i = 0; i < grid->size(); ++i) {
        if (is_finite(values[i]) && values[i] < cand.objective) {
          cand.objective = values[i];
          cand.z = (*grid)[i];
        }
      }
    } else {
      const Box& zbox = std::get<Box>(z_lab);
      require(zbox.dim() == h_obs.dim_z(), "optimize_sensor: sensor box dimension mismatch");
      const auto starts = lhs_sample(zbox, opts.n_starts, opts.rng.substream(2 + fi));
      std::vector<SearchResult> results(starts.size());
      std::vector<char> ok(starts.size(), 0);
      parallel_for(starts.size(), [&](std::size_t s) {
        try {
          results[s] = pattern_search(objective, starts[s], zbox, opts);
          ok[s] = 1;
        } catch (const std::exception&) {
        }
      });
      for (std::size_t s = 0; s < starts.size(); ++s) {
        if (ok[s] && is_finite(results[s].f) && results[s].f < cand.objective) {
          cand.objective = results[s].f;
          cand.z = results[s].x;
        }
      }
    }

    cand.degenerate = !is_finite(cand.objective);
    choice.per_functional.push_back(cand);
    if (!cand.degenerate &&
        (choice.functional_index < 0 || cand.objective < choice.objective)) {
      choice.functional_index = static_cast<int>(fi);
      choice.functional_id = cand.functional_id;
      choice.z = cand.z;
      choice.objective = cand.objective;
    }
  }

  require_numeric(choice.functional_index >= 0,
                  "optimize_sensor: every candidate functional is degenerate");
  return choice;
}

SensorScan sensor_scan(const ModelFunctional& h_obs, const Eigen::VectorXd& x_val,
                       const ModelFunctional& h_qoi, const Distribution& theta_dist,
                       const std::vector<Eigen::VectorXd>& grid, const RngSpec& rng,
                       int n_samples) {
  require(!grid.empty(), "sensor_scan: empty grid");
  const RngSpec theta_rng = rng.substream(0);
  const auto thetas = sample(theta_dist, n_samples, theta_rng);
  const InfluenceMatrix target =
      influence_matrix_from_samples(h_qoi, x_val, empty_vec(), thetas, theta_rng);

  SensorScan scan;
  scan.functional_id = h_obs.id();
  scan.grid = grid;
  scan.values.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(grid.size(), [&](std::size_t i) {
    try {
      const InfluenceMatrix m =
          influence_matrix_from_samples(h_obs, x_val, grid[i], thetas, theta_rng);
      scan.values[i] = normalized_distance(m, target);
    } catch (const std::exception&) {
      // recorded as missing
    }
  });
  return scan;
}

RecoveryTable verify_recovery(const ModelFunctional& h_qoi, const Eigen::VectorXd& x_pred,
                              const Distribution& theta_dist, const Box& x_full, int n_starts,
                              const OptimizerOptions& opts, int n_samples) {
  require(x_full.contains(x_pred), "verify_recovery: x_pred must lie in the full control box");
  OptimizerOptions o = opts;
  o.n_starts = n_starts;
  const DesignResult res = optimize_scenario(h_qoi, x_pred, theta_dist, x_full, o, n_samples);

  RecoveryTable table;
  table.target_norm = res.target_norm;
  table.flat_coordinates = res.flat_coordinates;
  for (const auto& r : res.per_start) {
    RecoveryTable::Row row;
    row.start = r.start;
    row.optimum = r.optimum;
    row.l2_error = (r.optimum - x_pred).norm();
    row.normalized_objective =
        res.target_norm > 0.0 ? r.objective / res.target_norm : std::numeric_limits<double>::quiet_NaN();
    row.evals = r.evals;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace oved
