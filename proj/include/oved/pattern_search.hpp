#pragma once

#include <functional>

#include "oved/box.hpp"
#include "oved/rng.hpp"

namespace oved {

struct OptimizerOptions {
  int max_evals = 2000;        // per start
  double initial_mesh = 0.25;  // fraction of the box width
  double min_mesh = 1e-6;
  int n_starts = 10;
  RngSpec rng;

  void validate() const {
    require(max_evals >= 1, "OptimizerOptions: max_evals must be >= 1");
    require(min_mesh > 0.0 && min_mesh < initial_mesh && initial_mesh <= 1.0,
            "OptimizerOptions: requires 0 < min_mesh < initial_mesh <= 1");
    require(n_starts >= 1, "OptimizerOptions: n_starts must be >= 1");
  }
};

struct SearchResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Box-constrained compass search. Polls +/- e_i scaled per coordinate by the
// box width in a fixed order, moving to the first improving candidate; the
// mesh halves after a failed poll and doubles (capped at the initial value)
// after a successful one. Terminates when the mesh drops below min_mesh or
// the evaluation budget is exhausted. Non-finite objective values reject the
// candidate; a non-finite value at x0 is an error.
SearchResult pattern_search(const Objective& f, const Eigen::VectorXd& x0, const Box& box,
                            const OptimizerOptions& opts);

}  // namespace oved
