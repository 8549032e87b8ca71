#include "oved/pattern_search.hpp"

namespace oved {

SearchResult pattern_search(const Objective& f, const Eigen::VectorXd& x0, const Box& box,
                            const OptimizerOptions& opts) {
  opts.validate();
  require(box.contains(x0), "pattern_search: start point outside the box");

  SearchResult best;
  best.x = x0;
  best.f = f(x0);
  best.evals = 1;
  require_numeric(is_finite(best.f), "pattern_search: objective not finite at the start point");

  const Eigen::VectorXd width = box.width();
  const Eigen::Index d = box.dim();
  double mesh = opts.initial_mesh;

  while (mesh >= opts.min_mesh && best.evals < opts.max_evals) {
    bool improved = false;
    for (Eigen::Index i = 0; i < d && !improved; ++i) {
      if (width[i] == 0.0) continue;
      for (const double sign : {+1.0, -1.0}) {
        Eigen::VectorXd cand = best.x;
        cand[i] += sign * mesh * width[i];
        cand = box.clamp(cand);
        if (cand == best.x) continue;
        if (best.evals >= opts.max_evals) break;
        const double fc = f(cand);
        ++best.evals;
        if (is_finite(fc) && fc < best.f) {
          best.x = std::move(cand);
          best.f = fc;
          improved = true;
          break;
        }
      }
    }
    mesh = improved ? std::min(2.0 * mesh, opts.initial_mesh) : 0.5 * mesh;
  }
  return best;
}

}  // namespace oved
