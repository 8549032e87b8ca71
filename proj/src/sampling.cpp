#include "oved/sampling.hpp"

#include <numeric>

namespace oved {

std::vector<Eigen::VectorXd> lhs_sample(const Box& box, int n, const RngSpec& rng) {
  require(n >= 1, "lhs_sample: n must be >= 1");
  require(box.dim() >= 1, "lhs_sample: empty box");
  RngStream stream(rng);
  const auto d = box.dim();

  std::vector<Eigen::VectorXd> points(static_cast<std::size_t>(n), Eigen::VectorXd(d));
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with the stream's uniforms.
    for (int i = n - 1; i > 0; --i) {
      auto k = static_cast<int>(stream.uniform01() * static_cast<double>(i + 1));
      if (k > i) k = i;
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
    }
    const double lo = box.lower[j];
    const double w = (box.upper[j] - lo) / static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
      if (w == 0.0) {
        points[static_cast<std::size_t>(i)][j] = lo;
      } else {
        const double u = stream.uniform01();
        points[static_cast<std::size_t>(i)][j] =
            lo + w * (static_cast<double>(perm[static_cast<std::size_t>(i)]) + u);
      }
    }
  }
  return points;
}

}  // namespace oved
