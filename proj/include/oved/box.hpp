#pragma once

#include <Eigen/Core>

#include "oved/common.hpp"

namespace oved {

// Rectangular constraint set with closed-interval, componentwise membership.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box() = default;
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    require(lower.size() == upper.size(), "Box: lower/upper dimension mismatch");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      require(is_finite(lower[i]) && is_finite(upper[i]), "Box: non-finite bound");
      require(lower[i] <= upper[i], "Box: lower > upper in coordinate " + std::to_string(i));
    }
  }

  Eigen::Index dim() const { return lower.size(); }

  bool contains(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) return false;
    for (Eigen::Index i = 0; i < dim(); ++i)
      if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
  }

  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }

  Eigen::VectorXd width() const { return upper - lower; }
};

}  // namespace oved
