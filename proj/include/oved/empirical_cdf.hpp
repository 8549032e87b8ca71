#pragma once

#include <vector>

#include "oved/common.hpp"

namespace oved {

// Right-continuous step CDF of a finite sample: F(s) = #{samples <= s} / n.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples);

  double operator()(double s) const;

  const std::vector<double>& sorted_samples() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }
  double min() const { return sorted_.front(); }
  double max() const { return sorted_.back(); }

 private:
  std::vector<double> sorted_;
};

EmpiricalCdf empirical_cdf(std::vector<double> samples);

// Area validation metric between two step CDFs: the integral of |F1 - F2|,
// computed exactly by piecewise-constant integration over the merged
// breakpoints.
double area_metric(const EmpiricalCdf& f1, const EmpiricalCdf& f2);

}  // namespace oved
