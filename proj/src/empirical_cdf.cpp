#include "oved/empirical_cdf.hpp"

#include <algorithm>

namespace oved {

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  require(!sorted_.empty(), "empirical_cdf: sample list must be nonempty");
  for (double s : sorted_) require(is_finite(s), "empirical_cdf: non-finite sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double s) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), s);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

EmpiricalCdf empirical_cdf(std::vector<double> samples) { return EmpiricalCdf(std::move(samples)); }

double area_metric(const EmpiricalCdf& f1, const EmpiricalCdf& f2) {
  // Merge breakpoints; both CDFs are constant between consecutive ones and
  // the integrand vanishes outside [min, max] of the union.
  std::vector<double> pts;
  pts.reserve(f1.size() + f2.size());
  pts.insert(pts.end(), f1.sorted_samples().begin(), f1.sorted_samples().end());
  pts.insert(pts.end(), f2.sorted_samples().begin(), f2.sorted_samples().end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  double area = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double s = pts[i];
    area += std::abs(f1(s) - f2(s)) * (pts[i + 1] - s);
  }
  return area;
}

}  // namespace oved
