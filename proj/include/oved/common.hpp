#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace oved {

// Thrown for invalid arguments / configuration detected at construction time.
using invalid_argument = std::invalid_argument;

// Thrown for numerical failures at evaluation time (non-finite values,
// solver breakdown, degenerate inputs).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw invalid_argument(msg);
}

inline void require_numeric(bool cond, const std::string& msg) {
  if (!cond) throw numeric_error(msg);
}

inline bool is_finite(double x) { return std::isfinite(x); }

}  // namespace oved
