#pragma once

#include <vector>

#include "oved/box.hpp"
#include "oved/distribution.hpp"

namespace oved {

// Latin hypercube sample: for every coordinate the n points occupy the n
// equal-width strata of [lower, upper] in a random permutation. A degenerate
// coordinate (lower == upper) collapses to that value.
std::vector<Eigen::VectorXd> lhs_sample(const Box& box, int n, const RngSpec& rng);

}  // namespace oved
