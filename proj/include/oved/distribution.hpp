#pragma once

#include <Eigen/Core>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "oved/common.hpp"
#include "oved/rng.hpp"

namespace oved {

// Immutable value object describing a (possibly multivariate) probability
// distribution. Multivariate distributions are products of independent
// components; parameter validity is enforced at construction, never at
// sample time.
class Distribution {
 public:
  struct Normal {
    double mean;
    double stddev;
  };
  struct Uniform {
    double lo;
    double hi;
  };
  struct Dirac {
    double point;
  };
  struct Empirical {
    std::vector<double> samples;  // kept sorted
  };
  struct Product {
    std::vector<Distribution> components;
  };
  using Node = std::variant<Normal, Uniform, Dirac, Empirical, Product>;

  static Distribution normal(double mean, double stddev);
  static Distribution uniform(double lo, double hi);
  static Distribution dirac(double point);
  static Distribution empirical(std::vector<double> samples);
  static Distribution product(std::vector<Distribution> components);

  int dim() const;

  void sample_into(RngStream& rng, std::span<double> out) const;
  Eigen::VectorXd sample(RngStream& rng) const;

  Eigen::VectorXd mean() const;

  // Log density up to additive constants per component family. Throws for
  // Empirical components (no density is defined for an atom list).
  double log_density(const Eigen::VectorXd& x) const;

  const Node& node() const { return node_; }
  bool is_dirac() const;  // true iff every component is a Dirac atom

 private:
  explicit Distribution(Node n) : node_(std::move(n)) {}
  Node node_;
};

// Draw n independent samples (each of dimension dist.dim()).
std::vector<Eigen::VectorXd> sample(const Distribution& dist, int n, const RngSpec& rng);

}  // namespace oved
