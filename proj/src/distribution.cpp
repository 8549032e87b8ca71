#include "oved/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oved {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Distribution Distribution::normal(double mean, double stddev) {
  require(is_finite(mean) && is_finite(stddev), "Normal: non-finite parameter");
  require(stddev > 0.0, "Normal: stddev must be > 0");
  return Distribution(Node{Normal{mean, stddev}});
}

Distribution Distribution::uniform(double lo, double hi) {
  require(is_finite(lo) && is_finite(hi), "Uniform: non-finite bound");
  require(lo < hi, "Uniform: requires lo < hi");
  return Distribution(Node{Uniform{lo, hi}});
}

Distribution Distribution::dirac(double point) {
  require(is_finite(point), "Dirac: non-finite point");
  return Distribution(Node{Dirac{point}});
}

Distribution Distribution::empirical(std::vector<double> samples) {
  require(!samples.empty(), "Empirical: sample list must be nonempty");
  for (double s : samples) require(is_finite(s), "Empirical: non-finite sample");
  std::sort(samples.begin(), samples.end());
  return Distribution(Node{Empirical{std::move(samples)}});
}

Distribution Distribution::product(std::vector<Distribution> components) {
  require(!components.empty(), "Product: needs at least one component");
  return Distribution(Node{Product{std::move(components)}});
}

int Distribution::dim() const {
  if (const auto* p = std::get_if<Product>(&node_)) {
    int d = 0;
    for (const auto& c : p->components) d += c.dim();
    return d;
  }
  return 1;
}

void Distribution::sample_into(RngStream& rng, std::span<double> out) const {
  struct Visitor {
    RngStream& rng;
    std::span<double> out;
    void operator()(const Normal& n) { out[0] = n.mean + n.stddev * rng.normal(); }
    void operator()(const Uniform& u) { out[0] = rng.uniform(u.lo, u.hi); }
    void operator()(const Dirac& d) { out[0] = d.point; }
    void operator()(const Empirical& e) {
      const auto n = e.samples.size();
      auto idx = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n));
      if (idx >= n) idx = n - 1;
      out[0] = e.samples[idx];
    }
    void operator()(const Product& p) {
      std::size_t offset = 0;
      for (const auto& c : p.components) {
        const auto d = static_cast<std::size_t>(c.dim());
        c.sample_into(rng, out.subspan(offset, d));
        offset += d;
      }
    }
  };
  require(static_cast<int>(out.size()) == dim(), "sample_into: output span size mismatch");
  std::visit(Visitor{rng, out}, node_);
}

Eigen::VectorXd Distribution::sample(RngStream& rng) const {
  Eigen::VectorXd out(dim());
  sample_into(rng, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Eigen::VectorXd Distribution::mean() const {
  struct Visitor {
    Eigen::VectorXd operator()(const Normal& n) const { return Eigen::VectorXd::Constant(1, n.mean); }
    Eigen::VectorXd operator()(const Uniform& u) const {
      return Eigen::VectorXd::Constant(1, 0.5 * (u.lo + u.hi));
    }
    Eigen::VectorXd operator()(const Dirac& d) const { return Eigen::VectorXd::Constant(1, d.point); }
    Eigen::VectorXd operator()(const Empirical& e) const {
      const double m = std::accumulate(e.samples.begin(), e.samples.end(), 0.0) /
                       static_cast<double>(e.samples.size());
      return Eigen::VectorXd::Constant(1, m);
    }
    Eigen::VectorXd operator()(const Product& p) const {
      Eigen::VectorXd out;
      for (const auto& c : p.components) {
        Eigen::VectorXd cm = c.mean();
        Eigen::VectorXd tmp(out.size() + cm.size());
        tmp << out, cm;
        out = std::move(tmp);
      }
      return out;
    }
  };
  return std::visit(Visitor{}, node_);
}

double Distribution::log_density(const Eigen::VectorXd& x) const {
  require(x.size() == dim(), "log_density: dimension mismatch");
  struct Visitor {
    const Eigen::VectorXd& x;
    double operator()(const Normal& n) const {
      const double z = (x[0] - n.mean) / n.stddev;
      return -0.5 * z * z - std::log(n.stddev) - 0.5 * std::log(2.0 * M_PI);
    }
    double operator()(const Uniform& u) const {
      if (x[0] < u.lo || x[0] > u.hi) return kNegInf;
      return -std::log(u.hi - u.lo);
    }
    double operator()(const Dirac& d) const { return x[0] == d.point ? 0.0 : kNegInf; }
    double operator()(const Empirical&) const {
      throw invalid_argument("log_density: empirical distributions have no density");
    }
    double operator()(const Product& p) const {
      double total = 0.0;
      int offset = 0;
      for (const auto& c : p.components) {
        const int d = c.dim();
        total += c.log_density(x.segment(offset, d));
        offset += d;
      }
      return total;
    }
  };
  return std::visit(Visitor{x}, node_);
}

bool Distribution::is_dirac() const {
  return std::visit(
      [](const auto& node) -> bool {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          return true;
        } else if constexpr (std::is_same_v<T, Product>) {
          return std::all_of(node.components.begin(), node.components.end(),
                             [](const Distribution& c) { return c.is_dirac(); });
        } else {
          return false;
        }
      },
      node_);
}

std::vector<Eigen::VectorXd> sample(const Distribution& dist, int n, const RngSpec& rng) {
  require(n >= 1, "sample: n must be >= 1");
  RngStream stream(rng);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(dist.sample(stream));
  return out;
}

}  // namespace oved
