#include "oved/functional.hpp"

#include <functional>

namespace oved {

const char* to_string(GradientMethod m) {
  switch (m) {
    case GradientMethod::analytic: return "analytic";
    case GradientMethod::adjoint: return "adjoint";
    case GradientMethod::finite_difference: return "finite-difference";
  }
  return "unknown";
}

ModelFunctional::ModelFunctional(std::string id, FunctionalKind kind, int dim_x, int dim_theta,
                                 int dim_z, std::vector<std::string> coord_labels)
    : id_(std::move(id)),
      kind_(kind),
      dim_x_(dim_x),
      dim_theta_(dim_theta),
      dim_z_(dim_z),
      coord_labels_(std::move(coord_labels)) {
  require(dim_x_ >= 0 && dim_theta_ >= 0 && dim_z_ >= 0, "ModelFunctional: negative arity");
  require(kind_ != FunctionalKind::qoi || dim_z_ == 0,
          "ModelFunctional: a QoI functional cannot depend on sensor parameters");
  if (coord_labels_.empty()) {
    for (int i = 0; i < dim_x_; ++i) coord_labels_.push_back("x" + std::to_string(i));
    for (int i = 0; i < dim_theta_; ++i) coord_labels_.push_back("theta" + std::to_string(i));
  }
  require(static_cast<int>(coord_labels_.size()) == dim_x_ + dim_theta_,
          "ModelFunctional: coordinate label count mismatch");
}

void ModelFunctional::check_arity(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& z) const {
  require(x.size() == dim_x_, id_ + ": control dimension mismatch");
  require(theta.size() == dim_theta_, id_ + ": model-parameter dimension mismatch");
  require(z.size() == dim_z_, id_ + ": sensor dimension mismatch");
}

Eigen::VectorXd ModelFunctional::grad_xtheta(const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& theta,
                                             const Eigen::VectorXd& z) const {
  check_arity(x, theta, z);
  const int d = dim_x_ + dim_theta_;
  Eigen::VectorXd p(d);
  p << x, theta;
  Eigen::VectorXd g(d);
  for (int i = 0; i < d; ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(p[i]));
    Eigen::VectorXd pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    const double fp = value(pp.head(dim_x_), pp.tail(dim_theta_), z);
    const double fm = value(pm.head(dim_x_), pm.tail(dim_theta_), z);
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

CallableFunctional::CallableFunctional(std::string id, FunctionalKind kind, int dim_x,
                                       int dim_theta, int dim_z, Fn fn,
                                       std::vector<std::string> labels)
    : ModelFunctional(std::move(id), kind, dim_x, dim_theta, dim_z, std::move(labels)),
      fn_(std::move(fn)) {}

double CallableFunctional::value(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& z) const {
  check_arity(x, theta, z);
  return fn_(x, theta, z);
}

}  // namespace oved
