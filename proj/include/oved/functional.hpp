#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oved/common.hpp"

namespace oved {

enum class FunctionalKind { observable, qoi };
enum class GradientMethod { analytic, adjoint, finite_difference };

const char* to_string(GradientMethod m);

// Deterministic model functional h(x, theta, z) with a gradient contract
// with respect to (x, theta). QoI-kind functionals take no sensor argument.
// The default gradient is a central finite difference with step
// h_i = max(1e-6, 1e-6 |p_i|); model families override it with analytic or
// adjoint gradients.
class ModelFunctional {
 public:
  ModelFunctional(std::string id, FunctionalKind kind, int dim_x, int dim_theta, int dim_z,
                  std::vector<std::string> coord_labels);
  virtual ~ModelFunctional() = default;

  const std::string& id() const { return id_; }
  FunctionalKind kind() const { return kind_; }
  int dim_x() const { return dim_x_; }
  int dim_theta() const { return dim_theta_; }
  int dim_z() const { return dim_z_; }

  // Labels of the (x, theta) coordinates, in influence-matrix order.
  const std::vector<std::string>& coord_labels() const { return coord_labels_; }

  virtual double value(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& z) const = 0;

  // Gradient with respect to (x1..x_dx, theta1..theta_dtheta).
  virtual Eigen::VectorXd grad_xtheta(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& z) const;

  virtual GradientMethod gradient_method() const { return GradientMethod::finite_difference; }

 protected:
  void check_arity(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& z) const;

 private:
  std::string id_;
  FunctionalKind kind_;
  int dim_x_, dim_theta_, dim_z_;
  std::vector<std::string> coord_labels_;
};

using FunctionalPtr = std::shared_ptr<const ModelFunctional>;

// Wraps a plain callable as a functional (finite-difference gradient).
class CallableFunctional final : public ModelFunctional {
 public:
  using Fn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                  const Eigen::VectorXd&)>;
  CallableFunctional(std::string id, FunctionalKind kind, int dim_x, int dim_theta, int dim_z,
                     Fn fn, std::vector<std::string> labels = {});

  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
               const Eigen::VectorXd& z) const override;

 private:
  Fn fn_;
};

}  // namespace oved
