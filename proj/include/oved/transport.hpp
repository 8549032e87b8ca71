#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "oved/functional.hpp"

namespace oved::transport {

// Structured cell grid over a channel [0,W] x [0,H] with an optional solid
// mask (dock rectangles). Cells are row-major, index j*nx + i.
struct Grid {
  double width = 5.0;
  double height = 2.0;
  int nx = 64;
  int ny = 32;
  std::vector<std::uint8_t> solid;

  static Grid channel(int nx, int ny, double width = 5.0, double height = 2.0);
  // Adds the two dock rectangles of the paper geometry:
  // [1.4,1.6] x [0,0.4] and [2.6,2.8] x [0,0.8].
  static Grid channel_with_docks(int nx, int ny, double width = 5.0, double height = 2.0);

  double dx() const { return width / nx; }
  double dy() const { return height / ny; }
  int cell(int i, int j) const { return j * nx + i; }
  bool is_solid(int i, int j) const { return solid[static_cast<std::size_t>(cell(i, j))] != 0; }
  double xc(int i) const { return (i + 0.5) * dx(); }
  double yc(int j) const { return (j + 0.5) * dy(); }
  int n_fluid() const;

  void mask_rect(double x0, double x1, double y0, double y1);
};

// Node-based velocity samples on the (nx+1) x (ny+1) grid corners.
struct VelocityField {
  Eigen::VectorXd vx;
  Eigen::VectorXd vy;

  // Fully developed quadratic inflow profile extended over the channel:
  // v1(y) = v_max (4/H^2) (H - y) y (peak v_max at mid-height), v2 = 0.
  static VelocityField poiseuille(const Grid& grid, double v_max = 1.0);
  // Plain-text file: "nx ny width height" header then one "vx vy" row per
  // node, j-major. Dimensions must match; nodes interior to the solid mask
  // are zeroed.
  static VelocityField load(const std::string& path, const Grid& grid);
  void save(const std::string& path, const Grid& grid) const;

  int node(const Grid& g, int i, int j) const { return j * (g.nx + 1) + i; }
};

// Control parameters of the Dirichlet inflow profile: mollifier center z0,
// half-width L, intensity c.
struct Control {
  double z0;
  double L;
  double c;

  static Control from_vector(const Eigen::VectorXd& x, double height);
  Eigen::VectorXd to_vector() const;
};

// Mollifier boundary profile: c * exp( ( |(y - z0)/L| - 1 )^-1 ) inside the
// support |y - z0| < L, zero outside (all derivatives vanish at the support
// boundary).
double mollifier(const Control& x, double y);
// Gradient with respect to (z0, L, c).
Eigen::Vector3d mollifier_grad(const Control& x, double y);

// Axis-aligned rectangle used for QoI regions and sensor footprints.
struct Region {
  double x0, x1, y0, y1;

  static Region square(double cx, double cy, double side = 0.1);
  Region clipped(const Grid& g) const;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct ConcentrationField {
  Eigen::VectorXd phi;  // one value per fluid cell (unknown ordering)
  Control control{0, 1, 0};
  double k = 0.0;
};

// Steady advection-diffusion solver on the grid: central 5-point diffusion
// with coefficient exp(k), first-order upwind advection on face velocities,
// Dirichlet mollifier data on the west boundary, zero diffusive flux
// elsewhere, solid cells excluded. Gradients of region-mean functionals are
// exact discrete adjoints (transpose of the assembled operator), so they
// match finite differences of the discrete solution to solver precision.
class TransportModel {
 public:
  TransportModel(Grid grid, VelocityField vel);

  const Grid& grid() const { return grid_; }
  const VelocityField& velocity() const { return vel_; }

  static Region default_omega1() { return Region{1.7, 2.3, 0.1, 0.5}; }
  static Region default_omega2() { return Region{3.4, 4.0, 1.5, 1.9}; }

  ConcentrationField solve(const Control& x, double k) const;

  double mean_concentration(const ConcentrationField& field, const Region& region) const;

  // Solves A^T lambda = -dh/dphi for the region-mean functional.
  Eigen::VectorXd adjoint(double k, const Region& region) const;

  // dh/d(z0, L, c) = -lambda^T (db/dx); b is assembled from the mollifier
  // on west-boundary fluid cells.
  Eigen::Vector3d gradient_control(double k, const Control& x,
                                   const Eigen::VectorXd& lambda) const;

  // dh/dk = exp(k) lambda^T (D phi - d_b), the unit-coefficient diffusion
  // operator applied to the full solution including its boundary data.
  double gradient_diffusivity(double k, const Control& x, const ConcentrationField& field,
                              const Eigen::VectorXd& lambda) const;

  double functional_value(const Control& x, double k, const Region& region) const;
  // Gradient ordered (z0, L, c, k).
  Eigen::Vector4d functional_gradient(const Control& x, double k, const Region& region) const;

  // Operator access for transpose-identity checks: y = A(k) v and A(k)^T v.
  Eigen::VectorXd apply_operator(double k, const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_operator_transpose(double k, const Eigen::VectorXd& v) const;
  int n_unknowns() const { return n_unknowns_; }

  // Region-average weight vector (dh/dphi) over unknowns.
  Eigen::VectorXd region_weights(const Region& region) const;

 private:
  struct WestEntry {
    int row;       // unknown index of the west-column fluid cell
    double y;      // face-center height, where the mollifier is evaluated
    double dcoef;  // diffusion Dirichlet coefficient (unit diffusivity)
    double acoef;  // advective inflow coefficient
  };
  struct Factorization;

  void assemble();
  Eigen::VectorXd assemble_rhs(const Control& x, double k) const;
  std::shared_ptr<const Factorization> factorization(double k) const;

  Grid grid_;
  VelocityField vel_;
  Eigen::SparseMatrix<double> diffusion_;  // unit-coefficient part
  Eigen::SparseMatrix<double> advection_;
  std::vector<WestEntry> west_;
  std::vector<int> unknown_of_cell_;
  std::vector<int> cell_of_unknown_;
  int n_unknowns_ = 0;

  // Factorizations and adjoint solutions are cached per worker thread, so a
  // cached object is never used concurrently.
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<std::thread::id, double>, std::shared_ptr<const Factorization>>
      lu_cache_;
  using AdjointKey = std::tuple<std::thread::id, double, double, double, double, double>;
  mutable std::map<AdjointKey, std::shared_ptr<const Eigen::VectorXd>> adjoint_cache_;
};

// Functionals over (x, theta) = (z0, L, c, k). QoI functionals average over
// a fixed region; the observable averages over the 0.1-side square centered
// at z = (z1, z2).
FunctionalPtr qoi_functional(std::shared_ptr<const TransportModel> model, const Region& region,
                             const std::string& id);
FunctionalPtr observable_functional(std::shared_ptr<const TransportModel> model,
                                    double side = 0.1);

}  // namespace oved::transport
