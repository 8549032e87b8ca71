#include "oved/transport.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <fstream>
#include <sstream>

namespace oved::transport {

Grid Grid::channel(int nx, int ny, double width, double height) {
  require(nx >= 4 && ny >= 4, "Grid: nx and ny must be >= 4");
  require(width > 0.0 && height > 0.0, "Grid: domain must have positive size");
  Grid g;
  g.width = width;
  g.height = height;
  g.nx = nx;
  g.ny = ny;
  g.solid.assign(static_cast<std::size_t>(nx) * ny, 0);
  return g;
}

Grid Grid::channel_with_docks(int nx, int ny, double width, double height) {
  Grid g = channel(nx, ny, width, height);
  g.mask_rect(1.4, 1.6, 0.0, 0.4);
  g.mask_rect(2.6, 2.8, 0.0, 0.8);
  return g;
}

void Grid::mask_rect(double x0, double x1, double y0, double y1) {
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (xc(i) >= x0 && xc(i) <= x1 && yc(j) >= y0 && yc(j) <= y1)
        solid[static_cast<std::size_t>(cell(i, j))] = 1;
}

int Grid::n_fluid() const {
  int n = 0;
  for (auto s : solid)
    if (!s) ++n;
  return n;
}

VelocityField VelocityField::poiseuille(const Grid& grid, double v_max) {
  VelocityField f;
  const int nnx = grid.nx + 1, nny = grid.ny + 1;
  f.vx.resize(static_cast<Eigen::Index>(nnx) * nny);
  f.vy = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nnx) * nny);
  const double h = grid.height;
  for (int j = 0; j < nny; ++j) {
    const double y = j * grid.dy();
    const double v = v_max * 4.0 / (h * h) * (h - y) * y;
    for (int i = 0; i < nnx; ++i) f.vx[f.node(grid, i, j)] = v;
  }
  return f;
}

VelocityField VelocityField::load(const std::string& path, const Grid& grid) {
  std::ifstream in(path);
  require(in.good(), "velocity load: cannot open " + path);
  int nx = 0, ny = 0;
  double w = 0.0, h = 0.0;
  require(static_cast<bool>(in >> nx >> ny >> w >> h), "velocity load: bad header");
  require(nx == grid.nx && ny == grid.ny, "velocity load: grid cell counts do not match");
  require(std::abs(w - grid.width) < 1e-9 && std::abs(h - grid.height) < 1e-9,
          "velocity load: domain size does not match");
  VelocityField f;
  const int nnodes = (nx + 1) * (ny + 1);
  f.vx.resize(nnodes);
  f.vy.resize(nnodes);
  for (int n = 0; n < nnodes; ++n)
    require(static_cast<bool>(in >> f.vx[n] >> f.vy[n]), "velocity load: truncated node data");

  // Zero nodes that touch no fluid cell.
  for (int j = 0; j <= grid.ny; ++j)
    for (int i = 0; i <= grid.nx; ++i) {
      bool fluid = false;
      for (int dj = -1; dj <= 0 && !fluid; ++dj)
        for (int di = -1; di <= 0 && !fluid; ++di) {
          const int ci = i + di, cj = j + dj;
          if (ci >= 0 && ci < grid.nx && cj >= 0 && cj < grid.ny && !grid.is_solid(ci, cj))
            fluid = true;
        }
      if (!fluid) {
        f.vx[f.node(grid, i, j)] = 0.0;
        f.vy[f.node(grid, i, j)] = 0.0;
      }
    }
  return f;
}

void VelocityField::save(const std::string& path, const Grid& grid) const {
  std::ofstream out(path);
  require(out.good(), "velocity save: cannot open " + path);
  out.precision(17);
  out << grid.nx << ' ' << grid.ny << ' ' << grid.width << ' ' << grid.height << '\n';
  for (Eigen::Index n = 0; n < vx.size(); ++n) out << vx[n] << ' ' << vy[n] << '\n';
}

Control Control::from_vector(const Eigen::VectorXd& x, double height) {
  require(x.size() == 3, "transport control must have 3 components (z0, L, c)");
  require(x.allFinite(), "transport control must be finite");
  Control ctl{x[0], x[1], x[2]};
  require(ctl.L > 0.0, "transport control requires L > 0");
  require(ctl.c >= 0.0, "transport control requires c >= 0");
  require(ctl.z0 >= 0.0 && ctl.z0 <= height, "transport control requires 0 <= z0 <= height");
  return ctl;
}

Eigen::VectorXd Control::to_vector() const {
  Eigen::VectorXd v(3);
  v << z0, L, c;
  return v;
}

double mollifier(const Control& x, double y) {
  const double s = std::abs((y - x.z0) / x.L);
  if (s >= 1.0 - 1e-12) return 0.0;
  return x.c * std::exp(1.0 / (s - 1.0));
}

Eigen::Vector3d mollifier_grad(const Control& x, double y) {
  const double d = y - x.z0;
  const double s = std::abs(d / x.L);
  if (s >= 1.0 - 1e-12) return Eigen::Vector3d::Zero();
  const double e = std::exp(1.0 / (s - 1.0));
  if (e == 0.0) return Eigen::Vector3d::Zero();
  const double dphi_ds = -x.c * e / ((s - 1.0) * (s - 1.0));
  const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  Eigen::Vector3d g;
  g[0] = dphi_ds * (-sign / x.L);   // d/dz0
  g[1] = dphi_ds * (-s / x.L);      // d/dL
  g[2] = e;                         // d/dc
  return g;
}

Region Region::square(double cx, double cy, double side) {
  const double h = 0.5 * side;
  return Region{cx - h, cx + h, cy - h, cy + h};
}

Region Region::clipped(const Grid& g) const {
  Region r = *this;
  r.x0 = std::max(r.x0, 0.0);
  r.y0 = std::max(r.y0, 0.0);
  r.x1 = std::min(r.x1, g.width);
  r.y1 = std::min(r.y1, g.height);
  return r;
}

struct TransportModel::Factorization {
  Eigen::SparseMatrix<double> a;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_t;
};

TransportModel::TransportModel(Grid grid, VelocityField vel)
    : grid_(std::move(grid)), vel_(std::move(vel)) {
  const auto nnodes = static_cast<Eigen::Index>(grid_.nx + 1) * (grid_.ny + 1);
  require(vel_.vx.size() == nnodes && vel_.vy.size() == nnodes,
          "TransportModel: velocity field does not match the grid");
  assemble();
}

namespace {

// Mean of the two node velocities spanning a face, zero next to solid cells.
struct FaceVelocities {
  const Grid& g;
  const VelocityField& v;

  bool fluid(int i, int j) const {
    return i >= 0 && i < g.nx && j >= 0 && j < g.ny && !g.is_solid(i, j);
  }
  // x-face i in [0, nx], between cells (i-1, j) and (i, j)
  double u(int i, int j) const {
    const bool left = fluid(i - 1, j), right = fluid(i, j);
    if (!left && !right) return 0.0;
    if ((i > 0 && !left) || (i < g.nx && !right)) return 0.0;  // face touches solid
    const int n0 = j * (g.nx + 1) + i;
    const int n1 = (j + 1) * (g.nx + 1) + i;
    return 0.5 * (v.vx[n0] + v.vx[n1]);
  }
  // y-face j in [0, ny], between cells (i, j-1) and (i, j)
  double w(int i, int j) const {
    const bool below = fluid(i, j - 1), above = fluid(i, j);
    if (!below && !above) return 0.0;
    if ((j > 0 && !below) || (j < g.ny && !above)) return 0.0;
    const int n0 = j * (g.nx + 1) + i;
    const int n1 = j * (g.nx + 1) + i + 1;
    return 0.5 * (v.vy[n0] + v.vy[n1]);
  }
};

}  // namespace

void TransportModel::assemble() {
  const int nx = grid_.nx, ny = grid_.ny;
  const double dx = grid_.dx(), dy = grid_.dy();

  unknown_of_cell_.assign(static_cast<std::size_t>(nx) * ny, -1);
  cell_of_unknown_.clear();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (!grid_.is_solid(i, j)) {
        unknown_of_cell_[static_cast<std::size_t>(grid_.cell(i, j))] =
            static_cast<int>(cell_of_unknown_.size());
        cell_of_unknown_.push_back(grid_.cell(i, j));
      }
  n_unknowns_ = static_cast<int>(cell_of_unknown_.size());
  require(n_unknowns_ > 0, "TransportModel: no fluid cells");

  const FaceVelocities face{grid_, vel_};
  std::vector<Eigen::Triplet<double>> dtrip, atrip;
  west_.clear();

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (grid_.is_solid(i, j)) continue;
      const int row = unknown_of_cell_[static_cast<std::size_t>(grid_.cell(i, j))];
      double dcoef_west = 0.0, acoef_west = 0.0;

      // --- x faces ---
      // west face of the cell
      {
        const double uf = face.u(i, j);
        if (i == 0) {
          // Dirichlet boundary: diffusion through the half cell, advective
          // inflow carries the boundary value.
          dtrip.emplace_back(row, row, 2.0 * dy / dx);
          dcoef_west = 2.0 * dy / dx;
          if (uf > 0.0)
            acoef_west = uf * dy;  // inflow from the boundary -> RHS
          else if (uf < 0.0)
            atrip.emplace_back(row, row, -uf * dy);  // outflow, upwind = P
        } else if (!grid_.is_solid(i - 1, j)) {
          const int col = unknown_of_cell_[static_cast<std::size_t>(grid_.cell(i - 1, j))];
          dtrip.emplace_back(row, row, dy / dx);
          dtrip.emplace_back(row, col, -dy / dx);
          // net outflux contribution of the west face: -uf * dy * phi_up
          if (uf > 0.0)
            atrip.emplace_back(row, col, -uf * dy);
          else if (uf < 0.0)
            atrip.emplace_back(row, row, -uf * dy);
        }
        // solid neighbor: no flux
      }
      // east face
      {
        const double uf = face.u(i + 1, j);
        if (i + 1 < nx && !grid_.is_solid(i + 1, j)) {
          const int col = unknown_of_cell_[static_cast<std::size_t>(grid_.cell(i + 1, j))];
          dtrip.emplace_back(row, row, dy / dx);
          dtrip.emplace_back(row, col, -dy / dx);
          if (uf > 0.0)
            atrip.emplace_back(row, row, uf * dy);
          else if (uf < 0.0)
            atrip.emplace_back(row, col, uf * dy);
        } else if (i + 1 == nx) {
          // outflow boundary: zero diffusive flux, upwind outflow only
          if (uf > 0.0) atrip.emplace_back(row, row, uf * dy);
          // inflow from outside a non-Dirichlet boundary carries zero value
        }
      }
      // --- y faces ---
      // south face
      {
        const double vf = face.w(i, j);
        if (j > 0 && !grid_.is_solid(i, j - 1)) {
          const int col = unknown_of_cell_[static_cast<std::size_t>(grid_.cell(i, j - 1))];
          dtrip.emplace_back(row, row, dx / dy);
          dtrip.emplace_back(row, col, -dx / dy);
          if (vf > 0.0)
            atrip.emplace_back(row, col, -vf * dx);
          else if (vf < 0.0)
            atrip.emplace_back(row, row, -vf * dx);
        } else if (j == 0) {
          if (vf < 0.0) atrip.emplace_back(row, row, -vf * dx);
        }
      }
      // north face
      {
        const double vf = face.w(i, j + 1);
        if (j + 1 < ny && !grid_.is_solid(i, j + 1)) {
          const int col = unknown_of_cell_[static_cast<std::size_t>(grid_.cell(i, j + 1))];
          dtrip.emplace_back(row, row, dx / dy);
          dtrip.emplace_back(row, col, -dx / dy);
          if (vf > 0.0)
            atrip.emplace_back(row, row, vf * dx);
          else if (vf < 0.0)
            atrip.emplace_back(row, col, vf * dx);
        } else if (j + 1 == ny) {
          if (vf > 0.0) atrip.emplace_back(row, row, vf * dx);
        }
      }

      if (i == 0) west_.push_back(WestEntry{row, grid_.yc(j), dcoef_west, acoef_west});
    }
  }

  diffusion_.resize(n_unknowns_, n_unknowns_);
  diffusion_.setFromTriplets(dtrip.begin(), dtrip.end());
  advection_.resize(n_unknowns_, n_unknowns_);
  advection_.setFromTriplets(atrip.begin(), atrip.end());
}

Eigen::VectorXd TransportModel::assemble_rhs(const Control& x, double k) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_unknowns_);
  const double ek = std::exp(k);
  for (const auto& e : west_) {
    const double phi_d = mollifier(x, e.y);
    if (phi_d != 0.0) b[e.row] += (ek * e.dcoef + e.acoef) * phi_d;
  }
  return b;
}

std::shared_ptr<const TransportModel::Factorization> TransportModel::factorization(
    double k) const {
  const auto key = std::make_pair(std::this_thread::get_id(), k);
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    const auto it = lu_cache_.find(key);
    if (it != lu_cache_.end()) return it->second;
  }
  auto fact = std::make_shared<Factorization>();
  fact->a = std::exp(k) * diffusion_ + advection_;
  fact->a.makeCompressed();
  fact->lu.compute(fact->a);
  require_numeric(fact->lu.info() == Eigen::Success,
                  "transport solve: operator factorization failed (singular system)");
  Eigen::SparseMatrix<double> at = fact->a.transpose();
  at.makeCompressed();
  fact->lu_t.compute(at);
  require_numeric(fact->lu_t.info() == Eigen::Success,
                  "transport adjoint: operator factorization failed (singular system)");
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    lu_cache_.emplace(key, fact);
  }
  return fact;
}

ConcentrationField TransportModel::solve(const Control& x, double k) const {
  require(is_finite(k), "transport solve: k must be finite");
  require_numeric(std::exp(k) > 0.0, "transport solve: diffusivity underflowed to zero");
  ConcentrationField field;
  field.control = x;
  field.k = k;
  const Eigen::VectorXd b = assemble_rhs(x, k);
  if (b.isZero(0.0)) {
    field.phi = Eigen::VectorXd::Zero(n_unknowns_);
    return field;
  }
  const auto fact = factorization(k);
  field.phi = fact->lu.solve(b);
  require_numeric(fact->lu.info() == Eigen::Success, "transport solve: back substitution failed");
  const double resid = (fact->a * field.phi - b).norm();
  require_numeric(resid <= 1e-10 * b.norm(),
                  "transport solve: residual " + std::to_string(resid) + " exceeds tolerance");
  return field;
}

Eigen::VectorXd TransportModel::region_weights(const Region& region) const {
  const Region r = region.clipped(grid_);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n_unknowns_);
  double total = 0.0;
  const double dx = grid_.dx(), dy = grid_.dy();
  for (int u = 0; u < n_unknowns_; ++u) {
    const int c = cell_of_unknown_[static_cast<std::size_t>(u)];
    const int i = c % grid_.nx, j = c / grid_.nx;
    const double ox = std::max(0.0, std::min(r.x1, (i + 1) * dx) - std::max(r.x0, i * dx));
    const double oy = std::max(0.0, std::min(r.y1, (j + 1) * dy) - std::max(r.y0, j * dy));
    const double overlap = ox * oy;
    if (overlap > 0.0) {
      w[u] = overlap;
      total += overlap;
    }
  }
  require_numeric(total > 0.0,
                  "transport region: no fluid cells intersect the region (solid or empty)");
  return w / total;
}

double TransportModel::mean_concentration(const ConcentrationField& field,
                                          const Region& region) const {
  require(field.phi.size() == n_unknowns_, "mean_concentration: field does not match the model");
  return region_weights(region).dot(field.phi);
}

Eigen::VectorXd TransportModel::adjoint(double k, const Region& region) const {
  const Region r = region.clipped(grid_);
  const auto key = AdjointKey{std::this_thread::get_id(), k, r.x0, r.x1, r.y0, r.y1};
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    const auto it = adjoint_cache_.find(key);
    if (it != adjoint_cache_.end()) return *it->second;
  }
  const Eigen::VectorXd g = region_weights(region);
  const auto fact = factorization(k);
  auto lambda = std::make_shared<Eigen::VectorXd>(fact->lu_t.solve((-g).eval()));
  require_numeric(fact->lu_t.info() == Eigen::Success, "transport adjoint: solve failed");
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    adjoint_cache_.emplace(key, lambda);
  }
  return *lambda;
}

Eigen::Vector3d TransportModel::gradient_control(double k, const Control& x,
                                                 const Eigen::VectorXd& lambda) const {
  require(lambda.size() == n_unknowns_, "gradient_control: adjoint does not match the model");
  const double ek = std::exp(k);
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (const auto& e : west_) {
    const Eigen::Vector3d dphi = mollifier_grad(x, e.y);
    if (!dphi.isZero(0.0)) g -= lambda[e.row] * (ek * e.dcoef + e.acoef) * dphi;
  }
  return g;
}

double TransportModel::gradient_diffusivity(double k, const Control& x,
                                            const ConcentrationField& field,
                                            const Eigen::VectorXd& lambda) const {
  require(field.phi.size() == n_unknowns_ && lambda.size() == n_unknowns_,
          "gradient_diffusivity: field/adjoint do not match the model");
  Eigen::VectorXd r = diffusion_ * field.phi;
  for (const auto& e : west_) {
    const double phi_d = mollifier(x, e.y);
    if (phi_d != 0.0) r[e.row] -= e.dcoef * phi_d;
  }
  return std::exp(k) * lambda.dot(r);
}

double TransportModel::functional_value(const Control& x, double k, const Region& region) const {
  return mean_concentration(solve(x, k), region);
}

Eigen::Vector4d TransportModel::functional_gradient(const Control& x, double k,
                                                    const Region& region) const {
  const ConcentrationField field = solve(x, k);
  const Eigen::VectorXd lambda = adjoint(k, region);
  const Eigen::Vector3d gx = gradient_control(k, x, lambda);
  Eigen::Vector4d g;
  g << gx, gradient_diffusivity(k, x, field, lambda);
  return g;
}

Eigen::VectorXd TransportModel::apply_operator(double k, const Eigen::VectorXd& v) const {
  return std::exp(k) * (diffusion_ * v) + advection_ * v;
}

Eigen::VectorXd TransportModel::apply_operator_transpose(double k,
                                                         const Eigen::VectorXd& v) const {
  return std::exp(k) * (diffusion_.transpose() * v) + advection_.transpose() * v;
}

namespace {

const std::vector<std::string> kLabels = {"z0", "L", "c", "k"};

class TransportQoi final : public ModelFunctional {
 public:
  TransportQoi(std::shared_ptr<const TransportModel> model, const Region& region, std::string id)
      : ModelFunctional(std::move(id), FunctionalKind::qoi, 3, 1, 0, kLabels),
        model_(std::move(model)),
        region_(region) {}

  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
               const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return model_->functional_value(Control::from_vector(x, model_->grid().height), th[0],
                                    region_);
  }
  Eigen::VectorXd grad_xtheta(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
                              const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return model_->functional_gradient(Control::from_vector(x, model_->grid().height), th[0],
                                       region_);
  }
  GradientMethod gradient_method() const override { return GradientMethod::adjoint; }

 private:
  std::shared_ptr<const TransportModel> model_;
  Region region_;
};

class TransportObservable final : public ModelFunctional {
 public:
  TransportObservable(std::shared_ptr<const TransportModel> model, double side)
      : ModelFunctional("mean_concentration_obs", FunctionalKind::observable, 3, 1, 2, kLabels),
        model_(std::move(model)),
        side_(side) {}

  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
               const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return model_->functional_value(Control::from_vector(x, model_->grid().height), th[0],
                                    Region::square(z[0], z[1], side_));
  }
  Eigen::VectorXd grad_xtheta(const Eigen::VectorXd& x, const Eigen::VectorXd& th,
                              const Eigen::VectorXd& z) const override {
    check_arity(x, th, z);
    return model_->functional_gradient(Control::from_vector(x, model_->grid().height), th[0],
                                       Region::square(z[0], z[1], side_));
  }
  GradientMethod gradient_method() const override { return GradientMethod::adjoint; }

 private:
  std::shared_ptr<const TransportModel> model_;
  double side_;
};

}  // namespace

FunctionalPtr qoi_functional(std::shared_ptr<const TransportModel> model, const Region& region,
                             const std::string& id) {
  return std::make_shared<TransportQoi>(std::move(model), region, id);
}

FunctionalPtr observable_functional(std::shared_ptr<const TransportModel> model, double side) {
  return std::make_shared<TransportObservable>(std::move(model), side);
}

}  // namespace oved::transport
