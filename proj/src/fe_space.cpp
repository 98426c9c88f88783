#include "asi/fe_space.hpp"

#include <cmath>

#include "asi/linalg.hpp"

namespace asi {

FeSpace::FeSpace(MeshPtr mesh)
    : mesh_(std::move(mesh)),
      mass_(assemble_mass(*mesh_, false)),
      lumped_(assemble_mass(*mesh_, true).diagonal()),
      full_(mesh_, false),
      interior_(mesh_, true) {
  interior_mass_ = apply_dirichlet(mass_, Vector::Zero(mesh_->num_nodes()), mesh_->boundary_mask()).matrix;
}

Vector FeSpace::restrict_to_interior(const Vector& full) const {
  const auto& idx = mesh_->interior_nodes();
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = full[idx[k]];
  return out;
}

Vector FeSpace::extend_from_interior(const Vector& interior) const {
  const auto& idx = mesh_->interior_nodes();
  Vector out = Vector::Zero(mesh_->num_nodes());
  for (size_t k = 0; k < idx.size(); ++k) out[idx[k]] = interior[static_cast<Eigen::Index>(k)];
  return out;
}

Matrix FeSpace::extend_from_interior(const Matrix& interior) const {
  const auto& idx = mesh_->interior_nodes();
  Matrix out = Matrix::Zero(mesh_->num_nodes(), interior.cols());
  for (size_t k = 0; k < idx.size(); ++k) out.row(idx[k]) = interior.row(static_cast<Eigen::Index>(k));
  return out;
}

double FeSpace::norm(const Vector& f) const { return std::sqrt(std::max(inner(f, f), 0.0)); }

Vector FeSpace::riesz(const Vector& nodal_functional) const {
  CgOptions opts;
  opts.tol = 1e-13;
  opts.max_iter = 2000;
  const Vector rhs = restrict_to_interior(nodal_functional);
  if (rhs.norm() == 0.0) return Vector::Zero(num_nodes());
  return extend_from_interior(cg_solve(interior_mass_, rhs, opts).x);
}

std::vector<double> FeSpace::element_average(const Vector& nodal) const {
  std::vector<double> out(mesh_->num_elements());
  const auto& elems = mesh_->elements();
  for (size_t e = 0; e < elems.size(); ++e) {
    const auto& t = elems[e];
    out[e] = (nodal[t[0]] + nodal[t[1]] + nodal[t[2]]) / 3.0;
  }
  return out;
}

Vector FeSpace::scatter_element_average(std::span<const double> per_element) const {
  Vector out = Vector::Zero(num_nodes());
  const double w = mesh_->element_area() / 3.0;
  const auto& elems = mesh_->elements();
  for (size_t e = 0; e < elems.size(); ++e) {
    for (int k = 0; k < 3; ++k) out[elems[e][k]] += w * per_element[e];
  }
  return out;
}

}  // namespace asi
