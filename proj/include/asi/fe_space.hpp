#pragma once

#include <memory>

#include "asi/common.hpp"
#include "asi/mesh_fe.hpp"

namespace asi {

/// P1 space on a mesh with the matrices every module needs: consistent and
/// lumped mass on all nodes, the interior-reduced mass, and cached stiffness
/// patterns.
class FeSpace {
 public:
  explicit FeSpace(MeshPtr mesh);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  int num_nodes() const { return mesh_->num_nodes(); }
  int num_interior() const { return mesh_->num_interior(); }

  const SparseMatrix& mass() const { return mass_; }
  const Vector& lumped_mass() const { return lumped_; }
  const SparseMatrix& interior_mass() const { return interior_mass_; }

  SparseMatrix stiffness(std::span<const double> weights) const { return full_.assemble(weights); }
  SparseMatrix interior_stiffness(std::span<const double> weights) const { return interior_.assemble(weights); }

  Vector restrict_to_interior(const Vector& full) const;
  Vector extend_from_interior(const Vector& interior) const;
  /// Column-wise extension of interior vectors (boundary rows zero).
  Matrix extend_from_interior(const Matrix& interior) const;

  double inner(const Vector& f, const Vector& g) const { return f.dot(mass_ * g); }
  double norm(const Vector& f) const;

  /// L2 Riesz representative of a functional given by its nodal values
  /// d_i = D(phi_i): solves M_II g_I = d_I, g = 0 on the boundary.
  Vector riesz(const Vector& nodal_functional) const;

  /// Per-element average of nodal values (the medium weight used in assembly).
  std::vector<double> element_average(const Vector& nodal) const;

  /// Scatters per-element quantities q_T to nodes as sum_{T∋i} area * q_T / 3,
  /// i.e. the nodal functional of the piecewise-constant field q.
  Vector scatter_element_average(std::span<const double> per_element) const;

 private:
  MeshPtr mesh_;
  SparseMatrix mass_;
  Vector lumped_;
  SparseMatrix interior_mass_;
  StiffnessAssembler full_;
  StiffnessAssembler interior_;
};

using FeSpacePtr = std::shared_ptr<const FeSpace>;

inline FeSpacePtr make_space(int n) { return std::make_shared<const FeSpace>(build_unit_square_mesh(n)); }

}  // namespace asi
