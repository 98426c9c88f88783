#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "asi/common.hpp"

namespace asi {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Structured triangulation of the unit square. Every grid cell is split along
/// its lower-left to upper-right diagonal, so all 2n^2 triangles are congruent.
class Mesh {
 public:
  using Triangle = std::array<int, 3>;
  /// Row k holds the (constant) gradient of the k-th local hat function.
  using Gradients = std::array<std::array<double, 2>, 3>;

  struct Location {
    int element = -1;
    std::array<double, 3> barycentric{};
  };

  explicit Mesh(int n);

  int n() const { return n_; }
  double h() const { return h_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_interior() const { return static_cast<int>(interior_nodes_.size()); }
  int num_boundary() const { return static_cast<int>(boundary_nodes_.size()); }

  int node_index(int i, int j) const { return j * (n_ + 1) + i; }

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Triangle>& elements() const { return elements_; }
  const std::vector<bool>& boundary_mask() const { return boundary_mask_; }
  const std::vector<int>& interior_nodes() const { return interior_nodes_; }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  /// Position of `node` among the interior unknowns, or -1 on the boundary.
  int interior_index(int node) const { return interior_index_[node]; }

  double element_area() const { return 0.5 * h_ * h_; }
  const Gradients& gradients(int element) const { return gradients_[element]; }
  Point centroid(int element) const;

  /// Element containing `p` (clamped into the closed unit square) together with
  /// the barycentric coordinates of `p` in that element.
  Location locate(Point p) const;

  /// Constant gradient of the P1 function `values` on `element`.
  std::array<double, 2> gradient_of(const Vector& values, int element) const;

 private:
  int n_;
  double h_;
  std::vector<Point> nodes_;
  std::vector<Triangle> elements_;
  std::vector<Gradients> gradients_;
  std::vector<bool> boundary_mask_;
  std::vector<int> interior_nodes_;
  std::vector<int> boundary_nodes_;
  std::vector<int> interior_index_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Throws InvalidArgument for n < 2.
MeshPtr build_unit_square_mesh(int n);

/// Piecewise-linear field on a mesh, one value per node.
struct FeFunction {
  MeshPtr mesh;
  Vector values;

  FeFunction() = default;
  FeFunction(MeshPtr m, Vector v);
  static FeFunction constant(MeshPtr m, double value);
};

/// Consistent P1 mass matrix, or its row-sum diagonal when `lumped`.
SparseMatrix assemble_mass(const Mesh& mesh, bool lumped);

/// A_ij = sum_T w_T * int_T grad(phi_i) . grad(phi_j). Weights must be positive.
SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, std::span<const double> weights);

/// Lumped 1-D mass of the boundary nodes (length |dOmega| = 4 in total), indexed
/// like Mesh::boundary_nodes().
Vector boundary_lumped_mass(const Mesh& mesh);

/// Reuses one sparsity pattern for repeated weighted-stiffness assembly, either
/// on all nodes or reduced to the interior unknowns.
class StiffnessAssembler {
 public:
  StiffnessAssembler(MeshPtr mesh, bool interior_only);

  SparseMatrix assemble(std::span<const double> weights) const;
  const SparseMatrix& pattern() const { return pattern_; }

 private:
  MeshPtr mesh_;
  SparseMatrix pattern_;
  std::vector<std::array<int, 9>> slots_;  // value index per local entry, -1 if dropped
  std::vector<std::array<double, 9>> local_;  // unit-weight local stiffness
};

struct DirichletSystem {
  SparseMatrix matrix;
  Vector rhs;
  std::vector<int> free_nodes;  // full index of each reduced unknown
};

/// Symmetric elimination of the nodes flagged in `boundary_mask`, which are
/// prescribed to `boundary_values` (zero when empty).
DirichletSystem apply_dirichlet(const SparseMatrix& matrix, const Vector& rhs,
                                const std::vector<bool>& boundary_mask,
                                const Vector& boundary_values = Vector());

/// Scatters reduced unknowns back to a full nodal vector (boundary entries zero).
Vector extend_from_free(const DirichletSystem& system, const Vector& reduced, int num_nodes);

/// Sparse operator evaluating P1 functions on `source` at `points`.
SparseMatrix interpolation_matrix(const Mesh& source, std::span<const Point> points);

/// Pointwise evaluation of `f` at the nodes of `target`.
FeFunction interpolate_between_meshes(const FeFunction& f, MeshPtr target);

/// f^T M g.
double l2_inner(const SparseMatrix& mass, const Vector& f, const Vector& g);

/// Plain-text grid file: "n <n>" and "field <name>" header lines followed by the
/// node values in row-major order (x fastest), one per line, 17 significant digits.
void write_grid(const std::string& path, const FeFunction& f, const std::string& field_name);
FeFunction read_grid(const std::string& path, std::string* field_name = nullptr);

}  // namespace asi
