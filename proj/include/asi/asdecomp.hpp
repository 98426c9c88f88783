#pragma once

#include <optional>
#include <vector>

#include "asi/fe_space.hpp"
#include "asi/linalg.hpp"

namespace asi {

/// M-orthonormal functions on one mesh, stored as full nodal columns that
/// vanish on the boundary.
struct Basis {
  MeshPtr mesh;
  Matrix functions;
  std::optional<Vector> eigenvalues;

  int size() const { return static_cast<int>(functions.cols()); }
};

/// Per-element weight 1 / sqrt(|grad u|_T^2 + eps^2); 0 < w <= 1/eps.
std::vector<double> mu_eps(const Mesh& mesh, const Vector& u, double eps);

/// First K Dirichlet eigenfunctions of -div(mu_eps[u] grad .) in the
/// L2 (consistent mass) inner product.
Basis as_basis(const FeSpace& space, const Vector& u, int k, double eps = 1e-8, const EigOptions& options = {});

/// First K Dirichlet eigenfunctions of the Laplacian (unit weight).
Basis laplace_basis(const FeSpace& space, int k, const EigOptions& options = {});

struct Projection {
  Vector coefficients;  // beta_k = (v, phi_k)
  Vector projected;     // sum_k beta_k phi_k
};

/// L2 projection onto span(basis); the residual is M-orthogonal to every basis function.
Projection l2_project(const FeSpace& space, const Vector& v, const Basis& basis);

/// v^T A_w v with A_w the weighted stiffness on all nodes.
double tv_energy(const FeSpace& space, std::span<const double> weights, const Vector& v);

}  // namespace asi
