#include "asi/asdecomp.hpp"

#include <cmath>

namespace asi {

std::vector<double> mu_eps(const Mesh& mesh, const Vector& u, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("mu_eps: eps must be positive");
  if (u.size() != mesh.num_nodes()) throw InvalidArgument("mu_eps: field size does not match mesh");
  std::vector<double> w(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto g = mesh.gradient_of(u, e);
    w[e] = 1.0 / std::sqrt(g[0] * g[0] + g[1] * g[1] + eps * eps);
  }
  return w;
}

namespace {

Basis dirichlet_eigenbasis(const FeSpace& space, std::span<const double> weights, int k, const EigOptions& options) {
  const SparseMatrix a = space.interior_stiffness(weights);
  EigPairs pairs = smallest_eigpairs(a, space.interior_mass(), k, options);
  Basis basis;
  basis.mesh = space.mesh_ptr();
  basis.functions = space.extend_from_interior(pairs.eigenvectors);
  basis.eigenvalues = std::move(pairs.eigenvalues);
  return basis;
}

}  // namespace

Basis as_basis(const FeSpace& space, const Vector& u, int k, double eps, const EigOptions& options) {
  if (k < 1) throw InvalidArgument("as_basis: K must be at least 1");
  const auto weights = mu_eps(space.mesh(), u, eps);
  return dirichlet_eigenbasis(space, weights, k, options);
}

Basis laplace_basis(const FeSpace& space, int k, const EigOptions& options) {
  if (k < 1) throw InvalidArgument("laplace_basis: K must be at least 1");
  const std::vector<double> ones(space.mesh().num_elements(), 1.0);
  return dirichlet_eigenbasis(space, ones, k, options);
}

Projection l2_project(const FeSpace& space, const Vector& v, const Basis& basis) {
  if (basis.mesh && basis.mesh->n() != space.mesh().n()) throw InvalidArgument("l2_project: mesh mismatch");
  if (v.size() != space.num_nodes()) throw InvalidArgument("l2_project: field size does not match mesh");
  Projection p;
  const Vector mv = space.mass() * v;
  p.coefficients = basis.functions.transpose() * mv;
  p.projected = basis.functions * p.coefficients;
  return p;
}

double tv_energy(const FeSpace& space, std::span<const double> weights, const Vector& v) {
  const SparseMatrix a = space.stiffness(weights);
  return std::max(v.dot(a * v), 0.0);
}

}  // namespace asi
