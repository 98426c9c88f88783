#include "asi/forward_elliptic.hpp"

#include <string>

namespace asi {

void check_medium(const Vector& u) {
  if (!u.allFinite()) throw InvalidMedium("medium has non-finite values");
  const double lo = u.minCoeff();
  if (lo < kMediumFloor) throw InvalidMedium("medium value " + std::to_string(lo) + " below floor");
}

EllipticProblem EllipticProblem::with_constant_source(FeSpacePtr space, double f) {
  EllipticProblem p;
  p.source = Vector::Constant(space->num_nodes(), f);
  p.observation = Vector::Zero(space->num_nodes());
  p.space = std::move(space);
  return p;
}

EllipticModel::EllipticModel(EllipticProblem problem) : problem_(std::move(problem)) {
  if (!problem_.space) throw InvalidArgument("elliptic problem without space");
  const int n = problem_.space->num_nodes();
  if (problem_.source.size() != n) throw InvalidArgument("source size does not match mesh");
  if (problem_.observation.size() == 0) problem_.observation = Vector::Zero(n);
  if (problem_.observation.size() != n) throw InvalidArgument("observation size does not match mesh");
  load_ = problem_.space->restrict_to_interior(problem_.space->mass() * problem_.source);
}

void EllipticModel::factorize(const Vector& u) const {
  check_medium(u);
  const FeSpace& s = space();
  const Eigen::SparseMatrix<double> a = s.interior_stiffness(s.element_average(u));
  if (!analyzed_) {
    llt_.analyzePattern(a);
    analyzed_ = true;
  }
  llt_.factorize(a);
  if (llt_.info() != Eigen::Success) throw InvalidMedium("stiffness factorization failed");
}

Vector EllipticModel::solve_interior(const Vector& rhs) const {
  Vector x = llt_.solve(rhs);
  if (!x.allFinite()) throw NoConvergence("elliptic solve produced non-finite values", 0.0);
  return x;
}

Vector EllipticModel::solve(const Vector& u) const {
  factorize(u);
  return space().extend_from_interior(solve_interior(load_));
}

MisfitEval EllipticModel::evaluate(const Vector& u, bool want_derivative) const {
  const FeSpace& s = space();
  const Vector y = solve(u);
  const Vector r = y - problem_.observation;
  const Vector mr = s.mass() * r;
  MisfitEval out;
  out.value = 0.5 * r.dot(mr);
  if (!want_derivative) return out;
  const Vector p = s.extend_from_interior(solve_interior(-s.restrict_to_interior(mr)));
  const Mesh& mesh = s.mesh();
  std::vector<double> q(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto gy = mesh.gradient_of(y, e);
    const auto gp = mesh.gradient_of(p, e);
    q[e] = gy[0] * gp[0] + gy[1] * gp[1];
  }
  out.derivative = s.scatter_element_average(q);
  return out;
}

Vector solve_forward(const Vector& u, const EllipticProblem& problem) { return EllipticModel(problem).solve(u); }

double misfit(const Vector& u, const EllipticProblem& problem) {
  return EllipticModel(problem).evaluate(u, false).value;
}

Vector gradient(const Vector& u, const EllipticProblem& problem) { return EllipticModel(problem).gradient(u); }

}  // namespace asi
