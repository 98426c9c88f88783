#pragma once

#include <Eigen/SparseCholesky>

#include "asi/fe_space.hpp"

namespace asi {

/// Smallest admissible nodal medium value.
inline constexpr double kMediumFloor = 1e-3;

/// Misfit value plus its derivative as a nodal functional d_i = DJ(u) phi_i.
struct MisfitEval {
  double value = 0.0;
  Vector derivative;
};

/// Data misfit J(u) of some forward problem. `evaluate` is the full misfit used
/// for the discrepancy principle and the gradient norm; `evaluate_inner` is the
/// objective minimized at outer iteration m (a sampled surrogate for the wave
/// problem, the full misfit otherwise).
class MisfitModel {
 public:
  virtual ~MisfitModel() = default;
  virtual const FeSpace& space() const = 0;
  virtual MisfitEval evaluate(const Vector& u, bool want_derivative) const = 0;
  virtual MisfitEval evaluate_inner(int /*m*/, const Vector& u, bool want_derivative) const {
    return evaluate(u, want_derivative);
  }

  /// L2 Riesz representative of DJ(u).
  Vector gradient(const Vector& u) const { return space().riesz(evaluate(u, true).derivative); }
};

/// Throws InvalidMedium when any nodal value falls below kMediumFloor.
void check_medium(const Vector& u);

struct EllipticProblem {
  FeSpacePtr space;
  Vector source;       // nodal f, default constant 100
  Vector observation;  // nodal y^delta

  static EllipticProblem with_constant_source(FeSpacePtr space, double f = 100.0);
};

/// -div(u grad y) = f, y = 0 on the boundary. Caches the source load and the
/// Cholesky symbolic analysis across evaluations; not thread-safe.
class EllipticModel : public MisfitModel {
 public:
  explicit EllipticModel(EllipticProblem problem);

  const FeSpace& space() const override { return *problem_.space; }
  const EllipticProblem& problem() const { return problem_; }
  void set_observation(Vector y) { problem_.observation = std::move(y); }

  Vector solve(const Vector& u) const;
  MisfitEval evaluate(const Vector& u, bool want_derivative) const override;

 private:
  void factorize(const Vector& u) const;
  Vector solve_interior(const Vector& rhs) const;

  EllipticProblem problem_;
  Vector load_;  // (M f) on interior nodes
  mutable Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
  mutable bool analyzed_ = false;
};

Vector solve_forward(const Vector& u, const EllipticProblem& problem);
double misfit(const Vector& u, const EllipticProblem& problem);
/// L2 Riesz representative of DJ(u); zero on boundary nodes.
Vector gradient(const Vector& u, const EllipticProblem& problem);

}  // namespace asi
