#pragma once

#include <functional>
#include <string>

#include "asi/common.hpp"

namespace asi {

/// Objective in coordinates. `evaluate(x, grad)` returns f(x) and fills *grad
/// when grad is non-null; +inf marks an infeasible point.
struct ObjectiveHandle {
  int dimension = 0;
  std::function<double(const Vector&, Vector*)> evaluate;
  std::string description;
};

struct ArmijoOptions {
  double c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
};

enum class Termination { kGradientTol, kMaxIter, kLineSearchFail, kHookStop };

const char* to_string(Termination t);

struct OptimResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  Termination reason = Termination::kMaxIter;
};

struct BfgsOptions {
  /// Stop when ||g|| <= grad_tol * max(1, ||g0||).
  double grad_tol = 1e-6;
  int max_iter = 200;
  ArmijoOptions armijo;
};

/// Dense BFGS on the inverse Hessian with Armijo backtracking. Updates with
/// s^T y <= 1e-12 ||s|| ||y|| are skipped.
OptimResult bfgs_minimize(const ObjectiveHandle& obj, const Vector& x0, const BfgsOptions& options = {});

enum class LbfgsScaling {
  kLatestPair,  // H0 = (s^T y / y^T y) I from the newest pair
  kFirstPair,   // keep the scaling of the first accepted pair
};

struct LbfgsOptions : BfgsOptions {
  int memory = 10;
  LbfgsScaling scaling = LbfgsScaling::kLatestPair;
};

enum class HookAction { kContinue, kStop, kReevaluate };

/// Called at the start of iteration n = 0, 1, ... with the current iterate.
/// kReevaluate recomputes f and g at x (the objective changed), kStop ends the run.
using IterationHook = std::function<HookAction(int n, const Vector& x)>;

OptimResult lbfgs_minimize(const ObjectiveHandle& obj, const Vector& x0, const LbfgsOptions& options = {},
                           const IterationHook& hook = {});

}  // namespace asi
