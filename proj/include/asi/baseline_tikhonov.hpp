#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "asi/asi_core.hpp"

namespace asi {

struct TikhonovConfig {
  int max_iter = 200;
  int memory = 10;
  double grad_tol = 1e-10;
  double tau0 = 1.0;
  /// Replaces the schedule alpha_n = 2^-n when set.
  std::optional<double> fixed_alpha;
  ArmijoOptions armijo;
};

enum class TikhonovExit { kDiscrepancy, kGradientTol, kMaxIter, kLineSearchFail };
const char* to_string(TikhonovExit e);

struct TikhonovResult {
  Vector u;
  int m_star = 0;
  TikhonovExit exit = TikhonovExit::kMaxIter;
  std::vector<IterationRecord> history;
};

/// Penalized misfit J(u) + alpha/2 ||u - background||^2 over the interior
/// nodal values of u - background, alpha_n = 2^-n at L-BFGS iteration n.
/// With delta > 0 the run stops at the first n with tau_n <= tau0 and returns
/// iterate n - 1.
TikhonovResult tikhonov_invert(const EllipticModel& model, double delta, const Vector& background,
                               const TikhonovConfig& config, const Vector* truth = nullptr,
                               const std::function<void(const IterationRecord&)>& on_record = {});

/// The penalized objective for one alpha in interior coordinates (exposed for tests).
ObjectiveHandle tikhonov_objective(const EllipticModel& model, const Vector& background, const double* alpha);

}  // namespace asi
