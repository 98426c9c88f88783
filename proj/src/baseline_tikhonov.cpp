#include "asi/baseline_tikhonov.hpp"

#include <chrono>
#include <cmath>

namespace asi {

const char* to_string(TikhonovExit e) {
  switch (e) {
    case TikhonovExit::kDiscrepancy: return "discrepancy";
    case TikhonovExit::kGradientTol: return "gradient-tol";
    case TikhonovExit::kMaxIter: return "max-iter";
    case TikhonovExit::kLineSearchFail: return "line-search-fail";
  }
  return "unknown";
}

ObjectiveHandle tikhonov_objective(const EllipticModel& model, const Vector& background, const double* alpha) {
  const FeSpace& s = model.space();
  ObjectiveHandle h;
  h.dimension = s.num_interior();
  h.description = "Tikhonov-penalized elliptic misfit";
  h.evaluate = [&model, &s, background, alpha](const Vector& x, Vector* grad) {
    const Vector u = background + s.extend_from_interior(x);
    const Vector mx = s.interior_mass() * x;
    try {
      const MisfitEval ev = model.evaluate(u, grad != nullptr);
      if (grad) *grad = s.restrict_to_interior(ev.derivative) + (*alpha) * mx;
      return ev.value + 0.5 * (*alpha) * x.dot(mx);
    } catch (const InvalidMedium&) {
      if (grad) *grad = Vector::Zero(x.size());
      return std::numeric_limits<double>::infinity();
    }
  };
  return h;
}

TikhonovResult tikhonov_invert(const EllipticModel& model, double delta, const Vector& background,
                               const TikhonovConfig& config, const Vector* truth,
                               const std::function<void(const IterationRecord&)>& on_record) {
  if (config.max_iter < 1) throw InvalidArgument("Tikhonov max_iter must be at least 1");
  const FeSpace& s = model.space();
  if (background.size() != s.num_nodes()) throw InvalidArgument("background size mismatch");
  const auto t_start = std::chrono::steady_clock::now();
  const double truth_norm = truth ? s.norm(*truth) : 0.0;

  double alpha = config.fixed_alpha.value_or(1.0);
  const ObjectiveHandle obj = tikhonov_objective(model, background, &alpha);

  TikhonovResult res;
  std::vector<Vector> iterates;
  bool stopped = false;
  auto hook = [&](int n, const Vector& x) {
    const Vector u = background + s.extend_from_interior(x);
    const MisfitEval ev = model.evaluate(u, true);
    IterationRecord r;
    r.m = n;
    r.k = s.num_interior();
    r.misfit = ev.value;
    r.tau = delta > 0.0 ? std::sqrt(2.0 * ev.value) / delta : std::numeric_limits<double>::infinity();
    r.grad_norm = s.norm(s.riesz(ev.derivative));
    if (truth) r.rel_error = s.norm(u - *truth) / truth_norm;
    r.eps_psi = alpha;  // the regularization weight used up to this iterate
    r.inner_iterations = n;
    if (!res.history.empty()) r.monotone = r.misfit <= res.history.back().misfit;
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    res.history.push_back(r);
    iterates.push_back(u);
    if (on_record) on_record(r);
    if (delta > 0.0 && r.tau <= config.tau0) {
      stopped = true;
      return HookAction::kStop;
    }
    if (!config.fixed_alpha) {
      alpha = std::ldexp(1.0, -n);
      return HookAction::kReevaluate;
    }
    return HookAction::kContinue;
  };

  LbfgsOptions opts;
  opts.memory = config.memory;
  opts.grad_tol = config.grad_tol;
  opts.max_iter = config.max_iter;
  opts.armijo = config.armijo;
  const OptimResult opt = lbfgs_minimize(obj, Vector::Zero(s.num_interior()), opts, hook);

  if (stopped) {
    res.exit = TikhonovExit::kDiscrepancy;
    res.m_star = std::max(0, static_cast<int>(iterates.size()) - 2);
    res.u = iterates[res.m_star];
    return res;
  }
  // Record the final iterate, which the hook has not seen.
  const Vector u_final = background + s.extend_from_interior(opt.x);
  if (opt.iterations >= static_cast<int>(iterates.size())) {
    const MisfitEval ev = model.evaluate(u_final, true);
    IterationRecord r;
    r.m = opt.iterations;
    r.k = s.num_interior();
    r.misfit = ev.value;
    r.tau = delta > 0.0 ? std::sqrt(2.0 * ev.value) / delta : std::numeric_limits<double>::infinity();
    r.grad_norm = s.norm(s.riesz(ev.derivative));
    if (truth) r.rel_error = s.norm(u_final - *truth) / truth_norm;
    r.eps_psi = alpha;
    r.inner_iterations = opt.iterations;
    if (!res.history.empty()) r.monotone = r.misfit <= res.history.back().misfit;
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    res.history.push_back(r);
    iterates.push_back(u_final);
    if (on_record) on_record(r);
    if (delta > 0.0 && r.tau <= config.tau0) {
      res.exit = TikhonovExit::kDiscrepancy;
      res.m_star = static_cast<int>(iterates.size()) - 2;
      res.u = iterates[res.m_star];
      return res;
    }
  }
  res.exit = opt.reason == Termination::kGradientTol    ? TikhonovExit::kGradientTol
             : opt.reason == Termination::kLineSearchFail ? TikhonovExit::kLineSearchFail
                                                          : TikhonovExit::kMaxIter;
  res.m_star = static_cast<int>(iterates.size()) - 1;
  res.u = u_final;
  return res;
}

}  // namespace asi
