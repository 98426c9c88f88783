#include "asi/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace asi {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kGradientTol: return "gradient-tol";
    case Termination::kMaxIter: return "max-iter";
    case Termination::kLineSearchFail: return "line-search-fail";
    case Termination::kHookStop: return "hook-stop";
  }
  return "unknown";
}

namespace {

struct Point {
  Vector x;
  double f = 0.0;
  Vector g;
};

Point evaluate_at(const ObjectiveHandle& obj, const Vector& x, int& evals) {
  Point p;
  p.x = x;
  p.g.resize(x.size());
  p.f = obj.evaluate(x, &p.g);
  ++evals;
  return p;
}

void check_start(const ObjectiveHandle& obj, const Point& p) {
  if (p.x.size() != obj.dimension) throw InvalidArgument("start point has wrong dimension");
  if (!std::isfinite(p.f) || !p.g.allFinite())
    throw InvalidArgument("objective is not finite at the start point" +
                          (obj.description.empty() ? std::string() : " (" + obj.description + ")"));
}

// Backtracking along d from p; returns false when no step satisfies Armijo.
bool armijo_search(const ObjectiveHandle& obj, const Point& p, const Vector& d, double step,
                   const ArmijoOptions& opt, int& evals, Point& out) {
  const double slope = p.g.dot(d);
  for (int b = 0; b <= opt.max_backtracks; ++b) {
    const Vector x = p.x + step * d;
    Vector g(x.size());
    const double f = obj.evaluate(x, &g);
    ++evals;
    if (std::isfinite(f) && f <= p.f + opt.c1 * step * slope && g.allFinite()) {
      out.x = x;
      out.f = f;
      out.g = std::move(g);
      return true;
    }
    step *= opt.backtrack;
  }
  return false;
}

bool curvature_ok(const Vector& s, const Vector& y) { return s.dot(y) > 1e-12 * s.norm() * y.norm(); }

}  // namespace

OptimResult bfgs_minimize(const ObjectiveHandle& obj, const Vector& x0, const BfgsOptions& options) {
  OptimResult r;
  Point p = evaluate_at(obj, x0, r.evaluations);
  check_start(obj, p);
  const double stop = options.grad_tol * std::max(1.0, p.g.norm());
  const Eigen::Index n = x0.size();
  Matrix h = Matrix::Identity(n, n);
  bool scaled = false;
  r.reason = Termination::kMaxIter;
  while (true) {
    if (p.g.norm() <= stop) {
      r.reason = Termination::kGradientTol;
      break;
    }
    if (r.iterations >= options.max_iter) break;
    Vector d = -(h * p.g);
    if (!(p.g.dot(d) < 0.0)) {
      h.setIdentity();
      d = -p.g;
    }
    const double step = scaled ? 1.0 : std::min(1.0, 1.0 / p.g.norm());
    Point next;
    if (!armijo_search(obj, p, d, step, options.armijo, r.evaluations, next)) {
      r.reason = Termination::kLineSearchFail;
      break;
    }
    const Vector s = next.x - p.x;
    const Vector y = next.g - p.g;
    if (curvature_ok(s, y)) {
      const double sy = s.dot(y);
      if (!scaled) {
        h = Matrix::Identity(n, n) * (sy / y.dot(y));
        scaled = true;
      }
      const Vector hy = h * y;
      const double yhy = y.dot(hy);
      h += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) - (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    p = std::move(next);
    ++r.iterations;
  }
  r.x = p.x;
  r.value = p.f;
  r.gradient_norm = p.g.norm();
  return r;
}

OptimResult lbfgs_minimize(const ObjectiveHandle& obj, const Vector& x0, const LbfgsOptions& options,
                           const IterationHook& hook) {
  if (options.memory < 1) throw InvalidArgument("L-BFGS memory must be at least 1");
  OptimResult r;
  Point p = evaluate_at(obj, x0, r.evaluations);
  check_start(obj, p);
  double stop = -1.0;
  std::deque<std::pair<Vector, Vector>> pairs;
  double gamma = 1.0;
  bool scaled = false;
  r.reason = Termination::kMaxIter;
  for (int it = 0;; ++it) {
    if (hook) {
      const HookAction a = hook(it, p.x);
      if (a == HookAction::kStop) {
        r.reason = Termination::kHookStop;
        break;
      }
      if (a == HookAction::kReevaluate) {
        p = evaluate_at(obj, p.x, r.evaluations);
        if (!std::isfinite(p.f)) throw InvalidArgument("objective became non-finite after hook");
      }
    }
    if (stop < 0.0) stop = options.grad_tol * std::max(1.0, p.g.norm());
    if (p.g.norm() <= stop) {
      r.reason = Termination::kGradientTol;
      break;
    }
    if (r.iterations >= options.max_iter) break;

    // Two-loop recursion.
    Vector q = p.g;
    std::vector<double> alpha(pairs.size());
    for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = pairs[i];
      alpha[i] = s.dot(q) / s.dot(y);
      q -= alpha[i] * y;
    }
    q *= gamma;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const double beta = y.dot(q) / s.dot(y);
      q += (alpha[i] - beta) * s;
    }
    Vector d = -q;
    if (!(p.g.dot(d) < 0.0)) {
      pairs.clear();
      d = -p.g;
    }
    const double step = scaled ? 1.0 : std::min(1.0, 1.0 / p.g.norm());
    Point next;
    if (!armijo_search(obj, p, d, step, options.armijo, r.evaluations, next)) {
      r.reason = Termination::kLineSearchFail;
      break;
    }
    Vector s = next.x - p.x;
    Vector y = next.g - p.g;
    if (curvature_ok(s, y)) {
      if (!scaled || options.scaling == LbfgsScaling::kLatestPair) gamma = s.dot(y) / y.dot(y);
      scaled = true;
      pairs.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }
    p = std::move(next);
    ++r.iterations;
  }
  r.x = p.x;
  r.value = p.f;
  r.gradient_norm = p.g.norm();
  return r;
}

}  // namespace asi
