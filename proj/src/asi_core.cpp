#include "asi/asi_core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace asi {

void AsiConfig::validate() const {
  if (!(eps_theta > 0.0 && eps_theta < 1.0)) throw InvalidArgument("eps_theta must lie in (0, 1)");
  if (!(eps_psi0 >= 0.0)) throw InvalidArgument("eps_psi0 must be nonnegative");
  if (!(rho0 > 0.0 && rho0 <= 1.0 && rho1 >= 1.0)) throw InvalidArgument("need 0 < rho0 <= 1 <= rho1");
  if (!(tau0 >= 1.0)) throw InvalidArgument("tau0 must be at least 1");
  if (k1 < 1) throw InvalidArgument("K1 must be positive");
  if (m_max < 1) throw InvalidArgument("m_max must be positive");
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (!(as_basis_size_factor > 0.0)) throw InvalidArgument("as_basis_size_factor must be positive");
}

std::string history_header() {
  return "m,K,misfit,tau,grad_norm,rel_error,eps_psi,N_inf,N_2,N_theta,N_0,K_merged,K_next,inner_iterations,"
         "angle_cos,monotone,wall_time";
}

std::string history_row(const IterationRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%d,%d,%d,%d,%.17g,%d,%.6f", r.m, r.k,
                r.misfit, r.tau, r.grad_norm, r.rel_error, r.eps_psi, r.n_inf, r.n_2, r.n_theta, r.n_0, r.k_merged,
                r.k_next, r.inner_iterations, r.angle_cos, r.monotone ? 1 : 0, r.wall_time);
  return buf;
}

void write_history(std::ostream& out, const std::vector<IterationRecord>& history) {
  out << history_header() << '\n';
  for (const auto& r : history) out << history_row(r) << '\n';
}

ObjectiveHandle reduced_objective(const MisfitModel& model, const SearchSpace& space, const Vector& background,
                                  int m) {
  if (space.size() < 1) throw InvalidArgument("reduced objective needs a nonempty space");
  ObjectiveHandle h;
  h.dimension = space.size();
  h.description = "reduced misfit, K = " + std::to_string(space.size());
  const Matrix* psi = &space.functions;
  h.evaluate = [&model, psi, background, m](const Vector& c, Vector* grad) {
    const Vector u = background + (*psi) * c;
    try {
      const MisfitEval ev = model.evaluate_inner(m, u, grad != nullptr);
      if (grad) *grad = psi->transpose() * ev.derivative;
      return ev.value;
    } catch (const InvalidMedium&) {
    } catch (const CflViolation&) {
    } catch (const DivergenceError&) {
    }
    if (grad) *grad = Vector::Zero(psi->cols());
    return std::numeric_limits<double>::infinity();
  };
  return h;
}

std::vector<Sensitivity> sensitivities(const FeSpace& space, const Vector& grad, const Basis& candidates) {
  const Vector sigma = candidates.functions.transpose() * (space.mass() * grad);
  std::vector<Sensitivity> out(static_cast<size_t>(sigma.size()));
  for (Eigen::Index k = 0; k < sigma.size(); ++k) out[k] = {static_cast<int>(k), sigma[k]};
  std::stable_sort(out.begin(), out.end(),
                   [](const Sensitivity& a, const Sensitivity& b) { return std::abs(a.sigma) > std::abs(b.sigma); });
  return out;
}

NTheta n_theta(const std::vector<double>& sigma, double grad_norm, double eps_theta) {
  NTheta r;
  if (!(grad_norm > 0.0)) return r;
  const double bound = eps_theta * grad_norm;
  while (r.n_inf < static_cast<int>(sigma.size()) && std::abs(sigma[r.n_inf]) >= bound) ++r.n_inf;
  double sum = 0.0;
  for (size_t k = 0; k < sigma.size(); ++k) {
    sum += sigma[k] * sigma[k];
    if (std::sqrt(sum) >= bound) {
      r.n_2 = static_cast<int>(k) + 1;
      break;
    }
  }
  r.n_theta = std::max(r.n_inf, r.n_2);
  return r;
}

AngleCheck check_angle_condition(const FeSpace& space, const Vector& grad, const Vector& d, double eps_theta) {
  AngleCheck a;
  const double nd = space.norm(d), ng = space.norm(grad);
  if (!(nd > 0.0) || !(ng > 0.0)) return a;
  a.cos_theta = std::abs(space.inner(grad, d)) / (ng * nd);
  a.satisfied = a.cos_theta >= eps_theta;
  return a;
}

SearchSpace merge_spaces(const FeSpace& space, const SearchSpace& current, const Basis& as_functions,
                         double drop_tol) {
  SearchSpace out;
  out.mesh = space.mesh_ptr();
  out.functions = mgs_extend(current.functions, as_functions.functions, space.mass(), drop_tol);
  return out;
}

Vector indicator_coefficients(const Matrix& s, const Vector& c_u, double r) {
  const double norm_u = c_u.norm();
  if (norm_u <= r) return Vector::Zero(c_u.size());
  if (!(r > 0.0)) return c_u;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  const Vector lam = es.eigenvalues().cwiseMax(0.0);
  const Vector ch = es.eigenvectors().transpose() * c_u;
  auto distance = [&](double l) {
    // ||c(l) - c_u|| with c(l) = l (S + l I)^{-1} c_u.
    return (lam.array() * ch.array() / (lam.array() + l)).matrix().norm();
  };
  double hi = 2.0 * (lam.array() * ch.array()).matrix().norm() / r;
  if (!(hi > 0.0)) return c_u;
  double lo = hi;
  for (int i = 0; i < 40 && distance(lo) < r; ++i) lo *= 1e-10;
  double l = hi;
  if (distance(lo) < r) {
    l = lo;
  } else {
    double a = std::log(lo), b = std::log(hi);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (distance(std::exp(mid)) > r) a = mid;
      else b = mid;
    }
    l = std::exp(b);  // feasible side
  }
  const Vector coef = (l / (lam.array() + l) * ch.array()).matrix();
  return es.eigenvectors() * coef;
}

Vector compute_indicator(const FeSpace& space, const SearchSpace& merged, const Vector& u_m,
                         std::span<const double> weights, double eps_psi) {
  const Matrix& psi = merged.functions;
  const Vector c_u = psi.transpose() * (space.mass() * u_m);
  const double norm_u = space.norm(u_m);
  const double resid = space.norm(u_m - psi * c_u);
  if (resid > 1e-8 * std::max(norm_u, 1e-300) && resid > 0.0)
    throw InvalidArgument("iterate is not representable in the merged space (relative residual " +
                          std::to_string(resid / norm_u) + ")");
  const SparseMatrix a = space.stiffness(weights);
  const Matrix s = psi.transpose() * (a * psi);
  return psi * indicator_coefficients(s, c_u, eps_psi * norm_u);
}

int truncation_index(const std::vector<double>& gamma_sorted, double eps_psi) {
  const int n = static_cast<int>(gamma_sorted.size());
  double total = 0.0;
  for (double g : gamma_sorted) total += g * g;
  if (!(total > 0.0)) return 0;
  std::vector<double> tail(n + 1, 0.0);  // tail[K] = sum_{k > K} gamma_k^2 (1-based K)
  for (int k = n - 1; k >= 0; --k) tail[k] = tail[k + 1] + gamma_sorted[k] * gamma_sorted[k];
  const double bound = eps_psi * eps_psi * total;
  for (int k = 1; k <= n; ++k)
    if (tail[k] <= bound) return k;
  return n;
}

GrowthDecision growth_control(int n0, int k_m, double eps_psi, double rho0, double rho1) {
  const double rho = static_cast<double>(n0) / k_m;
  auto up = [](double x) { return static_cast<int>(std::ceil(x * (1.0 - 1e-12))); };
  if (rho < rho0) return {up(rho0 * k_m), 0.5 * eps_psi};
  if (rho > rho1) return {up(rho1 * k_m), 2.0 * eps_psi};
  return {n0, eps_psi};
}

Truncation truncate_space(const FeSpace& space, const SearchSpace& merged, const Vector& v, double eps_psi, int k_m,
                          double rho0, double rho1) {
  const Vector gamma = merged.functions.transpose() * (space.mass() * v);
  std::vector<int> order(static_cast<size_t>(gamma.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(gamma[a]) > std::abs(gamma[b]); });
  std::vector<double> sorted(order.size());
  for (size_t k = 0; k < order.size(); ++k) sorted[k] = gamma[order[k]];
  Truncation t;
  t.n_0 = truncation_index(sorted, eps_psi);
  t.rho = static_cast<double>(t.n_0) / k_m;
  const GrowthDecision g = growth_control(t.n_0, k_m, eps_psi, rho0, rho1);
  t.eps_psi_next = g.eps_psi;
  const int keep = std::clamp(g.k, 1, merged.size());
  t.space.mesh = merged.mesh;
  t.space.functions.resize(merged.functions.rows(), keep);
  for (int k = 0; k < keep; ++k) t.space.functions.col(k) = merged.functions.col(order[k]);
  return t;
}

SearchSpace laplace_initial_space(const FeSpace& space, int k1, const EigOptions& options) {
  return laplace_basis(space, k1, options);
}

const char* to_string(AsiExit e) {
  switch (e) {
    case AsiExit::kDiscrepancy: return "discrepancy";
    case AsiExit::kGradientZero: return "gradient-zero";
    case AsiExit::kMaxIter: return "max-iter";
  }
  return "unknown";
}

namespace {

struct Enrichment {
  SearchSpace space;
  NTheta counts;
  double angle_cos = std::numeric_limits<double>::quiet_NaN();
};

// Step 10: append the N_theta most sensitive candidates not already in the span.
Enrichment enrich(const FeSpace& space, const SearchSpace& truncated, const Vector& grad, double grad_norm,
                  const Vector& u, int k_as, const AsiConfig& cfg, const Basis& as_functions) {
  Enrichment out;
  out.space = truncated;
  Basis candidates = as_functions;
  auto sens = sensitivities(space, grad, candidates);
  auto sigma_of = [](const std::vector<Sensitivity>& s) {
    std::vector<double> v(s.size());
    for (size_t k = 0; k < s.size(); ++k) v[k] = s[k].sigma;
    return v;
  };
  out.counts = n_theta(sigma_of(sens), grad_norm, cfg.eps_theta);
  if (out.counts.n_theta == 0 && grad_norm > 0.0) {
    const int larger = std::min(2 * k_as, space.num_interior());
    if (larger > k_as) {
      candidates = as_basis(space, u, larger, cfg.eps, cfg.eig);
      sens = sensitivities(space, grad, candidates);
      out.counts = n_theta(sigma_of(sens), grad_norm, cfg.eps_theta);
    }
  }
  const int want = out.counts.n_theta;
  if (want == 0) return out;

  Vector d = Vector::Zero(space.num_nodes());
  for (int k = 0; k < want; ++k) d += sens[k].sigma * candidates.functions.col(sens[k].index);
  out.angle_cos = check_angle_condition(space, grad, d, cfg.eps_theta).cos_theta;

  int added = 0;
  size_t next = 0;
  while (added < want && next < sens.size()) {
    const size_t chunk = std::min(sens.size() - next, static_cast<size_t>(want - added));
    Matrix batch(space.num_nodes(), static_cast<Eigen::Index>(chunk));
    for (size_t j = 0; j < chunk; ++j) batch.col(j) = candidates.functions.col(sens[next + j].index);
    next += chunk;
    const Eigen::Index before = out.space.functions.cols();
    std::vector<int> accepted;
    Matrix extended = mgs_extend(out.space.functions, batch, space.mass(), cfg.drop_tol, &accepted);
    const Eigen::Index take = std::min<Eigen::Index>(extended.cols() - before, want - added);
    out.space.functions = extended.leftCols(before + take);
    added += static_cast<int>(take);
  }
  return out;
}

}  // namespace

AsiResult asi_run(const AsiConfig& cfg, const AsiInputs& in) {
  cfg.validate();
  if (!in.model) throw InvalidArgument("asi_run: no forward model");
  const MisfitModel& model = *in.model;
  const FeSpace& space = model.space();
  if (in.background.size() != space.num_nodes()) throw InvalidArgument("asi_run: background size mismatch");
  if (in.initial.size() < 1) throw InvalidArgument("asi_run: empty initial space");
  if (!(in.delta >= 0.0)) throw InvalidArgument("asi_run: delta must be nonnegative");

  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(); };
  const double truth_norm = in.truth ? space.norm(*in.truth) : 0.0;

  AsiResult res;
  std::vector<Vector> iterates;
  auto push = [&](IterationRecord r, const Vector& u) {
    if (!res.history.empty()) {
      const auto& prev = res.history.back();
      const double slack = 1.0 + 10.0 * prev.eps_psi;
      r.monotone = r.misfit <= prev.misfit * slack * slack;
    }
    r.wall_time = elapsed();
    res.history.push_back(r);
    iterates.push_back(u);
    if (in.on_record) in.on_record(r);
    if (in.on_iterate) in.on_iterate(r.m, u);
  };
  auto rel_error = [&](const Vector& u) {
    return in.truth ? space.norm(u - *in.truth) / truth_norm : std::numeric_limits<double>::quiet_NaN();
  };
  auto tau_of = [&](double misfit) {
    return in.delta > 0.0 ? std::sqrt(2.0 * misfit) / in.delta : std::numeric_limits<double>::infinity();
  };

  SearchSpace psi = in.initial;
  double eps_psi = cfg.eps_psi0;
  Vector u_prev = in.background;
  double g0 = 0.0;

  try {
    {
      const MisfitEval ev = model.evaluate(u_prev, true);
      IterationRecord r;
      r.m = 0;
      r.k = 0;
      r.misfit = ev.value;
      r.tau = tau_of(ev.value);
      r.grad_norm = g0 = space.norm(space.riesz(ev.derivative));
      r.rel_error = rel_error(u_prev);
      r.eps_psi = eps_psi;
      r.k_next = psi.size();
      push(r, u_prev);
    }

    auto checkpoint = [&in] {
      if (in.interrupt) in.interrupt();
    };
    for (int m = 1;; ++m) {
      const Vector x0 = psi.functions.transpose() * (space.mass() * (u_prev - in.background));
      ObjectiveHandle objective = reduced_objective(model, psi, in.background, m);
      if (in.interrupt)
        objective.evaluate = [inner = objective.evaluate, &in](const Vector& c, Vector* grad) {
          in.interrupt();
          return inner(c, grad);
        };
      const OptimResult opt = bfgs_minimize(objective, x0, cfg.inner);
      const Vector u_m = in.background + psi.functions * opt.x;

      const MisfitEval ev = model.evaluate(u_m, true);
      const Vector grad = space.riesz(ev.derivative);
      IterationRecord r;
      r.m = m;
      r.k = psi.size();
      r.misfit = ev.value;
      r.tau = tau_of(ev.value);
      r.grad_norm = space.norm(grad);
      r.rel_error = rel_error(u_m);
      r.eps_psi = eps_psi;
      r.inner_iterations = opt.iterations;

      if (in.delta > 0.0 && r.tau <= cfg.tau0) {
        push(r, u_m);
        res.exit = AsiExit::kDiscrepancy;
        res.m_star = m - 1;
        res.u = iterates[m - 1];
        res.final_space = psi;
        return res;
      }
      if (in.delta == 0.0 && r.grad_norm <= cfg.zero_noise_grad_tol * g0) {
        push(r, u_m);
        res.exit = AsiExit::kGradientZero;
        res.m_star = m;
        res.u = u_m;
        res.final_space = psi;
        return res;
      }
      if (m >= cfg.m_max) {
        push(r, u_m);
        break;
      }

      // Step 7: AS basis at u^(m).
      const int k_m = psi.size();
      const int k_as = std::min(space.num_interior(),
                                static_cast<int>(std::ceil(cfg.as_basis_size_factor * k_m * (1.0 - 1e-12))));
      const Basis phi = as_basis(space, u_m, k_as, cfg.eps, cfg.eig);
      checkpoint();
      // Step 8: merge, current space first.
      const SearchSpace merged = merge_spaces(space, psi, phi, cfg.drop_tol);
      r.k_merged = merged.size();
      checkpoint();
      // Step 9: indicator and truncation.
      const Vector u0 = u_m - in.background;
      const Vector v = compute_indicator(space, merged, u0, mu_eps(space.mesh(), u_m, cfg.eps), eps_psi);
      Truncation tr = truncate_space(space, merged, v, eps_psi, k_m, cfg.rho0, cfg.rho1);
      r.n_0 = tr.n_0;
      SearchSpace next = std::move(tr.space);
      checkpoint();
      // Step 10: sensitivities.
      if (cfg.enrich) {
        Enrichment en = enrich(space, next, grad, r.grad_norm, u_m, k_as, cfg, phi);
        r.n_inf = en.counts.n_inf;
        r.n_2 = en.counts.n_2;
        r.n_theta = en.counts.n_theta;
        r.angle_cos = en.angle_cos;
        next = std::move(en.space);
      }
      r.k_next = next.size();
      push(r, u_m);

      psi = std::move(next);
      eps_psi = tr.eps_psi_next;
      u_prev = u_m;
    }
  } catch (const std::exception& e) {
    throw AsiRunError("ASI failed at outer iteration " + std::to_string(res.history.size()) + ": " + e.what(),
                      res.history);
  }

  // m_max reached: best-misfit iterate.
  size_t best = 0;
  for (size_t k = 1; k < res.history.size(); ++k)
    if (res.history[k].misfit < res.history[best].misfit) best = k;
  res.exit = AsiExit::kMaxIter;
  res.m_star = static_cast<int>(best);
  res.u = iterates[best];
  res.final_space = psi;
  return res;
}

}  // namespace asi
