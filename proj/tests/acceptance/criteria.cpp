#include "criteria.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "asi/analysis.hpp"
#include "asi/asdecomp.hpp"
#include "asi/asi_core.hpp"
#include "asi/experiments.hpp"
#include "asi/forward_wave.hpp"
#include "asi/linalg.hpp"
#include "asi/phantom.hpp"
#include "asi/rng.hpp"

namespace asi::acceptance {

namespace {

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

Vector random_medium(const FeSpace& s, Rng& rng, double lo = 0.8, double hi = 1.5) {
  Vector u = Vector::Ones(s.num_nodes());
  for (int k : s.mesh().interior_nodes()) u[k] = lo + (hi - lo) * rng.uniform();
  return u;
}

Vector random_interior(const FeSpace& s, Rng& rng) {
  Vector v = Vector::Zero(s.num_nodes());
  for (int k : s.mesh().interior_nodes()) v[k] = rng.normal();
  return v;
}

Vector random_normal(int size, Rng& rng) {
  Vector v(size);
  for (int i = 0; i < size; ++i) v[i] = rng.normal();
  return v;
}

Vector phantom_values(const PhantomSpec& spec, const FeSpace& s) { return phantom(spec, s.mesh_ptr()).values; }

Verdict c1_eigenvalues() {
  Verdict v{1, "AS eigenvalue structure, three inclusions", false, "", 0.0};
  const auto spec = three_inclusions();
  const auto s = make_space(100);
  const double eps = 1e-8;
  const Basis b = as_basis(*s, phantom_values(spec, *s), 6, eps);
  const Vector l = *b.eigenvalues;
  v.pass = within(l[0], 1.2, 1.9) && within(l[1], 3.8, 5.6) && within(l[2], 4.2, 6.4) && within(l[3] * eps, 0.2, 5.0);
  v.detail = fmt("lambda1..3 = %.4g %.4g %.4g, lambda4*eps = %.4g", l[0], l[1], l[2], l[3] * eps);
  return v;
}

Verdict c2_projection_scaling() {
  Verdict v{2, "projection error decays like sqrt(h)", false, "", 0.0};
  const auto spec = three_inclusions();
  std::vector<double> err;
  for (int n : {64, 128, 256}) {
    const auto s = make_space(n);
    const Basis b = as_basis(*s, phantom_values(spec, *s), 3, 1e-8);
    err.push_back(exact_projection_error(*s, spec, b));
  }
  const double r1 = err[0] / err[1], r2 = err[1] / err[2];
  v.pass = err[0] > err[1] && err[1] > err[2] && within(r1, 1.1, 2.5) && within(r2, 1.1, 2.5);
  v.detail = fmt("errors %.4g %.4g %.4g, ratios %.3f %.3f", err[0], err[1], err[2], r1, r2);
  return v;
}

Verdict c3_smooth_region_gradients() {
  Verdict v{3, "eigenfunction gradients away from interfaces", false, "", 0.0};
  const auto spec = three_inclusions();
  const auto s = make_space(100);
  const Vector u = phantom_values(spec, *s);
  const Basis fine = as_basis(*s, u, 3, 1e-8);
  const Basis coarse = as_basis(*s, u, 3, 1e-6);
  const auto mask = smooth_region_elements(spec, s->mesh());
  v.pass = true;
  std::string ratios;
  for (int k = 0; k < 3; ++k) {
    const double a = gradient_norm_on(s->mesh(), fine.functions.col(k), mask);
    const double b = gradient_norm_on(s->mesh(), coarse.functions.col(k), mask);
    const double factor = std::max(a, b) / std::min(a, b);
    v.pass = v.pass && within(factor, 3.0, 30.0);
    ratios += fmt(" %.4g", factor);
  }
  v.detail = "factors (eps 1e-6 vs 1e-8):" + ratios;
  return v;
}

Verdict c4_adjoints() {
  Verdict v{4, "adjoint gradients match finite differences", false, "", 0.0};
  Rng rng(404);
  double worst_e = 0.0, worst_w = 0.0;
  {
    const auto s = make_space(16);
    for (int trial = 0; trial < 20; ++trial) {
      auto p = EllipticProblem::with_constant_source(s);
      p.observation = solve_forward(random_medium(*s, rng), p);
      EllipticModel model(p);
      const Vector u = random_medium(*s, rng);
      const Vector dir = random_interior(*s, rng);
      const double t = 1e-5;
      const double fd = (model.evaluate(u + t * dir, false).value - model.evaluate(u - t * dir, false).value) / (2 * t);
      const double an = s->inner(model.gradient(u), dir);
      worst_e = std::max(worst_e, std::abs(an - fd) / std::abs(an));
    }
  }
  {
    const auto s = make_space(32);
    std::vector<Vector> src;
    for (const auto& pt : boundary_source_positions(2, 0.2)) src.push_back(gaussian_source(s->mesh(), pt, 200.0, 1e-2));
    const TimeGrid grid{0.009, 200};
    const WaveConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
      const Vector truth = random_medium(*s, rng);
      std::vector<Traces> obs;
      for (const auto& f : src) obs.push_back(solve_wave(*s, truth, f, 10.0, grid).traces);
      const Vector u = random_medium(*s, rng);
      const Vector dir = random_interior(*s, rng) * 0.1;
      const double t = 1e-4;
      const double fd = (wave_misfit(*s, u + t * dir, src, obs, cfg, grid, false).value -
                         wave_misfit(*s, u - t * dir, src, obs, cfg, grid, false).value) / (2 * t);
      const double an = s->inner(wave_gradient(*s, u, src, obs, cfg, grid), dir);
      worst_w = std::max(worst_w, std::abs(an - fd) / std::abs(an));
    }
  }
  v.pass = worst_e <= 1e-5 && worst_w <= 1e-6;
  v.detail = fmt("worst relative FD error: elliptic %.2e (20 trials), wave %.2e (10 trials)", worst_e, worst_w);
  return v;
}

Verdict c5_angle_lemmas() {
  Verdict v{5, "sensitivity counts and angle condition", false, "", 0.0};
  const auto s = make_space(12);
  const Basis phi = laplace_basis(*s, 30);
  Rng rng(505);
  int checked = 0, angle_fail = 0, count_fail = 0;
  for (double eps : {1e-4, 0.3, 0.9}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vector coeffs = random_normal(phi.size(), rng);
      const double weight = 3.0 * rng.uniform();
      const Vector g = phi.functions * coeffs + weight * random_interior(*s, rng);
      const auto sens = sensitivities(*s, g, phi);
      std::vector<double> sigma;
      for (const auto& x : sens) sigma.push_back(x.sigma);
      const double gn = s->norm(g);
      const NTheta nt = n_theta(sigma, gn, eps);

      const int size = static_cast<int>(sigma.size());
      int bf_inf = 0, bf_2 = 0;
      for (int k = 1; k <= size; ++k) {
        bool all = true;
        for (int j = 0; j < k; ++j) all = all && std::abs(sigma[j]) >= eps * gn;
        if (all) bf_inf = k;
      }
      for (int k = size; k >= 1; --k) {
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += sigma[j] * sigma[j];
        if (std::sqrt(sum) >= eps * gn) bf_2 = k;
      }
      if (nt.n_inf != bf_inf || nt.n_2 != bf_2 || nt.n_theta != std::max(bf_inf, bf_2)) ++count_fail;

      for (int count : {nt.n_inf, nt.n_2}) {
        if (count < 1) continue;
        Vector d = Vector::Zero(s->num_nodes());
        for (int k = 0; k < count; ++k) d += sens[k].sigma * phi.functions.col(sens[k].index);
        ++checked;
        if (!check_angle_condition(*s, g, d, eps).satisfied) ++angle_fail;
      }
    }
  }
  v.pass = angle_fail == 0 && count_fail == 0 && checked > 0;
  v.detail = fmt("%d constructed directions, %d violate the angle condition; %d count mismatches in 300 cases", checked,
                 angle_fail, count_fail);
  return v;
}

Verdict c6_truncation() {
  Verdict v{6, "truncation index and growth control", false, "", 0.0};
  Rng rng(606);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = 1 + static_cast<int>(rng.uniform() * 40);
    std::vector<double> gamma(len);
    for (auto& x : gamma) {
      if (rng.uniform() < 0.1) {
        x = 0.0;
        continue;
      }
      const double z = rng.normal();
      x = z * std::pow(10.0, -3.0 * rng.uniform());
    }
    if (std::all_of(gamma.begin(), gamma.end(), [](double x) { return x == 0.0; })) gamma[0] = 1.0;
    std::sort(gamma.begin(), gamma.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    const double eps = std::pow(10.0, -3.0 * rng.uniform());
    double total = 0.0;
    for (double x : gamma) total += x * x;
    int brute = 0;
    for (int k = 1; k <= len && brute == 0; ++k) {
      double tail = 0.0;
      for (int j = k; j < len; ++j) tail += gamma[j] * gamma[j];
      if (tail <= eps * eps * total) brute = k;
    }
    if (truncation_index(gamma, eps) != brute) ++mismatches;
  }
  if (truncation_index(std::vector<double>(5, 0.0), 0.05) != 0) ++mismatches;

  struct Case {
    int n0, k;
    int want_k;
    double want_eps;
  };
  const double e = 0.05;
  const Case cases[] = {
      {150, 100, 120, 0.1},  {50, 100, 80, 0.025}, {110, 100, 110, 0.05}, {80, 100, 80, 0.05},
      {120, 100, 120, 0.05}, {7, 10, 8, 0.025},    {13, 10, 12, 0.1},     {1, 3, 3, 0.025},
      {5, 3, 4, 0.1},        {0, 10, 8, 0.025},    {50, 50, 50, 0.05},
  };
  int rule_fail = 0;
  for (const Case& c : cases) {
    const GrowthDecision d = growth_control(c.n0, c.k, e, 0.8, 1.2);
    if (d.k != c.want_k || d.eps_psi != c.want_eps) ++rule_fail;
  }
  v.pass = mismatches == 0 && rule_fail == 0;
  v.detail = fmt("%d N0 mismatches in 1001 cases, %d of %zu growth-control cases wrong", mismatches, rule_fail,
                 std::size(cases));
  return v;
}

Verdict c7_oracles() {
  Verdict v{7, "solvers agree with dense oracles", false, "", 0.0};
  Rng rng(707);
  double eig_err = 0.0, cg_err = 0.0;
  int rank_fail = 0;
  for (int n : {6, 9, 12}) {
    const auto s = make_space(n);
    for (bool laplace : {true, false}) {
      std::vector<double> w(s->mesh().num_elements(), 1.0);
      if (!laplace)
        for (auto& x : w) x = 0.5 + 1.5 * rng.uniform();
      const SparseMatrix a = s->interior_stiffness(w);
      const SparseMatrix& m = s->interior_mass();
      const int k = std::min(10, s->num_interior());
      const EigPairs pairs = smallest_eigpairs(a, m, k);
      const Matrix ad(a), md(m);
      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> dense(ad, md);
      for (int i = 0; i < k; ++i)
        eig_err = std::max(eig_err, std::abs(pairs.eigenvalues[i] - dense.eigenvalues()[i]) / dense.eigenvalues()[i]);

      const Vector b = random_normal(s->num_interior(), rng);
      CgOptions opt;
      opt.tol = 1e-12;
      const Vector x = cg_solve(a, b, opt).x;
      const Vector xd = Matrix(a).llt().solve(b);
      cg_err = std::max(cg_err, (x - xd).norm() / xd.norm());

      for (int r : {1, 3, 5, 8}) {
        const int cols = 8;
        Matrix vecs = Matrix(s->num_interior(), r);
        for (int j = 0; j < r; ++j) vecs.col(j) = random_normal(s->num_interior(), rng);
        Matrix mix(r, cols);
        for (int i = 0; i < r; ++i) mix.row(i) = random_normal(cols, rng).transpose();
        Matrix stacked(s->num_interior(), cols + 2);
        stacked << vecs * mix, Vector::Zero(s->num_interior()), vecs.col(0);
        const int mgs = static_cast<int>(mgs_orthonormalize(stacked, m).cols());
        if (mgs != Eigen::FullPivLU<Matrix>(stacked).rank()) ++rank_fail;
      }
    }
  }
  v.pass = eig_err <= 1e-8 && cg_err <= 1e-8 && rank_fail == 0;
  v.detail = fmt("eigenvalue rel. error %.2e, CG rel. error %.2e, %d MGS rank mismatches", eig_err, cg_err, rank_fail);
  return v;
}

RunConfig desk_elliptic_config() {
  RunConfig c;
  c.problem = ProblemKind::kElliptic;
  c.n = 128;
  c.phantom = six_discs();
  c.noise = 0.02;
  c.seed = 1;
  c.asi.k1 = 50;
  c.asi.m_max = 50;
  return c;
}

RunConfig desk_wave_config() {
  RunConfig c;
  c.problem = ProblemKind::kWave;
  c.n = 64;
  c.phantom = six_discs();
  c.noise = 0.02;
  c.seed = 1;
  c.wave.num_sources = 8;
  c.wave.nu = 5.0;
  c.asi.m_max = 15;
  return c;
}

double final_error(const InversionOutcome& r) { return r.history[r.m_star].rel_error; }

/// history.csv without the trailing wall_time column.
std::string history_without_timing(const std::vector<IterationRecord>& history) {
  std::ostringstream os;
  write_history(os, history);
  std::istringstream in(os.str());
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Session::Cache {
  std::ostream* log = nullptr;
  std::optional<InversionOutcome> asi;
  std::optional<InversionOutcome> tikhonov;

  std::function<void(const IterationRecord&)> monitor(std::string label) {
    return [this, label](const IterationRecord& r) {
      if (log)
        *log << fmt("  [%s] m=%d K=%d misfit=%.4e tau=%.4f e=%.4f t=%.1fs", label.c_str(), r.m, r.k, r.misfit, r.tau,
                    r.rel_error, r.wall_time)
             << std::endl;
    };
  }

  const InversionOutcome& desk_asi() {
    if (!asi) {
      const RunConfig c = desk_elliptic_config();
      asi = run_inversion(c, generate_data(c), Method::kAsi, "", monitor("asi"));
    }
    return *asi;
  }
};

Session::Session(std::ostream* log) : cache_(std::make_unique<Cache>()) { cache_->log = log; }
Session::~Session() = default;

namespace {

Verdict c8_desk_elliptic(Session::Cache& cache) {
  Verdict v{8, "desk-scale elliptic inversion, six discs", false, "", 0.0};
  const RunConfig c = desk_elliptic_config();
  const InversionOutcome& a = cache.desk_asi();
  if (!cache.tikhonov)
    cache.tikhonov = run_inversion(c, generate_data(c), Method::kTikhonov, "", cache.monitor("tikhonov"));
  const InversionOutcome& t = *cache.tikhonov;

  const bool stopped = a.exit == "discrepancy" || a.exit == "max-iter";
  const double e = final_error(a), e_tik = final_error(t);
  bool tau_ok = false;
  if (a.exit == "discrepancy") {
    tau_ok = a.history.back().tau <= 1.05;
  } else if (a.history.size() >= 5) {
    tau_ok = true;
    for (size_t k = a.history.size() - 4; k < a.history.size(); ++k)
      tau_ok = tau_ok && a.history[k].tau < a.history[k - 1].tau;
  }
  int k_max = 0;
  for (const auto& r : a.history) k_max = std::max({k_max, r.k, r.k_next});
  const bool e_ok = e <= 0.10, k_ok = k_max <= 200, beats = e < e_tik;
  v.pass = stopped && e_ok && tau_ok && k_ok && beats;
  v.detail = fmt("exit %s at m*=%d, e=%.2f%% (<=10%%: %s), tau=%.3f, K_max=%d, Tikhonov e=%.2f%% (m*=%d)",
                 a.exit.c_str(), a.m_star, 100 * e, e_ok ? "yes" : "no", a.history.back().tau, k_max, 100 * e_tik,
                 t.m_star);
  return v;
}

Verdict c9_gradient_trend(Session::Cache& cache) {
  Verdict v{9, "gradient norm and misfit monotonicity along the desk run", false, "", 0.0};
  const auto& h = cache.desk_asi().history;
  const double ratio = h.back().grad_norm / h.front().grad_norm;
  const bool monotone = std::all_of(h.begin(), h.end(), [](const IterationRecord& r) { return r.monotone; });
  v.pass = ratio <= 0.1 && monotone;
  v.detail = fmt("final/initial gradient norm %.3e, relaxed monotonicity %s over %zu records", ratio,
                 monotone ? "holds" : "violated", h.size());
  return v;
}

std::string last_state(const char* label, const std::vector<IterationRecord>& h) {
  if (h.empty()) return fmt("%s: no iterations", label);
  const auto& r = h.back();
  return fmt("%s stopped at m=%d with K=%d, e=%.2f%%, tau=%.3f", label, r.m, r.k, 100 * r.rel_error, r.tau);
}

Verdict c10_desk_wave(Session::Cache& cache) {
  Verdict v{10, "desk-scale wave inversion, ASI vs ASI0", false, "", 0.0};
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(3600);
  const RunConfig c = desk_wave_config();
  const DataSet data = generate_data(c);
  auto check_deadline = [deadline] {
    if (std::chrono::steady_clock::now() > deadline) throw BudgetExceeded("runtime budget exceeded");
  };
  std::optional<InversionOutcome> a, a0;
  try {
    a = run_inversion(c, data, Method::kAsi, "", cache.monitor("asi"), check_deadline);
    a0 = run_inversion(c, data, Method::kAsi0, "", cache.monitor("asi0"), check_deadline);
  } catch (const AsiRunError& e) {
    v.detail = fmt("aborted after the 3600 s budget; %s", last_state(a ? "ASI0" : "ASI", e.history()).c_str());
    if (a) v.detail += "; ASI finished with e=" + fmt("%.2f%%", 100 * final_error(*a));
    return v;
  }
  const double j0 = a->history.front().misfit, jf = a->history[a->m_star].misfit;
  const double e1 = a->history.size() > 1 ? a->history[1].rel_error : NAN;
  const double ef = final_error(*a), ef0 = final_error(*a0);
  v.pass = jf < 0.3 * j0 && ef < e1 && ef <= ef0;
  v.detail = fmt("misfit ratio %.3f, e(1)=%.2f%% -> e(m*=%d)=%.2f%%, ASI0 e=%.2f%% (m*=%d), exits %s/%s", jf / j0,
                 100 * e1, a->m_star, 100 * ef, 100 * ef0, a0->m_star, a->exit.c_str(), a0->exit.c_str());
  return v;
}

Verdict c11_determinism(Session::Cache& cache) {
  Verdict v{11, "repeat of the desk run is identical", false, "", 0.0};
  const std::string first = history_without_timing(cache.desk_asi().history);
  const RunConfig c = desk_elliptic_config();
  const InversionOutcome again = run_inversion(c, generate_data(c), Method::kAsi, "", cache.monitor("asi repeat"));
  const std::string second = history_without_timing(again.history);
  v.pass = first == second;
  v.detail = fmt("%zu history rows, %s", again.history.size(), v.pass ? "identical" : "differ");
  return v;
}

struct Limit {
  int id;
  double seconds;
};
constexpr Limit kLimits[] = {{1, 120}, {2, 300}, {3, 180}, {4, 180}, {5, 1}, {6, 1}, {7, 60}, {8, 1800}, {10, 3600}};

}  // namespace

std::vector<int> criteria_in(Suite suite) {
  if (suite == Suite::kFast) return {1, 2, 3, 4, 5, 6, 7};
  return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
}

Verdict Session::run(int id) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    switch (id) {
      case 1: v = c1_eigenvalues(); break;
      case 2: v = c2_projection_scaling(); break;
      case 3: v = c3_smooth_region_gradients(); break;
      case 4: v = c4_adjoints(); break;
      case 5: v = c5_angle_lemmas(); break;
      case 6: v = c6_truncation(); break;
      case 7: v = c7_oracles(); break;
      case 8: v = c8_desk_elliptic(*cache_); break;
      case 9: v = c9_gradient_trend(*cache_); break;
      case 10: v = c10_desk_wave(*cache_); break;
      case 11: v = c11_determinism(*cache_); break;
      default: throw InvalidArgument("no criterion " + std::to_string(id));
    }
  } catch (const InvalidArgument&) {
    throw;
  } catch (const std::exception& e) {
    v.id = id;
    v.title = "criterion " + std::to_string(id);
    v.pass = false;
    v.detail = std::string("error: ") + e.what();
  }
  v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const Limit& l : kLimits) {
    if (l.id == id && v.seconds > l.seconds) {
      v.pass = false;
      v.detail += fmt("; runtime %.1f s over the %.0f s limit", v.seconds, l.seconds);
    }
  }
  return v;
}

std::string format_verdict(const Verdict& v) {
  return fmt("%s %2d  %s: %s [%.1f s]", v.pass ? "PASS" : "FAIL", v.id, v.title.c_str(), v.detail.c_str(), v.seconds);
}

SuiteReport run_criteria(const std::vector<int>& ids, const std::vector<int>& expected_failures, std::ostream& out,
                         std::ostream* log) {
  Session session(log);
  SuiteReport report;
  for (int id : ids) {
    Verdict v = session.run(id);
    out << format_verdict(v) << std::endl;
    const bool expected_fail = std::find(expected_failures.begin(), expected_failures.end(), id) != expected_failures.end();
    if (!v.pass && !expected_fail) report.unexpected_failures.push_back(id);
    if (v.pass && expected_fail) report.unexpected_passes.push_back(id);
    report.verdicts.push_back(std::move(v));
  }
  int passed = 0;
  for (const auto& v : report.verdicts) passed += v.pass;
  out << passed << "/" << report.verdicts.size() << " criteria passed";
  auto list = [](const std::vector<int>& xs) {
    std::string s;
    for (int x : xs) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
  };
  if (!expected_failures.empty()) out << "; known failures expected: " << list(expected_failures);
  if (!report.unexpected_failures.empty()) out << "; unexpected failures: " << list(report.unexpected_failures);
  if (!report.unexpected_passes.empty()) out << "; expected to fail but passed: " << list(report.unexpected_passes);
  out << std::endl;
  return report;
}

}  // namespace asi::acceptance
