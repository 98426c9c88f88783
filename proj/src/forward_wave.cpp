#include "asi/forward_wave.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace asi {

double ricker(double t, double nu) {
  const double a = std::numbers::pi * (nu * t - 1.0);
  const double a2 = a * a;
  return (1.0 - 2.0 * a2) * std::exp(-a2);
}

Vector gaussian_source(const Mesh& mesh, Point center, double kappa, double width) {
  if (!(width > 0.0)) throw InvalidArgument("gaussian_source: width must be positive");
  Vector g(mesh.num_nodes());
  for (int k = 0; k < mesh.num_nodes(); ++k) {
    const double dx = mesh.nodes()[k].x - center.x, dy = mesh.nodes()[k].y - center.y;
    g[k] = kappa * std::exp(-(dx * dx + dy * dy) / width);
  }
  return g;
}

std::vector<Point> boundary_source_positions(int count, double inset) {
  if (count < 1) throw InvalidArgument("source count must be positive");
  if (!(inset > 0.0 && inset < 0.5)) throw InvalidArgument("source inset must lie in (0, 0.5)");
  const double side = 1.0 - 2.0 * inset;
  std::vector<Point> out;
  out.reserve(count);
  for (int l = 0; l < count; ++l) {
    const double s = 4.0 * side * l / count;
    const int edge = std::min(3, static_cast<int>(s / side));
    const double a = s - edge * side;
    const double lo = inset, hi = 1.0 - inset;
    switch (edge) {
      case 0: out.push_back({lo + a, lo}); break;
      case 1: out.push_back({hi, lo + a}); break;
      case 2: out.push_back({hi - a, hi}); break;
      default: out.push_back({lo, hi - a}); break;
    }
  }
  return out;
}

double cfl_time_step(double h, double max_medium) {
  if (!(max_medium > 0.0)) throw InvalidArgument("cfl_time_step: medium bound must be positive");
  return 0.9 * h / (std::sqrt(2.0) * std::sqrt(max_medium));
}

TimeGrid make_time_grid(double final_time, double dt_max) {
  if (!(final_time > 0.0) || !(dt_max > 0.0)) throw InvalidArgument("make_time_grid: positive T and dt required");
  TimeGrid g;
  g.steps = static_cast<int>(std::ceil(final_time / dt_max - 1e-12));
  g.dt = final_time / g.steps;
  return g;
}

namespace {

// Leapfrog operators for one medium: C y^{n+1} = 2 M y^n - D y^{n-1} - dt^2 A y^n + dt^2 M g r_n
// with C = M + dt/2 B, D = M - dt/2 B; all but A are diagonal.
struct Leapfrog {
  const FeSpace* space;
  double dt;
  double nu;
  SparseMatrix a;
  Vector m;       // lumped mass
  Vector b;       // absorbing diagonal, zero off the boundary
  Vector c_inv;
  Vector d;

  Leapfrog(const FeSpace& s, const Vector& u, const TimeGrid& grid, double nu_) : space(&s), dt(grid.dt), nu(nu_) {
    check_medium(u);
    const Mesh& mesh = s.mesh();
    const double limit = cfl_time_step(mesh.h(), u.maxCoeff());
    if (dt > limit * (1.0 + 1e-12))
      throw CflViolation("time step " + std::to_string(dt) + " exceeds CFL limit " + std::to_string(limit), limit);
    a = s.stiffness(s.element_average(u));
    m = s.lumped_mass();
    b = Vector::Zero(s.num_nodes());
    for (int j : mesh.boundary_nodes()) b[j] = mesh.h() * std::sqrt(u[j]);
    c_inv = (m + 0.5 * dt * b).cwiseInverse();
    d = m - 0.5 * dt * b;
  }

  // Advances (prev, cur) = (y^{n-1}, y^n) by one step.
  void step(int n, const Vector& mg, Vector& prev, Vector& cur) const {
    Vector next = 2.0 * m.cwiseProduct(cur) - d.cwiseProduct(prev) - dt * dt * (a * cur) +
                  (dt * dt * ricker(n * dt, nu)) * mg;
    next = next.cwiseProduct(c_inv);
    if (!next.allFinite()) throw DivergenceError("wave state became non-finite at step " + std::to_string(n + 1));
    prev.swap(cur);
    cur.swap(next);
  }
};

Vector boundary_rows(const Mesh& mesh, const Vector& y) {
  const auto& bn = mesh.boundary_nodes();
  Vector out(static_cast<Eigen::Index>(bn.size()));
  for (size_t j = 0; j < bn.size(); ++j) out[static_cast<Eigen::Index>(j)] = y[bn[j]];
  return out;
}

double trapezoid_weight(const TimeGrid& grid, int n) {
  return (n == 0 || n == grid.steps) ? 0.5 * grid.dt : grid.dt;
}

void check_traces(const Mesh& mesh, const TimeGrid& grid, const Traces& t) {
  if (t.rows() != mesh.num_boundary() || t.cols() != grid.steps + 1)
    throw InvalidArgument("trace dimensions do not match mesh boundary and time grid");
}

// Misfit of one source and, optionally, its nodal derivative added to `derivative`.
double source_misfit(const Leapfrog& op, const Vector& u, const Vector& source, const Traces& observed,
                     const TimeGrid& grid, int checkpoint_stride, std::size_t budget, Vector* derivative) {
  const FeSpace& s = *op.space;
  const Mesh& mesh = s.mesh();
  const int nn = s.num_nodes();
  const int steps = grid.steps;
  const Vector mg = op.m.cwiseProduct(source);
  const double h = mesh.h();

  if (!derivative) {
    Vector prev = Vector::Zero(nn), cur = Vector::Zero(nn);
    double value = 0.0;
    for (int n = 0; n <= steps; ++n) {
      if (n > 0) op.step(n - 1, mg, prev, cur);
      const Vector r = boundary_rows(mesh, cur) - observed.col(n);
      value += 0.5 * trapezoid_weight(grid, n) * h * r.squaredNorm();
    }
    return value;
  }

  int stride = checkpoint_stride;
  const std::size_t state_bytes = sizeof(double) * static_cast<std::size_t>(nn);
  if (stride <= 0) {
    if (state_bytes * static_cast<std::size_t>(steps + 2) > budget) {
      const int suggest = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(steps)))));
      throw MemoryBudgetExceeded("forward history of " + std::to_string(steps + 2) + " states exceeds the memory " +
                                 "budget; set checkpoint_stride (e.g. " + std::to_string(suggest) + ")");
    }
    stride = steps;
  }

  // Forward sweep: traces for all steps, checkpoints (y^{n-1}, y^n) at multiples of the stride.
  Matrix residual(mesh.num_boundary(), steps + 1);
  std::vector<std::pair<Vector, Vector>> checkpoints;
  {
    Vector prev = Vector::Zero(nn), cur = Vector::Zero(nn);
    for (int n = 0; n <= steps; ++n) {
      if (n > 0) op.step(n - 1, mg, prev, cur);
      if (n % stride == 0 && n < steps) checkpoints.emplace_back(prev, cur);
      residual.col(n) = boundary_rows(mesh, cur) - observed.col(n);
    }
  }
  double value = 0.0;
  for (int n = 0; n <= steps; ++n) value += 0.5 * trapezoid_weight(grid, n) * h * residual.col(n).squaredNorm();

  // Reverse sweep: C p^k = -dJ/dy^k + (2M - dt^2 A) p^{k+1} - D p^{k+2}, k = N..1,
  // accumulating p^{k}.[dt/2 dB/du (y^k - y^{k-2}) + dt^2 dA/du y^{k-1}].
  const auto& bn = mesh.boundary_nodes();
  const double dt = grid.dt;
  Vector p1 = Vector::Zero(nn), p2 = Vector::Zero(nn);  // p^{k+1}, p^{k+2}
  std::vector<double> q(mesh.num_elements(), 0.0);
  Vector boundary_term = Vector::Zero(nn);
  Matrix seg;
  for (int c = static_cast<int>(checkpoints.size()) - 1; c >= 0; --c) {
    const int s0 = c * stride;
    const int s1 = std::min(s0 + stride, steps);
    // seg column j holds y^{s0 - 1 + j}.
    seg.resize(nn, s1 - s0 + 2);
    Vector prev = checkpoints[c].first, cur = checkpoints[c].second;
    seg.col(0) = prev;
    seg.col(1) = cur;
    for (int n = s0 + 1; n <= s1; ++n) {
      op.step(n - 1, mg, prev, cur);
      seg.col(n - s0 + 1) = cur;
    }
    for (int k = s1; k > s0; --k) {
      Vector rhs = 2.0 * op.m.cwiseProduct(p1) - dt * dt * (op.a * p1) - op.d.cwiseProduct(p2);
      const double w = trapezoid_weight(grid, k) * h;
      for (size_t j = 0; j < bn.size(); ++j) rhs[bn[j]] -= w * residual(static_cast<Eigen::Index>(j), k);
      Vector pk = rhs.cwiseProduct(op.c_inv);
      const auto yk = seg.col(k - s0 + 1);
      const auto ykm1 = seg.col(k - s0);
      const auto ykm2 = seg.col(k - s0 - 1);
      for (int j : bn) boundary_term[j] += pk[j] * (yk[j] - ykm2[j]);
      const Vector y1 = ykm1;
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto gp = mesh.gradient_of(pk, e);
        const auto gy = mesh.gradient_of(y1, e);
        q[e] += gp[0] * gy[0] + gp[1] * gy[1];
      }
      p2.swap(p1);
      p1.swap(pk);
    }
  }
  for (auto& x : q) x *= dt * dt;
  Vector d = s.scatter_element_average(q);
  for (int j : bn) d[j] += 0.5 * dt * boundary_term[j] * h / (2.0 * std::sqrt(u[j]));
  *derivative += d;
  return value;
}

}  // namespace

WaveSolution solve_wave(const FeSpace& space, const Vector& u, const Vector& source, double nu, const TimeGrid& grid,
                        int snapshot_stride) {
  if (source.size() != space.num_nodes()) throw InvalidArgument("wave source size does not match mesh");
  const Leapfrog op(space, u, grid, nu);
  const Mesh& mesh = space.mesh();
  const Vector mg = op.m.cwiseProduct(source);
  WaveSolution out;
  out.traces.resize(mesh.num_boundary(), grid.steps + 1);
  Vector prev = Vector::Zero(space.num_nodes()), cur = Vector::Zero(space.num_nodes());
  for (int n = 0; n <= grid.steps; ++n) {
    if (n > 0) op.step(n - 1, mg, prev, cur);
    out.traces.col(n) = boundary_rows(mesh, cur);
    if (snapshot_stride > 0 && n % snapshot_stride == 0) {
      out.snapshots.push_back(cur);
      out.snapshot_steps.push_back(n);
    }
  }
  return out;
}

double trace_misfit(const Mesh& mesh, const TimeGrid& grid, const Traces& simulated, const Traces& observed) {
  check_traces(mesh, grid, simulated);
  check_traces(mesh, grid, observed);
  double value = 0.0;
  for (int n = 0; n <= grid.steps; ++n)
    value += 0.5 * trapezoid_weight(grid, n) * mesh.h() * (simulated.col(n) - observed.col(n)).squaredNorm();
  return value;
}

MisfitEval wave_misfit(const FeSpace& space, const Vector& u, const std::vector<Vector>& sources,
                       const std::vector<Traces>& observed, const WaveConfig& config, const TimeGrid& grid,
                       bool want_derivative) {
  if (sources.size() != observed.size()) throw InvalidArgument("source and trace counts differ");
  const Leapfrog op(space, u, grid, config.nu);
  MisfitEval out;
  if (want_derivative) out.derivative = Vector::Zero(space.num_nodes());
  for (size_t l = 0; l < sources.size(); ++l) {
    if (sources[l].size() != space.num_nodes()) throw InvalidArgument("wave source size does not match mesh");
    check_traces(space.mesh(), grid, observed[l]);
    out.value += source_misfit(op, u, sources[l], observed[l], grid, config.checkpoint_stride,
                               config.memory_budget_bytes, want_derivative ? &out.derivative : nullptr);
  }
  return out;
}

Vector wave_gradient(const FeSpace& space, const Vector& u, const std::vector<Vector>& sources,
                     const std::vector<Traces>& observed, const WaveConfig& config, const TimeGrid& grid) {
  return space.riesz(wave_misfit(space, u, sources, observed, config, grid, true).derivative);
}

std::vector<double> rademacher_weights(int count, std::uint64_t seed, std::uint64_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32)};
  std::mt19937_64 gen(seq);
  std::vector<double> xi(count);
  for (auto& x : xi) x = (gen() >> 63) ? 1.0 : -1.0;
  return xi;
}

Supershot supershot(const std::vector<Vector>& sources, const std::vector<Traces>& traces, std::uint64_t seed,
                    std::uint64_t iteration) {
  if (sources.empty() || sources.size() != traces.size()) throw InvalidArgument("supershot needs matching sources");
  Supershot s;
  s.weights = rademacher_weights(static_cast<int>(sources.size()), seed, iteration);
  s.source = Vector::Zero(sources[0].size());
  s.traces = Traces::Zero(traces[0].rows(), traces[0].cols());
  for (size_t l = 0; l < sources.size(); ++l) {
    s.source += s.weights[l] * sources[l];
    s.traces += s.weights[l] * traces[l];
  }
  return s;
}

WaveModel::WaveModel(FeSpacePtr space, WaveConfig config, TimeGrid grid, std::vector<Vector> sources,
                     std::vector<Traces> observed, std::uint64_t seed, bool use_supershot)
    : space_(std::move(space)),
      config_(config),
      grid_(grid),
      sources_(std::move(sources)),
      observed_(std::move(observed)),
      seed_(seed),
      use_supershot_(use_supershot) {
  if (sources_.empty() || sources_.size() != observed_.size())
    throw InvalidArgument("wave model needs one trace set per source");
}

MisfitEval WaveModel::evaluate(const Vector& u, bool want_derivative) const {
  return wave_misfit(*space_, u, sources_, observed_, config_, grid_, want_derivative);
}

MisfitEval WaveModel::evaluate_inner(int m, const Vector& u, bool want_derivative) const {
  if (!use_supershot_) return evaluate(u, want_derivative);
  const Supershot s = supershot(sources_, observed_, seed_, static_cast<std::uint64_t>(m));
  return wave_misfit(*space_, u, {s.source}, {s.traces}, config_, grid_, want_derivative);
}

}  // namespace asi
