#pragma once

#include <cstdint>
#include <vector>

#include "asi/forward_elliptic.hpp"

namespace asi {

struct WaveConfig {
  double final_time = 2.0;
  /// 0 selects the CFL step for `max_medium`.
  double dt = 0.0;
  double nu = 10.0;
  double kappa = 200.0;
  double width = 1e-2;
  int num_sources = 32;
  double source_inset = 0.05;
  /// Upper bound on u used to pick dt; solves with larger media fail the CFL check.
  double max_medium = 4.0;
  /// 0 stores the whole forward history for the adjoint; k > 0 keeps every k-th
  /// state and recomputes the rest.
  int checkpoint_stride = 0;
  std::size_t memory_budget_bytes = std::size_t{2} << 30;
};

struct TimeGrid {
  double dt = 0.0;
  int steps = 0;  // N_T; states at t_n = n dt, n = 0..N_T
};

/// r(t) = (1 - 2 pi^2 (nu t - 1)^2) exp(-pi^2 (nu t - 1)^2).
double ricker(double t, double nu);

/// kappa * exp(-|x - center|^2 / width) at the nodes.
Vector gaussian_source(const Mesh& mesh, Point center, double kappa, double width);

/// `count` points equispaced along the square inset from the boundary,
/// starting at its lower-left corner and running counterclockwise.
std::vector<Point> boundary_source_positions(int count, double inset);

/// 0.9 h / (sqrt(2) sqrt(max_medium)).
double cfl_time_step(double h, double max_medium);

/// Largest dt <= dt_max with final_time / dt integral.
TimeGrid make_time_grid(double final_time, double dt_max);

/// Boundary values over time, num_boundary x (N_T + 1), rows ordered like
/// Mesh::boundary_nodes().
using Traces = Matrix;

struct WaveSolution {
  Traces traces;
  std::vector<Vector> snapshots;
  std::vector<int> snapshot_steps;
};

/// Leapfrog for M_L y'' + B(u) y' + A_u y = M_L g r(t) with zero initial data,
/// B(u) the boundary mass weighted by sqrt(u). Throws CflViolation when dt is
/// too large for max(u) and DivergenceError on non-finite states.
WaveSolution solve_wave(const FeSpace& space, const Vector& u, const Vector& source, double nu, const TimeGrid& grid,
                        int snapshot_stride = 0);

/// Trapezoid-in-time, lumped-boundary-mass-in-space weights of the squared residual.
double trace_misfit(const Mesh& mesh, const TimeGrid& grid, const Traces& simulated, const Traces& observed);

/// Misfit summed over sources, with its derivative as a nodal functional when
/// requested (exact discrete adjoint of the leapfrog scheme).
MisfitEval wave_misfit(const FeSpace& space, const Vector& u, const std::vector<Vector>& sources,
                       const std::vector<Traces>& observed, const WaveConfig& config, const TimeGrid& grid,
                       bool want_derivative);

/// L2 Riesz representative of the misfit derivative.
Vector wave_gradient(const FeSpace& space, const Vector& u, const std::vector<Vector>& sources,
                     const std::vector<Traces>& observed, const WaveConfig& config, const TimeGrid& grid);

/// Rademacher weights for (seed, iteration); identical for identical inputs.
std::vector<double> rademacher_weights(int count, std::uint64_t seed, std::uint64_t iteration);

struct Supershot {
  Vector source;
  Traces traces;
  std::vector<double> weights;
};

Supershot supershot(const std::vector<Vector>& sources, const std::vector<Traces>& traces, std::uint64_t seed,
                    std::uint64_t iteration);

/// Multi-source boundary-trace misfit. The inner objective at outer iteration
/// m uses one super-shot drawn for (seed, m) when `use_supershot` is set.
class WaveModel : public MisfitModel {
 public:
  WaveModel(FeSpacePtr space, WaveConfig config, TimeGrid grid, std::vector<Vector> sources,
            std::vector<Traces> observed, std::uint64_t seed, bool use_supershot = true);

  const FeSpace& space() const override { return *space_; }
  const TimeGrid& grid() const { return grid_; }
  const std::vector<Vector>& sources() const { return sources_; }
  const std::vector<Traces>& observed() const { return observed_; }

  MisfitEval evaluate(const Vector& u, bool want_derivative) const override;
  MisfitEval evaluate_inner(int m, const Vector& u, bool want_derivative) const override;

 private:
  FeSpacePtr space_;
  WaveConfig config_;
  TimeGrid grid_;
  std::vector<Vector> sources_;
  std::vector<Traces> observed_;
  std::uint64_t seed_;
  bool use_supershot_;
};

}  // namespace asi
