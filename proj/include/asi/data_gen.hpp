#pragma once

#include <cstdint>
#include <vector>

#include "asi/forward_wave.hpp"
#include "asi/phantom.hpp"

namespace asi {

/// round(factor * n); throws InvalidArgument when factor != 1 yet the result
/// coincides with n, since data would then come from the inversion mesh.
int data_mesh_size(int n, double factor);

struct EllipticData {
  FeFunction truth;     // phantom on the inversion mesh
  FeFunction clean;     // y[u] from the data mesh, interpolated
  FeFunction observed;  // clean + noise
  double delta_hat = 0.0;
  double delta_abs = 0.0;  // ||observed - clean||_L2, equal to delta_hat * ||clean||
  int n_fine = 0;
};

/// Forward solve on the data mesh with source f, interpolation to the
/// inversion mesh, Gaussian noise on the interior nodes rescaled to the exact level.
EllipticData gen_noisy_elliptic(const PhantomSpec& spec, double delta_hat, double fine_factor, std::uint64_t seed,
                                int n, double source = 100.0);

/// Time grid shared by the data and inversion meshes; the CFL step comes from
/// the finer spacing.
TimeGrid wave_time_grid(const WaveConfig& config, int n_fine);

/// Gaussian sources at boundary_source_positions on `mesh`.
std::vector<Vector> wave_sources(const Mesh& mesh, const WaveConfig& config);

/// Maps traces on the boundary of `from` to the boundary nodes of `to` by
/// piecewise-linear interpolation along the boundary.
Traces transfer_traces(const Mesh& from, const Mesh& to, const Traces& traces);

struct WaveData {
  FeFunction truth;
  TimeGrid grid;
  std::vector<Traces> clean;
  std::vector<Traces> observed;
  double delta_hat = 0.0;
  double delta_abs = 0.0;  // sqrt(sum_l ||clean_l - observed_l||^2)
  double delta_rel = 0.0;  // delta_abs / sqrt(sum_l ||clean_l||^2)
  int n_fine = 0;
};

/// One forward solve per source on the data mesh, traces moved to the
/// inversion mesh, then y (1 + delta_hat eta) with eta drawn source by source,
/// time step by time step, boundary node by boundary node.
WaveData gen_noisy_wave(const PhantomSpec& spec, double delta_hat, const WaveConfig& config, std::uint64_t seed,
                        int n, double fine_factor);

/// ||t||^2 in the trace norm (lumped boundary mass, trapezoid in time).
double trace_norm_squared(const Mesh& mesh, const TimeGrid& grid, const Traces& t);

}  // namespace asi
