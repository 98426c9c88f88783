#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "asi/asi_core.hpp"
#include "asi/baseline_tikhonov.hpp"
#include "asi/forward_wave.hpp"
#include "asi/phantom.hpp"

namespace asi {

enum class ProblemKind { kElliptic, kWave };
const char* to_string(ProblemKind kind);

/// Everything one experiment needs. Read from INI-style text:
///
///   [run]       problem, n, fine_factor, noise, seed, source, snapshot_every
///   [phantom]   name (six_discs|three_inclusions|discs|raster|empty), background,
///               discs ("x y r amplitude; ..."), raster (grid file)
///   [asi]       eps_theta, eps_psi0, rho0, rho1, tau0, k1, m_max, eps, enrich,
///               as_basis_size_factor, drop_tol, zero_noise_grad_tol,
///               inner_grad_tol, inner_max_iter, eig_tol
///   [wave]      final_time, dt, nu, kappa, width, num_sources, source_inset,
///               max_medium, checkpoint_stride, memory_budget_mb, supershot
///   [tikhonov]  max_iter, memory, grad_tol, tau0
///
/// Missing keys keep their defaults; unknown keys are rejected.
struct RunConfig {
  ProblemKind problem = ProblemKind::kElliptic;
  int n = 64;
  double fine_factor = 1.2;
  double noise = 0.02;
  std::uint64_t seed = 1;
  double source = 100.0;
  int snapshot_every = 0;  // 0 writes the final medium only
  PhantomSpec phantom = six_discs();
  AsiConfig asi;
  WaveConfig wave;
  bool supershot = true;
  TikhonovConfig tikhonov;

  void validate() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
/// INI text listing every key; parse_config reproduces the same configuration.
std::string format_config(const RunConfig& config);

}  // namespace asi
