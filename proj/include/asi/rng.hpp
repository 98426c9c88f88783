#pragma once

#include <cstdint>
#include <random>

namespace asi {

/// Portable random stream: std::mt19937_64 (fully specified by the standard),
/// uniforms from its top 53 bits, normals by Box-Muller in pairs. The standard
/// library distributions are avoided because their algorithms vary by vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace asi
