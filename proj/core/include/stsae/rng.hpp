#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace stsae {

/// splitmix64 finalizer; derives independent stream seeds from one master seed
/// by a fixed counter offset.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Chain-owned random source. Copyable; its full state (engine plus cached
/// normal deviate) can be saved and restored.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  /// Gamma(shape, scale = 1).
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

  std::mt19937_64& engine() { return engine_; }

  std::string save() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.save() == b.save(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace stsae
