#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace rsa {

/// FNV-1a, used wherever a platform-stable string hash is needed
/// (per-requirement seed derivation must not depend on std::hash).
uint64_t fnv1a(std::string_view s);

/// Deterministic RNG. mt19937_64 output is fully specified by the standard;
/// the distributions here are hand-rolled because std::*_distribution is
/// implementation-defined and would break byte-identical reruns across
/// toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  /// Uniform integer in [0, n), rejection-sampled.
  uint64_t below(uint64_t n);

  /// Uniform double in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller (no caching, one value per call).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

/// Shortest round-trip decimal form (std::to_chars), identical on every run.
std::string format_double(double x);

std::string ascii_lower(std::string_view s);
std::string trim(std::string_view s);
bool is_ascii_punct(char c);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace rsa
