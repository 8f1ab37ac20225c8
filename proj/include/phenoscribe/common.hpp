// SPDX-License-Identifier: Apache-2.0
//
// Shared small utilities: deterministic RNG, hashing, formatting.
// The RNG implements its own uniform/normal transforms so that streams are
// reproducible independent of the standard library's distribution internals.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace phenoscribe {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input signal shorter than the analysis window/frame it must fill.
struct TooShort : Error {
  using Error::Error;
};

class Rng {
public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t u64() { return engine_(); }

  // Uniform in (0, 1), never exactly 0 or 1.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; avoids std::normal_distribution so streams are portable.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mu, double sd) { return mu + sd * normal(); }

  // Inclusive bounds, rejection-free modulo bias is irrelevant at our ranges.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(engine_() % span);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates with our own index draws, not std::shuffle.
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(engine_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

inline uint64_t fnv1a64(const void* data, size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

// Stable shortest-roundtrip-ish float formatting for cache/result files.
inline std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

inline double clampd(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

}  // namespace phenoscribe
