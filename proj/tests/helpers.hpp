// SPDX-License-Identifier: Apache-2.0
// Synthetic signal generators and scratch-dir plumbing shared by tests.

#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "phenoscribe/audio_io.hpp"
#include "phenoscribe/common.hpp"

namespace testutil {

inline phenoscribe::AudioBuffer make_sine(double freq, double dur_s, int sr = 16000,
                                          double amp = 0.5, double phase = 0.0) {
  phenoscribe::AudioBuffer b;
  b.sample_rate = sr;
  size_t n = static_cast<size_t>(std::lround(dur_s * sr));
  b.samples.resize(n);
  for (size_t i = 0; i < n; ++i) b.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / sr + phase);
  return b;
}

inline phenoscribe::AudioBuffer make_silence(double dur_s, int sr = 16000) {
  phenoscribe::AudioBuffer b;
  b.sample_rate = sr;
  b.samples.assign(static_cast<size_t>(std::lround(dur_s * sr)), 0.0);
  return b;
}

inline phenoscribe::AudioBuffer make_noise(double dur_s, uint64_t seed, int sr = 16000,
                                           double amp = 0.3) {
  phenoscribe::Rng rng(seed);
  phenoscribe::AudioBuffer b;
  b.sample_rate = sr;
  size_t n = static_cast<size_t>(std::lround(dur_s * sr));
  b.samples.resize(n);
  for (size_t i = 0; i < n; ++i) b.samples[i] = phenoscribe::clampd(amp * rng.normal(), -1.0, 1.0);
  return b;
}

inline phenoscribe::AudioBuffer concat(const std::vector<phenoscribe::AudioBuffer>& parts) {
  phenoscribe::AudioBuffer out;
  out.sample_rate = parts.empty() ? 16000 : parts.front().sample_rate;
  for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  return out;
}

// Fresh scratch directory under the system temp root.
inline std::string scratch_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("phenoscribe_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace testutil
