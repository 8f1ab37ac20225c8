// SPDX-License-Identifier: Apache-2.0
//
// WAV loading/saving, linear resampling and framing.
// Only RIFF/WAVE PCM 16-bit mono is accepted; anything else is rejected so
// the on-disk contract stays bit-exact.

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "phenoscribe/common.hpp"

namespace phenoscribe {

struct AudioError : Error {
  using Error::Error;
};
struct MissingFile : AudioError {
  using AudioError::AudioError;
};
struct BadMagic : AudioError {
  using AudioError::AudioError;
};
struct UnsupportedFormat : AudioError {
  using AudioError::AudioError;
};
struct TruncatedData : AudioError {
  using AudioError::AudioError;
};
struct ZeroRate : AudioError {
  using AudioError::AudioError;
};
struct BadWindow : AudioError {
  using AudioError::AudioError;
};

struct AudioBuffer {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct FrameSeries {
  std::vector<std::vector<double>> frames;
  int win_len = 0;
  int hop = 0;
  int origin_sr = 0;
};

namespace detail {

inline uint32_t read_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
inline uint16_t read_u16le(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

inline AudioBuffer load_wav(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingFile("no such file: " + path);
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingFile("cannot open: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12) throw TruncatedData("file shorter than RIFF header: " + path);
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw BadMagic("not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  uint16_t audio_format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    char id[5] = {0};
    std::memcpy(id, bytes.data() + pos, 4);
    uint32_t chunk_size = detail::read_u32le(bytes.data() + pos + 4);
    size_t body = pos + 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (body + 16 > bytes.size()) throw TruncatedData("fmt chunk truncated: " + path);
      audio_format = detail::read_u16le(bytes.data() + body);
      channels = detail::read_u16le(bytes.data() + body + 2);
      sample_rate = detail::read_u32le(bytes.data() + body + 4);
      bits = detail::read_u16le(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw TruncatedData("data chunk before fmt: " + path);
      if (audio_format != 1 || channels != 1 || bits != 16)
        throw UnsupportedFormat("need PCM16 mono, got format=" + std::to_string(audio_format) +
                                " channels=" + std::to_string(channels) + " bits=" + std::to_string(bits));
      if (sample_rate == 0) throw UnsupportedFormat("zero sample rate in header");
      if (body + chunk_size > bytes.size()) throw TruncatedData("data chunk shorter than declared: " + path);
      AudioBuffer out;
      out.sample_rate = static_cast<int>(sample_rate);
      size_t n = chunk_size / 2;
      out.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        int16_t s = static_cast<int16_t>(detail::read_u16le(bytes.data() + body + 2 * i));
        out.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return out;
    }
    // Chunk bodies are word-aligned.
    pos = body + chunk_size + (chunk_size & 1);
  }
  if (pos > bytes.size()) throw TruncatedData("chunk header past end of file: " + path);
  throw TruncatedData("no data chunk found: " + path);
}

inline void save_wav(const std::string& path, const std::vector<double>& samples, int sample_rate) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw AudioError("cannot write: " + path);
  uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  uint32_t riff_size = 36 + data_size;
  auto w32 = [&f](uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<char*>(b), 4);
  };
  auto w16 = [&f](uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    f.write(reinterpret_cast<char*>(b), 2);
  };
  f.write("RIFF", 4);
  w32(riff_size);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  w32(16);
  w16(1);  // PCM
  w16(1);  // mono
  w32(static_cast<uint32_t>(sample_rate));
  w32(static_cast<uint32_t>(sample_rate * 2));  // byte rate
  w16(2);                                       // block align
  w16(16);                                      // bits
  f.write("data", 4);
  w32(data_size);
  for (double s : samples) {
    double c = clampd(s, -1.0, 1.0);
    long q = std::lround(c * 32768.0);
    if (q > 32767) q = 32767;
    if (q < -32768) q = -32768;
    w16(static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
}

inline AudioBuffer resample(const AudioBuffer& buf, int target_sr) {
  if (target_sr <= 0) throw ZeroRate("target sample rate must be positive");
  if (target_sr == buf.sample_rate || buf.samples.empty()) {
    AudioBuffer out = buf;
    out.sample_rate = target_sr;
    return out;
  }
  AudioBuffer out;
  out.sample_rate = target_sr;
  size_t n = buf.samples.size();
  size_t out_len = static_cast<size_t>(
      std::llround(static_cast<double>(n) * target_sr / buf.sample_rate));
  out.samples.resize(out_len);
  double step = static_cast<double>(buf.sample_rate) / target_sr;
  for (size_t j = 0; j < out_len; ++j) {
    double pos = j * step;
    size_t i0 = static_cast<size_t>(pos);
    if (i0 >= n - 1) {
      out.samples[j] = buf.samples[n - 1];
      continue;
    }
    double frac = pos - i0;
    out.samples[j] = buf.samples[i0] * (1.0 - frac) + buf.samples[i0 + 1] * frac;
  }
  return out;
}

inline FrameSeries frame(const AudioBuffer& buf, int win_len, int hop) {
  if (hop <= 0 || win_len < hop || static_cast<size_t>(win_len) > buf.samples.size())
    throw BadWindow("need 0 < hop <= win_len <= len");
  FrameSeries fs;
  fs.win_len = win_len;
  fs.hop = hop;
  fs.origin_sr = buf.sample_rate;
  size_t n_frames = (buf.samples.size() - win_len) / hop + 1;
  fs.frames.reserve(n_frames);
  for (size_t i = 0; i < n_frames; ++i) {
    fs.frames.emplace_back(buf.samples.begin() + i * hop, buf.samples.begin() + i * hop + win_len);
  }
  return fs;
}

}  // namespace phenoscribe
