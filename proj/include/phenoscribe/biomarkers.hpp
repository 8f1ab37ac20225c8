// SPDX-License-Identifier: Apache-2.0
//
// Vocal biomarker extraction over non-overlapping 500 ms windows: intensity,
// energy, ZCR, F0 (autocorrelation), jitter/shimmer (cycle-peak tracking),
// HNR, MFCC + delta-MFCC; utterance-level pause/phonation/filler stats.

#pragma once

#include <array>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "phenoscribe/audio_io.hpp"
#include "phenoscribe/dsp.hpp"

namespace phenoscribe {

struct BiomarkerError : Error {
  using Error::Error;
};
struct InsufficientCycles : BiomarkerError {
  using BiomarkerError::BiomarkerError;
};
struct Unvoiced : BiomarkerError {
  using BiomarkerError::BiomarkerError;
};

struct BiomarkerWindow {
  double intensity_db = 0.0;
  double energy = 0.0;  // mean squared amplitude
  double zcr = 0.0;
  std::optional<double> f0_hz;  // present iff voiced
  double jitter = 0.0;
  double shimmer = 0.0;
  double hnr_db = 0.0;
  std::array<double, 13> mfcc{};
  std::array<double, 13> delta_mfcc{};
  bool voiced = false;
};

struct UtteranceStats {
  int pause_count = 0;
  double total_pause_s = 0.0;
  double phonation_rate = 0.0;
  int filler_count = 0;
};

struct BiomarkerSeries {
  std::vector<BiomarkerWindow> windows;
  double window_s = 0.5;
  UtteranceStats stats;
};

inline std::optional<double> compute_f0(const double* x, int n, const DspConfig& cfg = {}) {
  int lag_min = static_cast<int>(cfg.sample_rate / cfg.f0_max_hz);
  int lag_max = static_cast<int>(cfg.sample_rate / cfg.f0_min_hz);
  auto pk = dsp::ncc_peak(x, n, lag_min, std::min(lag_max, n - 2));
  if (!pk || pk->value <= cfg.voicing_threshold || pk->lag <= 0.0) return std::nullopt;
  double f0 = cfg.sample_rate / pk->lag;
  return clampd(f0, cfg.f0_min_hz, cfg.f0_max_hz);
}

namespace detail {

struct Peak {
  double pos = 0.0;
  double amp = 0.0;
};

inline Peak refine_peak(const double* x, int n, int p) {
  Peak out{static_cast<double>(p), x[p]};
  if (p > 0 && p < n - 1) {
    double y0 = x[p - 1], y1 = x[p], y2 = x[p + 1];
    double denom = y0 - 2.0 * y1 + y2;
    if (std::abs(denom) > 1e-15) {
      double d = 0.5 * (y0 - y2) / denom;
      if (std::abs(d) <= 1.0) {
        out.pos = p + d;
        out.amp = y1 - 0.25 * (y0 - y2) * d;
      }
    }
  }
  return out;
}

// Cycle peaks at roughly one per pitch period, parabolic sub-sample refinement.
inline std::vector<Peak> track_cycle_peaks(const double* x, int n, double period) {
  std::vector<Peak> peaks;
  int first_hi = std::min(n, static_cast<int>(std::ceil(period)));
  if (first_hi <= 0) return peaks;
  int p = 0;
  for (int i = 1; i < first_hi; ++i)
    if (x[i] > x[p]) p = i;
  peaks.push_back(refine_peak(x, n, p));
  while (true) {
    int lo = static_cast<int>(std::lround(peaks.back().pos + 0.7 * period));
    int hi = static_cast<int>(std::lround(peaks.back().pos + 1.3 * period));
    if (lo >= n) break;
    hi = std::min(hi, n - 1);
    if (hi < lo) break;
    int q = lo;
    for (int i = lo + 1; i <= hi; ++i)
      if (x[i] > x[q]) q = i;
    peaks.push_back(refine_peak(x, n, q));
  }
  return peaks;
}

}  // namespace detail

// jitter = mean |T_i - T_{i-1}| / mean(T); shimmer likewise on peak amplitudes.
inline std::pair<double, double> compute_jitter_shimmer(const double* x, int n, double f0_hz,
                                                        const DspConfig& cfg = {}) {
  double period = cfg.sample_rate / f0_hz;
  auto peaks = detail::track_cycle_peaks(x, n, period);
  if (peaks.size() < 4) throw InsufficientCycles("fewer than 3 pitch periods in window");
  std::vector<double> periods, amps;
  for (size_t i = 1; i < peaks.size(); ++i) periods.push_back(peaks[i].pos - peaks[i - 1].pos);
  for (const auto& p : peaks) amps.push_back(std::abs(p.amp));
  double mean_t = 0.0, mean_a = 0.0;
  for (double t : periods) mean_t += t;
  mean_t /= periods.size();
  for (double a : amps) mean_a += a;
  mean_a /= amps.size();
  double jit = 0.0;
  for (size_t i = 1; i < periods.size(); ++i) jit += std::abs(periods[i] - periods[i - 1]);
  jit /= (periods.size() - 1);
  double shim = 0.0;
  for (size_t i = 1; i < amps.size(); ++i) shim += std::abs(amps[i] - amps[i - 1]);
  shim /= (amps.size() - 1);
  return {mean_t > 0 ? jit / mean_t : 0.0, mean_a > 0 ? shim / mean_a : 0.0};
}

// HNR = 10 log10(r / (1 - r)), r = NCC peak ratio clamped into (0, 1).
inline double compute_hnr(const double* x, int n, const DspConfig& cfg = {}) {
  int lag_min = static_cast<int>(cfg.sample_rate / cfg.f0_max_hz);
  int lag_max = static_cast<int>(cfg.sample_rate / cfg.f0_min_hz);
  auto pk = dsp::ncc_peak(x, n, lag_min, std::min(lag_max, n - 2));
  if (!pk || pk->value <= cfg.voicing_threshold) throw Unvoiced("window is not voiced");
  double r = clampd(pk->value, 1e-6, 1.0 - 1e-6);
  return 10.0 * std::log10(r / (1.0 - r));
}

inline double frame_intensity_db(const double* x, int n) {
  double e = 0.0;
  for (int i = 0; i < n; ++i) e += x[i] * x[i];
  double rms = std::sqrt(e / std::max(1, n));
  return 20.0 * std::log10(std::max(rms, 1e-6));
}

namespace detail {

// Per-subframe MFCCs (25 ms / 10 ms) over an arbitrary span.
inline std::vector<std::vector<double>> mfcc_subframes(const double* x, int n, const DspConfig& cfg) {
  static thread_local std::vector<std::vector<double>> fb_cache;
  static thread_local int fb_key = -1;
  int key = cfg.mel_filters * 100000 + cfg.nfft;
  if (fb_key != key) {
    fb_cache = dsp::mel_filterbank(cfg.mel_filters, cfg.nfft, cfg.sample_rate, cfg.mel_fmin, cfg.mel_fmax);
    fb_key = key;
  }
  std::vector<double> sig(x, x + n);
  auto power = dsp::stft_power(sig, cfg.stft_win(), cfg.stft_hop(), cfg.nfft);
  std::vector<std::vector<double>> out;
  out.reserve(power.size());
  for (const auto& p : power) {
    std::vector<double> fe(cfg.mel_filters);
    for (int m = 0; m < cfg.mel_filters; ++m) {
      double e = 0.0;
      for (size_t k = 0; k < p.size(); ++k) e += p[k] * fb_cache[m][k];
      fe[m] = std::log(std::max(e, 1e-12));
    }
    out.push_back(dsp::dct2(fe, cfg.mfcc_coeffs));
  }
  return out;
}

inline int count_fillers(const std::string& transcript) {
  static const std::array<std::string, 4> fillers = {"um", "uh", "er", "hmm"};
  int count = 0;
  std::string token;
  auto flush = [&]() {
    if (!token.empty()) {
      for (const auto& f : fillers)
        if (token == f) {
          ++count;
          break;
        }
      token.clear();
    }
  };
  for (char c : transcript) {
    if (std::isalpha(static_cast<unsigned char>(c)))
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else
      flush();
  }
  flush();
  return count;
}

}  // namespace detail

inline UtteranceStats utterance_stats(const AudioBuffer& buf, const std::vector<BiomarkerWindow>& windows,
                                      const std::string& transcript, const DspConfig& cfg = {}) {
  UtteranceStats st;
  st.filler_count = detail::count_fillers(transcript);

  int voiced = 0;
  for (const auto& w : windows)
    if (w.voiced) ++voiced;
  st.phonation_rate = windows.empty() ? 0.0 : static_cast<double>(voiced) / windows.size();

  // Pause scan on 10 ms frames. The floor comes from the quietest frames but
  // is capped so fully-voiced audio does not read as one long pause.
  int flen = cfg.sample_rate / 100;
  int n_frames = static_cast<int>(buf.samples.size()) / flen;
  if (n_frames == 0) return st;
  std::vector<double> intens(n_frames);
  for (int i = 0; i < n_frames; ++i)
    intens[i] = frame_intensity_db(buf.samples.data() + static_cast<size_t>(i) * flen, flen);
  double floor = dsp::percentile(intens, cfg.noise_floor_percentile);
  double thresh = std::min(floor + cfg.pause_floor_offset_db, -45.0);
  int min_frames = static_cast<int>(std::lround(cfg.pause_min_ms / 10.0));
  int run = 0;
  for (int i = 0; i <= n_frames; ++i) {
    bool quiet = i < n_frames && intens[i] < thresh;
    if (quiet) {
      ++run;
    } else {
      if (run >= min_frames) {
        ++st.pause_count;
        st.total_pause_s += run * 0.01;
      }
      run = 0;
    }
  }
  st.total_pause_s = std::min(st.total_pause_s, buf.duration_s());
  return st;
}

inline BiomarkerSeries extract_series(const AudioBuffer& buf, const std::string& transcript,
                                      const DspConfig& cfg = {}) {
  int wlen = static_cast<int>(std::lround(cfg.biomarker_window_s * cfg.sample_rate));
  if (static_cast<int>(buf.samples.size()) < wlen)
    throw TooShort("utterance shorter than one biomarker window");

  BiomarkerSeries series;
  series.window_s = cfg.biomarker_window_s;
  int n_win = static_cast<int>(buf.samples.size()) / wlen;

  std::vector<std::array<double, 13>> raw_mfcc(n_win);
  for (int w = 0; w < n_win; ++w) {
    const double* x = buf.samples.data() + static_cast<size_t>(w) * wlen;
    BiomarkerWindow bw;
    bw.intensity_db = frame_intensity_db(x, wlen);
    double e = 0.0;
    for (int i = 0; i < wlen; ++i) e += x[i] * x[i];
    bw.energy = e / wlen;
    bw.zcr = dsp::zero_crossing_rate(x, wlen);

    bw.f0_hz = compute_f0(x, wlen, cfg);
    bw.voiced = bw.f0_hz.has_value();
    if (bw.voiced) {
      try {
        auto [jit, shim] = compute_jitter_shimmer(x, wlen, *bw.f0_hz, cfg);
        bw.jitter = jit;
        bw.shimmer = shim;
      } catch (const InsufficientCycles&) {
        // keep zeros; window stays voiced
      }
      bw.hnr_db = compute_hnr(x, wlen, cfg);
    }

    auto sub = detail::mfcc_subframes(x, wlen, cfg);
    std::array<double, 13> mean{};
    if (!sub.empty()) {
      for (const auto& row : sub)
        for (int k = 0; k < 13; ++k) mean[k] += row[k];
      for (int k = 0; k < 13; ++k) mean[k] /= sub.size();
    }
    bw.mfcc = mean;
    raw_mfcc[w] = mean;
    series.windows.push_back(bw);
  }

  // delta-MFCC: central differences across windows, edges replicated.
  for (int w = 0; w < n_win; ++w) {
    int lo = std::max(0, w - 1);
    int hi = std::min(n_win - 1, w + 1);
    for (int k = 0; k < 13; ++k)
      series.windows[w].delta_mfcc[k] = 0.5 * (raw_mfcc[hi][k] - raw_mfcc[lo][k]);
  }

  series.stats = utterance_stats(buf, series.windows, transcript, cfg);
  return series;
}

// ---- cache file formats ----

inline std::vector<std::string> biomarker_field_names() {
  std::vector<std::string> names = {"intensity_db", "energy", "zcr",    "f0_hz",
                                    "jitter",       "shimmer", "hnr_db"};
  for (int k = 1; k <= 13; ++k) names.push_back("mfcc_" + std::to_string(k));
  for (int k = 1; k <= 13; ++k) names.push_back("dmfcc_" + std::to_string(k));
  return names;  // 33 fields; unvoiced windows carry f0_hz = 0
}

inline std::array<double, 33> window_feature_vector(const BiomarkerWindow& w) {
  std::array<double, 33> v{};
  v[0] = w.intensity_db;
  v[1] = w.energy;
  v[2] = w.zcr;
  v[3] = w.f0_hz.value_or(0.0);
  v[4] = w.jitter;
  v[5] = w.shimmer;
  v[6] = w.hnr_db;
  for (int k = 0; k < 13; ++k) v[7 + k] = w.mfcc[k];
  for (int k = 0; k < 13; ++k) v[20 + k] = w.delta_mfcc[k];
  return v;
}

inline void write_biomarker_csv(const std::string& path, const BiomarkerSeries& series) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw BiomarkerError("cannot write: " + path);
  auto names = biomarker_field_names();
  for (size_t i = 0; i < names.size(); ++i) f << (i ? "," : "") << names[i];
  f << '\n';
  for (const auto& w : series.windows) {
    auto v = window_feature_vector(w);
    for (size_t i = 0; i < v.size(); ++i) f << (i ? "," : "") << fmt_g(v[i]);
    f << '\n';
  }
}

inline void write_utterance_stats_json(const std::string& path, const UtteranceStats& st) {
  nlohmann::json j;
  j["pause_count"] = st.pause_count;
  j["total_pause_s"] = st.total_pause_s;
  j["phonation_rate"] = st.phonation_rate;
  j["filler_count"] = st.filler_count;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw BiomarkerError("cannot write: " + path);
  f << j.dump(2) << '\n';
}

struct BiomarkerCache {
  std::vector<std::array<double, 33>> windows;
  UtteranceStats stats;
};

inline BiomarkerCache read_biomarker_cache(const std::string& csv_path, const std::string& json_path) {
  BiomarkerCache cache;
  std::ifstream f(csv_path);
  if (!f) throw BiomarkerError("cannot read: " + csv_path);
  std::string line;
  if (!std::getline(f, line)) throw BiomarkerError("empty cache: " + csv_path);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::array<double, 33> row{};
    std::stringstream ss(line);
    std::string cell;
    for (int i = 0; i < 33; ++i) {
      if (!std::getline(ss, cell, ',')) throw BiomarkerError("short row in " + csv_path);
      row[i] = std::stod(cell);
    }
    cache.windows.push_back(row);
  }
  std::ifstream jf(json_path);
  if (!jf) throw BiomarkerError("cannot read: " + json_path);
  nlohmann::json j = nlohmann::json::parse(jf);
  cache.stats.pause_count = j.at("pause_count").get<int>();
  cache.stats.total_pause_s = j.at("total_pause_s").get<double>();
  cache.stats.phonation_rate = j.at("phonation_rate").get<double>();
  cache.stats.filler_count = j.at("filler_count").get<int>();
  return cache;
}

}  // namespace phenoscribe
