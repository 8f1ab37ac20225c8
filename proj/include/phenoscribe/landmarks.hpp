// SPDX-License-Identifier: Apache-2.0
//
// Acoustic landmark extraction. The spectrogram is split into six frequency
// bands; abrupt rises/falls found on a coarse-smoothed dB track and confirmed
// on a fine-smoothed track become discrete, time-stamped symbols:
//
//   g+/g-  low-band (band 1) energy change with periodicity present
//          (glottal vibration onset/offset)
//   b+/b-  broadband change across >=3 of bands 2-6 in an aperiodic context
//          (burst / closure)
//   s+/s-  rise/fall in bands 2-3 while band 1 is high (sonorant release
//          or closure, e.g. nasal)
//   v+/v-  rise/fall in bands 4-6 while band 1 is high (voiced frication)
//   f+/f-  rise/fall in bands 4-6 while band 1 is low (frication)
//   p+/p-  periodicity onset/offset (autocorrelation peak ratio crossing)
//
// Detection thresholds act on dB differences, so the symbol sequence is
// invariant to global amplitude scaling.

#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "phenoscribe/audio_io.hpp"
#include "phenoscribe/dsp.hpp"

namespace phenoscribe {

struct LandmarkError : Error {
  using Error::Error;
};

struct BandEnergyTrack {
  std::array<std::vector<double>, 6> coarse;  // dB, coarse smoothing
  std::array<std::vector<double>, 6> fine;    // dB, fine smoothing
  std::vector<double> voicing;                // NCC peak ratio per frame
  double frame_hop_s = 0.0;
  double frame_offset_s = 0.0;  // time of frame 0 center
  std::array<std::array<double, 2>, 6> band_edges{};
  double floor_db = -120.0;
};

enum class LandmarkKind { G, B, S, F, V, P };

struct Landmark {
  std::string symbol;  // e.g. "g+"
  double time_s = 0.0;
};

struct LandmarkSequence {
  std::vector<Landmark> landmarks;
};

inline const std::array<std::string, 12>& landmark_alphabet() {
  static const std::array<std::string, 12> a = {"g+", "g-", "b+", "b-", "s+", "s-",
                                                "f+", "f-", "v+", "v-", "p+", "p-"};
  return a;
}

inline BandEnergyTrack band_energies(const AudioBuffer& buf, const DspConfig& cfg = {}) {
  int win = cfg.stft_win();
  int hop = cfg.stft_hop();
  if (static_cast<int>(buf.samples.size()) < win)
    throw TooShort("need at least one STFT window of samples");

  auto power = dsp::stft_power(buf.samples, win, hop, cfg.nfft);
  size_t n_frames = power.size();

  BandEnergyTrack out;
  out.frame_hop_s = static_cast<double>(hop) / cfg.sample_rate;
  out.frame_offset_s = 0.5 * win / cfg.sample_rate;
  out.floor_db = cfg.floor_db;

  double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.nfft;
  int coarse_w = std::max(1, static_cast<int>(std::lround(cfg.coarse_smooth_ms / cfg.stft_hop_ms)));
  int fine_w = std::max(1, static_cast<int>(std::lround(cfg.fine_smooth_ms / cfg.stft_hop_ms)));

  for (int b = 0; b < 6; ++b) {
    out.band_edges[b] = {cfg.band_edges[b][0], cfg.band_edges[b][1]};
    int k_lo = static_cast<int>(std::ceil(cfg.band_edges[b][0] / bin_hz));
    int k_hi = static_cast<int>(std::floor(cfg.band_edges[b][1] / bin_hz));
    k_hi = std::min(k_hi, cfg.nfft / 2);
    std::vector<double> raw(n_frames, cfg.floor_db);
    for (size_t f = 0; f < n_frames; ++f) {
      double p = 0.0;
      for (int k = k_lo; k <= k_hi; ++k) p += power[f][k];
      // Mean per bin, so flat (white) spectra give equal band levels.
      p /= std::max(1, k_hi - k_lo + 1);
      raw[f] = dsp::power_to_db(p, cfg.floor_db);
    }
    out.coarse[b] = dsp::boxcar_smooth(raw, coarse_w);
    out.fine[b] = dsp::boxcar_smooth(raw, fine_w);
  }

  // Voicing track: NCC peak ratio in the F0 lag range, window centered on
  // each frame. Computed every other frame and replicated; the threshold
  // logic is insensitive at that resolution.
  out.voicing.assign(n_frames, 0.0);
  int vwin = static_cast<int>(cfg.voicing_win_ms * cfg.sample_rate / 1000.0);
  int lag_min = static_cast<int>(cfg.sample_rate / cfg.f0_max_hz);
  int lag_max = static_cast<int>(cfg.sample_rate / cfg.f0_min_hz);
  int n_total = static_cast<int>(buf.samples.size());
  for (size_t f = 0; f < n_frames; f += 2) {
    int center = static_cast<int>(f) * hop + win / 2;
    int start = std::max(0, center - vwin / 2);
    int len = std::min(vwin, n_total - start);
    double v = 0.0;
    if (len > 2 * lag_min) {
      auto pk = dsp::ncc_peak(buf.samples.data() + start, len, lag_min, std::min(lag_max, len - 2));
      if (pk) v = std::max(0.0, pk->value);
    }
    out.voicing[f] = v;
    if (f + 1 < n_frames) out.voicing[f + 1] = v;
  }
  return out;
}

namespace detail {

struct BandEvent {
  int band = 0;
  int frame = 0;
  bool rise = true;
  double magnitude = 0.0;
};

// Coarse-track delta runs above threshold, confirmed on the fine track.
inline std::vector<BandEvent> band_events(const BandEnergyTrack& t, const DspConfig& cfg) {
  std::vector<BandEvent> events;
  int confirm_w = std::max(1, static_cast<int>(std::lround(cfg.confirm_ms / cfg.stft_hop_ms)));
  for (int b = 0; b < 6; ++b) {
    const auto& c = t.coarse[b];
    const auto& fi = t.fine[b];
    int n = static_cast<int>(c.size());
    if (n < 2) continue;
    std::vector<double> dc(n, 0.0), df(n, 0.0);
    for (int i = 1; i < n; ++i) {
      dc[i] = c[i] - c[i - 1];
      df[i] = fi[i] - fi[i - 1];
    }
    for (int dir = 0; dir < 2; ++dir) {
      double sign = dir == 0 ? 1.0 : -1.0;
      int i = 1;
      while (i < n) {
        if (sign * dc[i] > cfg.delta_coarse_db) {
          int j = i, peak = i;
          while (j < n && sign * dc[j] > cfg.delta_coarse_db) {
            if (sign * dc[j] > sign * dc[peak]) peak = j;
            ++j;
          }
          double fine_max = 0.0;
          for (int k = std::max(1, peak - confirm_w); k <= std::min(n - 1, peak + confirm_w); ++k)
            fine_max = std::max(fine_max, sign * df[k]);
          if (fine_max >= cfg.delta_fine_db)
            events.push_back({b, peak, dir == 0, sign * dc[peak]});
          i = j;
        } else {
          ++i;
        }
      }
    }
  }
  return events;
}

}  // namespace detail

inline LandmarkSequence detect_landmarks(const BandEnergyTrack& tracks, const DspConfig& cfg = {}) {
  LandmarkSequence seq;
  size_t n = tracks.coarse[0].size();
  if (n == 0) return seq;

  auto events = detail::band_events(tracks, cfg);
  std::sort(events.begin(), events.end(), [](const detail::BandEvent& a, const detail::BandEvent& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.band < b.band;
  });

  int cluster_w = std::max(1, static_cast<int>(std::lround(cfg.cluster_ms / cfg.stft_hop_ms)));
  int voiced_w = std::max(1, static_cast<int>(std::lround(cfg.voiced_context_ms / cfg.stft_hop_ms)));
  double band1_floor = dsp::percentile(tracks.coarse[0], cfg.noise_floor_percentile);
  double band1_high_level = band1_floor + cfg.band1_high_offset_db;

  auto frame_time = [&](int f) { return tracks.frame_offset_s + f * tracks.frame_hop_s; };

  auto periodic_near = [&](int frame, bool after) {
    int lo = after ? frame : std::max(0, frame - voiced_w);
    int hi = after ? std::min(static_cast<int>(n) - 1, frame + voiced_w) : frame;
    for (int i = lo; i <= hi; ++i)
      if (tracks.voicing[i] > cfg.voicing_threshold) return true;
    return false;
  };
  auto band1_high = [&](int frame, bool before) {
    // Level in the steady context on the far side of the transition.
    int lo = before ? std::max(0, frame - 7) : std::min<int>(n - 1, frame + 2);
    int hi = before ? std::max(0, frame - 2) : std::min<int>(n - 1, frame + 7);
    double s = 0.0;
    int c = 0;
    for (int i = lo; i <= hi; ++i, ++c) s += tracks.coarse[0][i];
    return c > 0 && s / c >= band1_high_level;
  };

  // Cluster same-direction events that fall within the merge window.
  for (int dir = 0; dir < 2; ++dir) {
    bool rise = dir == 0;
    std::vector<std::vector<detail::BandEvent>> groups;
    for (const auto& e : events) {
      if (e.rise != rise) continue;
      if (!groups.empty() && e.frame - groups.back().back().frame <= cluster_w)
        groups.back().push_back(e);
      else
        groups.push_back({e});
    }
    const char* suffix = rise ? "+" : "-";
    for (const auto& g : groups) {
      int frame = g.front().frame;
      bool has_b1 = false;
      int hf_low = 0;   // bands 2-3
      int hf_high = 0;  // bands 4-6
      int hf_total = 0;
      for (const auto& e : g) {
        if (e.band == 0) has_b1 = true;
        if (e.band >= 1) ++hf_total;
        if (e.band == 1 || e.band == 2) ++hf_low;
        if (e.band >= 3) ++hf_high;
      }
      bool voiced_ctx = periodic_near(frame, rise);
      bool b1_high = band1_high(frame, rise);  // rises look at the pre-context, falls at the post
      double t = frame_time(frame);

      if (has_b1 && voiced_ctx) seq.landmarks.push_back({std::string("g") + suffix, t});
      if (hf_total >= 3 && !voiced_ctx) {
        seq.landmarks.push_back({std::string("b") + suffix, t});
      } else {
        if (hf_low > 0 && b1_high) seq.landmarks.push_back({std::string("s") + suffix, t});
        if (hf_high > 0 && b1_high) seq.landmarks.push_back({std::string("v") + suffix, t});
        if (hf_high > 0 && !b1_high) seq.landmarks.push_back({std::string("f") + suffix, t});
      }
    }
  }

  // p landmarks: threshold crossings of the smoothed voicing track.
  auto smooth_v = dsp::boxcar_smooth(tracks.voicing, 5);
  bool prev = smooth_v[0] > cfg.voicing_threshold;
  if (prev) seq.landmarks.push_back({"p+", frame_time(0)});
  for (size_t i = 1; i < n; ++i) {
    bool now = smooth_v[i] > cfg.voicing_threshold;
    if (now != prev)
      seq.landmarks.push_back({now ? "p+" : "p-", frame_time(static_cast<int>(i))});
    prev = now;
  }

  std::sort(seq.landmarks.begin(), seq.landmarks.end(), [](const Landmark& a, const Landmark& b) {
    if (a.time_s != b.time_s) return a.time_s < b.time_s;
    return a.symbol < b.symbol;
  });
  return seq;
}

inline LandmarkSequence extract_landmarks(const AudioBuffer& buf, const DspConfig& cfg = {}) {
  return detect_landmarks(band_energies(buf, cfg), cfg);
}

inline std::string landmarks_to_tokens(const LandmarkSequence& seq) {
  std::string out;
  for (size_t i = 0; i < seq.landmarks.size(); ++i) {
    if (i) out += ' ';
    out += seq.landmarks[i].symbol;
  }
  return out;
}

// Dump format: one "<time_s>\t<symbol>" line per landmark, LF endings.
inline void write_landmarks(const std::string& path, const LandmarkSequence& seq) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LandmarkError("cannot write: " + path);
  for (const auto& lm : seq.landmarks) f << fmt_g(lm.time_s) << '\t' << lm.symbol << '\n';
}

inline LandmarkSequence read_landmarks(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw LandmarkError("cannot read: " + path);
  LandmarkSequence seq;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) throw LandmarkError("malformed landmark line: " + line);
    seq.landmarks.push_back({line.substr(tab + 1), std::stod(line.substr(0, tab))});
  }
  return seq;
}

}  // namespace phenoscribe
