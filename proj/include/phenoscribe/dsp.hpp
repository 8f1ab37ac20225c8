// SPDX-License-Identifier: Apache-2.0
//
// Low-level signal kernels shared by the landmark and biomarker extractors:
// radix-2 FFT, STFT power frames, normalized cross-correlation pitch search,
// mel filterbank + DCT, boxcar smoothing. All double precision, so feature
// extraction is identical regardless of how the NN side is built.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "phenoscribe/common.hpp"

namespace phenoscribe::dsp {

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n - 1));
  return w;
}

// In-place iterative radix-2 FFT. n must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Power spectrum (|X|^2) per frame; nfft/2+1 bins. Hann-windowed, zero-padded.
inline std::vector<std::vector<double>> stft_power(const std::vector<double>& x, int win_len, int hop,
                                                   int nfft) {
  std::vector<std::vector<double>> out;
  if (static_cast<int>(x.size()) < win_len) return out;
  std::vector<double> win = hann_window(win_len);
  size_t n_frames = (x.size() - win_len) / hop + 1;
  out.reserve(n_frames);
  std::vector<std::complex<double>> buf(nfft);
  for (size_t f = 0; f < n_frames; ++f) {
    for (int i = 0; i < win_len; ++i) buf[i] = x[f * hop + i] * win[i];
    for (int i = win_len; i < nfft; ++i) buf[i] = 0.0;
    fft_inplace(buf);
    std::vector<double> p(nfft / 2 + 1);
    for (int k = 0; k <= nfft / 2; ++k) p[k] = std::norm(buf[k]);
    out.push_back(std::move(p));
  }
  return out;
}

inline double power_to_db(double p, double floor_db = -120.0) {
  double db = 10.0 * std::log10(std::max(p, 1e-30));
  return std::max(db, floor_db);
}

// Centered moving average; truncated (renormalized) at the edges so flat
// tracks stay flat right up to the boundary.
inline std::vector<double> boxcar_smooth(const std::vector<double>& v, int width) {
  if (width <= 1 || v.empty()) return v;
  int n = static_cast<int>(v.size());
  std::vector<double> out(n);
  int half_lo = (width - 1) / 2;
  int half_hi = width / 2;
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - half_lo);
    int hi = std::min(n - 1, i + half_hi);
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += v[j];
    out[i] = s / (hi - lo + 1);
  }
  return out;
}

struct NccPeak {
  double lag = 0.0;    // parabolic-interpolated lag in samples
  double value = 0.0;  // interpolated peak value, clamped to [-1, 1]
  int int_lag = 0;
};

// Normalized cross-correlation of x against itself shifted by tau, for
// tau in [lag_min, lag_max]. Peak refined by parabolic interpolation.
inline std::optional<NccPeak> ncc_peak(const double* x, int n, int lag_min, int lag_max) {
  lag_max = std::min(lag_max, n - 2);
  if (lag_min < 1 || lag_min > lag_max) return std::nullopt;

  // Prefix sums of squares make the per-lag denominators O(1).
  std::vector<double> sq(n + 1, 0.0);
  for (int i = 0; i < n; ++i) sq[i + 1] = sq[i] + x[i] * x[i];

  std::vector<double> r(lag_max + 1, 0.0);
  int best = -1;
  double best_v = -2.0;
  for (int tau = lag_min; tau <= lag_max; ++tau) {
    int m = n - tau;
    double num = 0.0;
    for (int i = 0; i < m; ++i) num += x[i] * x[i + tau];
    double e0 = sq[m] - sq[0];
    double e1 = sq[n] - sq[tau];
    double den = std::sqrt(e0 * e1);
    double v = den > 0.0 ? num / den : 0.0;
    r[tau] = v;
    if (v > best_v) {
      best_v = v;
      best = tau;
    }
  }
  if (best < 0) return std::nullopt;

  NccPeak pk;
  pk.int_lag = best;
  pk.lag = best;
  pk.value = best_v;
  if (best > lag_min && best < lag_max) {
    double y0 = r[best - 1], y1 = r[best], y2 = r[best + 1];
    double denom = y0 - 2.0 * y1 + y2;
    if (std::abs(denom) > 1e-15) {
      double delta = 0.5 * (y0 - y2) / denom;
      if (std::abs(delta) <= 1.0) {
        pk.lag = best + delta;
        pk.value = y1 - 0.25 * (y0 - y2) * delta;
      }
    }
  }
  pk.value = clampd(pk.value, -1.0, 1.0);
  return pk;
}

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular mel filterbank over FFT bins; weights[filter][bin].
inline std::vector<std::vector<double>> mel_filterbank(int n_filters, int nfft, int sample_rate,
                                                       double fmin, double fmax) {
  int n_bins = nfft / 2 + 1;
  double mel_lo = hz_to_mel(fmin);
  double mel_hi = hz_to_mel(fmax);
  std::vector<double> centers(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i)
    centers[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_filters + 1));
  std::vector<std::vector<double>> fb(n_filters, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_filters; ++m) {
    double fl = centers[m], fc = centers[m + 1], fr = centers[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / nfft;
      if (f > fl && f < fc)
        fb[m][k] = (f - fl) / (fc - fl);
      else if (f >= fc && f < fr)
        fb[m][k] = (fr - f) / (fr - fc);
    }
  }
  return fb;
}

// DCT-II with orthonormal scaling, first n_out coefficients.
inline std::vector<double> dct2(const std::vector<double>& x, int n_out) {
  int n = static_cast<int>(x.size());
  std::vector<double> out(n_out, 0.0);
  for (int k = 0; k < n_out; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * std::cos(M_PI * k * (2.0 * i + 1.0) / (2.0 * n));
    double scale = (k == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    out[k] = s * scale;
  }
  return out;
}

inline double zero_crossing_rate(const double* x, int n) {
  if (n < 2) return 0.0;
  int c = 0;
  for (int i = 1; i < n; ++i) {
    bool a = x[i - 1] < 0.0;
    bool b = x[i] < 0.0;
    if (a != b) ++c;
  }
  return static_cast<double>(c) / n;
}

inline double percentile(std::vector<double> v, double pct) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double idx = pct / 100.0 * (v.size() - 1);
  size_t lo = static_cast<size_t>(idx);
  size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = idx - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace phenoscribe::dsp

namespace phenoscribe {

// Extraction knobs shared by the landmark and biomarker modules. The voicing
// threshold is deliberately a single field used by both.
struct DspConfig {
  int sample_rate = 16000;
  double stft_win_ms = 25.0;
  double stft_hop_ms = 10.0;
  int nfft = 512;
  double floor_db = -120.0;

  // Six-band landmark decomposition, Hz.
  double band_edges[6][2] = {{0, 400},     {800, 1500},  {1200, 2000},
                             {2000, 3500}, {3500, 5000}, {5000, 8000}};
  double coarse_smooth_ms = 50.0;
  double fine_smooth_ms = 20.0;
  double delta_coarse_db = 6.0;   // rise/fall threshold on the coarse track
  double delta_fine_db = 9.0;     // confirmation threshold on the fine track
  double confirm_ms = 50.0;       // +- window for fine confirmation
  double cluster_ms = 30.0;       // events closer than this merge into one
  double band1_high_offset_db = 15.0;
  double voiced_context_ms = 100.0;

  // Voicing / F0 (shared between landmarks "p" detection and biomarkers).
  double voicing_threshold = 0.4;
  double f0_min_hz = 50.0;
  double f0_max_hz = 500.0;
  double voicing_win_ms = 40.0;

  // Biomarkers.
  double biomarker_window_s = 0.5;
  int mfcc_coeffs = 13;
  int mel_filters = 26;
  double mel_fmin = 0.0;
  double mel_fmax = 8000.0;
  double pause_min_ms = 300.0;
  double pause_floor_offset_db = 10.0;
  double noise_floor_percentile = 5.0;

  int stft_win() const { return static_cast<int>(stft_win_ms * sample_rate / 1000.0); }
  int stft_hop() const { return static_cast<int>(stft_hop_ms * sample_rate / 1000.0); }
};

}  // namespace phenoscribe
