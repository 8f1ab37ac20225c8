// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <complex>

#include "helpers.hpp"
#include "phenoscribe/landmarks.hpp"

using namespace phenoscribe;

namespace {

// Independent band-1 energy oracle: naive DFT bin sum per frame, 50 ms boxcar,
// argmax of the frame-to-frame dB difference.
double oracle_band1_rise_time(const std::vector<double>& x, int sr) {
  int win = sr / 40, hop = sr / 100;  // 25 ms / 10 ms
  int n_frames = (static_cast<int>(x.size()) - win) / hop + 1;
  std::vector<double> track(n_frames);
  int k_max = static_cast<int>(400.0 * win / sr);  // bins up to 400 Hz at DFT length = win
  for (int f = 0; f < n_frames; ++f) {
    double p = 0.0;
    for (int k = 0; k <= k_max; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (int i = 0; i < win; ++i) {
        double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (win - 1));
        double ang = -2.0 * M_PI * k * i / win;
        acc += x[f * hop + i] * w * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      p += std::norm(acc);
    }
    track[f] = 10.0 * std::log10(std::max(p, 1e-30));
  }
  // 5-frame boxcar then argmax delta
  std::vector<double> sm(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    int lo = std::max(0, i - 2), hi = std::min(n_frames - 1, i + 2);
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += track[j];
    sm[i] = s / (hi - lo + 1);
  }
  int best = 1;
  for (int i = 2; i < n_frames; ++i)
    if (sm[i] - sm[i - 1] > sm[best] - sm[best - 1]) best = i;
  return (best * hop + win / 2.0) / sr;
}

int count_symbol(const LandmarkSequence& seq, const std::string& sym) {
  int c = 0;
  for (const auto& lm : seq.landmarks)
    if (lm.symbol == sym) ++c;
  return c;
}

std::vector<Landmark> with_symbol(const LandmarkSequence& seq, const std::string& sym) {
  std::vector<Landmark> out;
  for (const auto& lm : seq.landmarks)
    if (lm.symbol == sym) out.push_back(lm);
  return out;
}

}  // namespace

TEST_CASE("band_energies") {
  DspConfig cfg;

  SECTION("pure silence sits at the floor") {
    auto tracks = band_energies(testutil::make_silence(1.0), cfg);
    for (int b = 0; b < 6; ++b)
      for (double v : tracks.coarse[b]) REQUIRE(v == Catch::Approx(-120.0).margin(1e-9));
  }

  SECTION("200 Hz tone dominates band 1 by >= 20 dB") {
    auto tracks = band_energies(testutil::make_sine(200.0, 1.0, 16000, 0.5), cfg);
    size_t n = tracks.coarse[0].size();
    REQUIRE(n > 0);
    for (size_t f = 0; f < n; ++f)
      for (int b = 1; b < 6; ++b) REQUIRE(tracks.coarse[0][f] - tracks.coarse[b][f] >= 20.0);
  }

  SECTION("white noise band levels agree within 6 dB in time-average") {
    auto tracks = band_energies(testutil::make_noise(2.5, 1234), cfg);
    std::vector<double> avg(6, 0.0);
    for (int b = 0; b < 6; ++b) {
      for (double v : tracks.coarse[b]) avg[b] += v;
      avg[b] /= static_cast<double>(tracks.coarse[b].size());
    }
    double lo = *std::min_element(avg.begin(), avg.end());
    double hi = *std::max_element(avg.begin(), avg.end());
    REQUIRE(hi - lo < 6.0);
  }

  SECTION("too short input") {
    REQUIRE_THROWS_AS(band_energies(testutil::make_silence(0.01), cfg), TooShort);
  }
}

TEST_CASE("detect_landmarks") {
  DspConfig cfg;

  SECTION("silence yields no landmarks") {
    auto seq = extract_landmarks(testutil::make_silence(1.5), cfg);
    REQUIRE(seq.landmarks.empty());
  }

  SECTION("tone onset/offset emits one g+ and one g-") {
    auto sig = testutil::concat({testutil::make_silence(0.5), testutil::make_sine(150.0, 1.0),
                                 testutil::make_silence(0.5)});
    auto seq = extract_landmarks(sig, cfg);
    auto gp = with_symbol(seq, "g+");
    auto gm = with_symbol(seq, "g-");
    REQUIRE(gp.size() == 1);
    REQUIRE(gm.size() == 1);
    REQUIRE(std::abs(gp[0].time_s - 0.5) <= 0.05);
    REQUIRE(std::abs(gm[0].time_s - 1.5) <= 0.05);
    // Cross-check the onset against the independent derivative oracle.
    double oracle_t = oracle_band1_rise_time(sig.samples, sig.sample_rate);
    REQUIRE(std::abs(gp[0].time_s - oracle_t) <= 0.05);
  }

  SECTION("broadband noise burst emits b+ and no g+") {
    auto sig = testutil::concat({testutil::make_silence(0.5), testutil::make_noise(1.0, 77),
                                 testutil::make_silence(0.5)});
    auto seq = extract_landmarks(sig, cfg);
    auto bp = with_symbol(seq, "b+");
    REQUIRE(bp.size() == 1);
    REQUIRE(std::abs(bp[0].time_s - 0.5) <= 0.05);
    REQUIRE(count_symbol(seq, "g+") == 0);
  }
}

TEST_CASE("landmark sequence properties") {
  DspConfig cfg;
  auto sig = testutil::concat({testutil::make_silence(0.4), testutil::make_sine(150.0, 0.8),
                               testutil::make_silence(0.3), testutil::make_noise(0.5, 9),
                               testutil::make_silence(0.4)});

  SECTION("time-shift equivariance") {
    auto base = extract_landmarks(sig, cfg);
    auto shifted = extract_landmarks(testutil::concat({testutil::make_silence(0.3), sig}), cfg);
    REQUIRE(base.landmarks.size() == shifted.landmarks.size());
    for (size_t i = 0; i < base.landmarks.size(); ++i) {
      REQUIRE(shifted.landmarks[i].symbol == base.landmarks[i].symbol);
      REQUIRE(std::abs(shifted.landmarks[i].time_s - base.landmarks[i].time_s - 0.3) <=
              cfg.stft_hop_ms / 1000.0 + 1e-9);
    }
  }

  SECTION("amplitude scaling by 0.5 leaves symbols unchanged") {
    auto base = extract_landmarks(sig, cfg);
    auto half = sig;
    for (double& s : half.samples) s *= 0.5;
    auto scaled = extract_landmarks(half, cfg);
    REQUIRE(landmarks_to_tokens(scaled) == landmarks_to_tokens(base));
  }

  SECTION("times are nondecreasing") {
    auto seq = extract_landmarks(sig, cfg);
    for (size_t i = 1; i < seq.landmarks.size(); ++i)
      REQUIRE(seq.landmarks[i].time_s >= seq.landmarks[i - 1].time_s);
  }
}

TEST_CASE("landmarks_to_tokens") {
  SECTION("empty sequence") { REQUIRE(landmarks_to_tokens({}) == ""); }

  SECTION("direct mapping") {
    LandmarkSequence seq;
    seq.landmarks = {{"g+", 0.1}, {"s+", 0.3}};
    REQUIRE(landmarks_to_tokens(seq) == "g+ s+");
  }

  SECTION("token count equals landmark count") {
    LandmarkSequence seq;
    seq.landmarks = {{"g+", 0.1}, {"b-", 0.2}, {"p+", 0.3}, {"v-", 0.9}};
    auto tokens = landmarks_to_tokens(seq);
    int count = tokens.empty() ? 0 : 1;
    for (char c : tokens)
      if (c == ' ') ++count;
    REQUIRE(count == static_cast<int>(seq.landmarks.size()));
  }
}

TEST_CASE("landmark dump round trip") {
  auto dir = testutil::scratch_dir("lm");
  LandmarkSequence seq;
  seq.landmarks = {{"g+", 0.4925}, {"p+", 0.5025}, {"g-", 1.4925}};
  write_landmarks(dir + "/a.lm", seq);
  auto back = read_landmarks(dir + "/a.lm");
  REQUIRE(back.landmarks.size() == seq.landmarks.size());
  for (size_t i = 0; i < seq.landmarks.size(); ++i) {
    REQUIRE(back.landmarks[i].symbol == seq.landmarks[i].symbol);
    REQUIRE(back.landmarks[i].time_s == Catch::Approx(seq.landmarks[i].time_s).margin(1e-9));
  }
}
