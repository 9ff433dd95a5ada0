#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wbsc/features.hpp"
#include "wbsc/fft.hpp"

using namespace wbsc;

namespace {

SpectrumEstimate spectrum_of(const TimeSeries& ts) {
  SpectrumEstimate est;
  est.s_hat = dft(ts.samples, FftDirection::kForward);
  est.bin_hz = ts.sample_rate_hz / static_cast<double>(ts.size());
  return est;
}

PsdEstimate noise_psd_estimate(std::size_t n, double sigma2,
                               std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> dist(0.0, std::sqrt(0.5 * sigma2));
  std::vector<cplx> s(n);
  for (auto& v : s) v = cplx(dist(engine), dist(engine));
  return estimate_psd(std::span<const cplx>(s), 1.0);
}

WidebandScene two_emitter_scene() {
  WidebandScene scene;
  scene.band_upper_hz = 100e6;
  scene.n_samples = 4096;
  scene.seed = 31;
  EmitterSpec a;
  a.modulation = ModulationKind::kBpsk;
  a.carrier_hz = 30e6;
  a.symbol_rate_hz = 2e6;
  EmitterSpec b;
  b.modulation = ModulationKind::kQpsk;
  b.carrier_hz = 70e6;
  b.symbol_rate_hz = 1.2e6;
  scene.emitters = {a, b};
  return scene;
}

}  // namespace

TEST_CASE("one-hot spectrum: single bin carries the squared magnitude") {
  std::vector<cplx> s(64, cplx{0.0, 0.0});
  s[10] = cplx{3.0, 4.0};
  const auto psd = estimate_psd(std::span<const cplx>(s), 2.0);
  CHECK(psd.bins[10] == doctest::Approx(25.0));
  for (std::size_t i = 0; i < 64; ++i) {
    if (i != 10) CHECK(psd.bins[i] == 0.0);
  }
}

TEST_CASE("PSD bins sum to the squared l2 norm of the spectrum") {
  std::mt19937_64 engine(5);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<cplx> s(512);
  double norm_sq = 0.0;
  for (auto& v : s) {
    v = cplx(dist(engine), dist(engine));
    norm_sq += std::norm(v);
  }
  const auto psd = estimate_psd(std::span<const cplx>(s), 1.0);
  double total = 0.0;
  for (double b : psd.bins) total += b;
  CHECK(std::abs(total - norm_sq) < 1e-9 * norm_sq);
}

TEST_CASE("median noise floor lands within 25% of the true power") {
  const double sigma2 = 3.7;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto psd = noise_psd_estimate(4096, sigma2, 900 + seed);
    CHECK(psd.noise_floor > 0.75 * sigma2);
    CHECK(psd.noise_floor < 1.25 * sigma2);
  }
}

TEST_CASE("all-noise PSD with threshold 5 yields no detections") {
  int empty = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto psd = noise_psd_estimate(4096, 1.0, 2000 + seed);
    if (detect_segments(psd, 5.0, 3).empty()) ++empty;
  }
  CHECK(empty >= 95);
}

TEST_CASE("a single strong tone produces exactly one segment") {
  auto psd = noise_psd_estimate(1024, 1.0, 77);
  psd.bins[300] = 500.0;
  const auto segments = detect_segments(psd, 5.0, 3);
  REQUIRE(segments.size() == 1);
  CHECK(segments[0].lo_bin <= 300);
  CHECK(segments[0].hi_bin >= 300);
  CHECK(segments[0].peak_bin == 300);
}

TEST_CASE("two well-separated emitters give two segments w/ correct peaks") {
  const auto scene = two_emitter_scene();
  const auto est = spectrum_of(compose_scene(scene));
  const auto psd = estimate_psd(est);
  const auto segments = detect_segments(psd, 4.0, 3);
  REQUIRE(segments.size() == 2);
  const double f_peak_0 =
      static_cast<double>(segments[0].peak_bin) * psd.bin_hz;
  const double f_peak_1 =
      static_cast<double>(segments[1].peak_bin) * psd.bin_hz;
  CHECK(std::abs(f_peak_0 - 30e6) < 2e6);
  CHECK(std::abs(f_peak_1 - 70e6) < 1.5e6);
}

TEST_CASE("every bin above threshold belongs to exactly one segment") {
  auto psd = noise_psd_estimate(2048, 1.0, 123);
  psd.bins[100] = 900.0;
  psd.bins[101] = 700.0;
  psd.bins[500] = 800.0;
  const double threshold = 4.0 * 4.0 * psd.noise_floor;
  const auto segments = detect_segments(psd, 4.0, 3);
  for (std::size_t b = 0; b < psd.bins.size(); ++b) {
    std::size_t owners = 0;
    for (const auto& seg : segments) {
      if (b >= seg.lo_bin && b <= seg.hi_bin) ++owners;
    }
    if (psd.bins[b] > threshold) {
      CHECK(owners == 1);
    } else {
      CHECK(owners <= 1);  // merged gap bins may sit inside a segment
    }
  }
}

TEST_CASE("pure tone features: f_c within half a bin, bw floored at one bin") {
  TimeSeries ts;
  ts.sample_rate_hz = 200e6;
  ts.samples.resize(4096);
  const double f_tone = std::round(30e6 / (200e6 / 4096.0)) * (200e6 / 4096.0);
  for (std::size_t t = 0; t < ts.samples.size(); ++t) {
    const double ang = 2.0 * std::numbers::pi * f_tone *
                       static_cast<double>(t) / ts.sample_rate_hz;
    ts.samples[t] = cplx(std::cos(ang), std::sin(ang));
  }
  const auto est = spectrum_of(ts);
  const auto psd = estimate_psd(est);
  const auto segments = detect_segments(psd, 4.0, 3);
  REQUIRE(segments.size() == 1);
  const auto fv = extract_features(psd, segments[0]);
  CHECK(std::abs(fv.f_c_hz - f_tone) <= 0.5 * psd.bin_hz);
  CHECK(fv.bw_hz == doctest::Approx(psd.bin_hz));
}

TEST_CASE("symmetric two-bin segment centers the centroid") {
  PsdEstimate psd;
  psd.bin_hz = 10.0;
  psd.bins.assign(32, 0.0);
  psd.bins[8] = 5.0;
  psd.bins[10] = 5.0;
  psd.noise_floor = 0.1;
  SupportSegment seg{8, 10, 8};
  const auto fv = extract_features(psd, seg);
  CHECK(fv.f_c_hz == doctest::Approx(90.0));  // midpoint of bins 8 and 10
}

TEST_CASE("RRC BPSK occupied bandwidth is near (1+rolloff)*rate") {
  WidebandScene scene;
  scene.band_upper_hz = 100e6;
  scene.n_samples = 4096;
  scene.seed = 17;
  EmitterSpec e;
  e.modulation = ModulationKind::kBpsk;
  e.carrier_hz = 50e6;
  e.symbol_rate_hz = 2e6;
  scene.emitters = {e};
  const auto est = spectrum_of(compose_scene(scene));
  const auto psd = estimate_psd(est);
  const auto segments = detect_segments(psd, 4.0, 3);
  REQUIRE(segments.size() == 1);
  const auto fv = extract_features(psd, segments[0]);
  const double expected = (1.0 + kRrcRolloff) * e.symbol_rate_hz;
  CHECK(fv.bw_hz > 0.85 * expected);
  CHECK(fv.bw_hz < 1.15 * expected);
}

TEST_CASE("feature scaling: c^2 covariance of e_t/a_max, f_c invariant") {
  const auto scene = two_emitter_scene();
  auto est = spectrum_of(compose_scene(scene));
  auto psd = estimate_psd(est);
  auto segments = detect_segments(psd, 4.0, 3);
  REQUIRE(segments.size() == 2);

  FeatureOptions raw;
  raw.normalize_a_max = false;
  const auto base = extract_features(psd, segments[0], raw);
  const auto base_norm = extract_features(psd, segments[0]);

  const double c = 2.0;  // exact in floating point
  for (auto& v : est.s_hat) v *= c;
  const auto scaled_psd = estimate_psd(est);
  const auto scaled_segments = detect_segments(scaled_psd, 4.0, 3);
  REQUIRE(scaled_segments.size() == 2);
  const auto scaled = extract_features(scaled_psd, scaled_segments[0], raw);
  const auto scaled_norm = extract_features(scaled_psd, scaled_segments[0]);

  CHECK(scaled.f_c_hz == base.f_c_hz);
  CHECK(scaled.e_t == c * c * base.e_t);
  CHECK(scaled.a_max == c * c * base.a_max);
  // noise-floor-normalized a_max cancels the scale by construction
  CHECK(scaled_norm.f_c_hz == base_norm.f_c_hz);
  CHECK(scaled_norm.e_t == c * c * base_norm.e_t);
  CHECK(scaled_norm.a_max == doctest::Approx(base_norm.a_max));
}

TEST_CASE("e_t is at least the peak bin energy") {
  for (std::uint64_t seed = 300; seed < 305; ++seed) {
    auto psd = noise_psd_estimate(1024, 1.0, seed);
    psd.bins[200] = 400.0;
    psd.bins[201] = 300.0;
    const auto segments = detect_segments(psd, 4.0, 3);
    for (const auto& seg : segments) {
      const auto fv = extract_features(psd, seg);
      CHECK(fv.e_t >= psd.bins[seg.peak_bin] * psd.bin_hz - 1e-12);
    }
  }
}

TEST_CASE("noiseless well-separated scenes give one segment per emitter") {
  SceneConfig config;
  config.n_samples = 4096;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto scene = random_scene(config, 500 + seed);
    const auto est = spectrum_of(compose_scene(scene));
    const auto psd = estimate_psd(est);
    const auto segments = detect_segments(psd, 4.0, 3);
    CHECK(segments.size() == scene.emitters.size());
  }
}

TEST_CASE("ground-truth labeling matches segments to their emitters") {
  const auto scene = two_emitter_scene();
  const auto est = spectrum_of(compose_scene(scene));
  const auto psd = estimate_psd(est);
  const auto segments = detect_segments(psd, 4.0, 3);
  std::vector<FeatureVector> features;
  for (const auto& seg : segments) {
    features.push_back(extract_features(psd, seg));
  }
  const auto labeled = label_features(features, scene);
  REQUIRE(labeled.size() == 2);
  CHECK(labeled[0].label == ModulationKind::kBpsk);
  CHECK(labeled[1].label == ModulationKind::kQpsk);

  // a far-away spurious segment stays unlabeled
  FeatureVector fake;
  fake.f_c_hz = 10e6;
  fake.bw_hz = 1e5;
  fake.a_max = 10.0;
  fake.e_t = 1.0;
  const auto labeled2 = label_features({fake}, scene);
  CHECK(labeled2.empty());
}

TEST_CASE("degenerate detector inputs") {
  PsdEstimate psd;
  psd.bin_hz = 1.0;
  psd.bins.assign(16, 1.0);
  psd.noise_floor = 1.0;
  CHECK_THROWS_AS(detect_segments(psd, 1.0, 3), std::invalid_argument);
  SupportSegment bad{4, 20, 4};
  CHECK_THROWS_AS(extract_features(psd, bad), std::invalid_argument);
}
