#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "wbsc/sensing.hpp"

using namespace wbsc;

namespace {

TimeSeries tone(std::size_t n, double fs, double freq_hz,
                double amplitude = 1.0) {
  TimeSeries ts;
  ts.sample_rate_hz = fs;
  ts.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double ang =
        2.0 * std::numbers::pi * freq_hz * static_cast<double>(t) / fs;
    ts.samples[t] = amplitude * cplx(std::cos(ang), std::sin(ang));
  }
  return ts;
}

std::vector<cplx> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& x : v) x = cplx(dist(engine), dist(engine));
  return v;
}

}  // namespace

TEST_CASE("subsample M=N selects every index in order") {
  const auto theta = SensingMatrix::build(16, 16,
                                          SensingKind::kRandomSubsample, 1);
  REQUIRE(theta.selected_indices().size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(theta.selected_indices()[i] == i);
  }
}

TEST_CASE("subsample M=N/2 picks distinct sorted indices") {
  const auto theta = SensingMatrix::build(64, 128,
                                          SensingKind::kRandomSubsample, 5);
  const auto& idx = theta.selected_indices();
  REQUIRE(idx.size() == 64);
  std::set<std::size_t> unique(idx.begin(), idx.end());
  CHECK(unique.size() == 64);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  CHECK(*unique.rbegin() < 128);
}

TEST_CASE("Bernoulli entries all have magnitude 1/sqrt(M)") {
  const auto theta = SensingMatrix::build(4, 8, SensingKind::kBernoulli, 9);
  REQUIRE(theta.bernoulli_entries().size() == 32);
  for (double v : theta.bernoulli_entries()) {
    CHECK(std::abs(std::abs(v) - 0.5) < 1e-15);
  }
}

TEST_CASE("M > N is rejected") {
  CHECK_THROWS_AS(SensingMatrix::build(9, 8, SensingKind::kBernoulli, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(SensingMatrix::build(0, 8, SensingKind::kBernoulli, 0),
                  std::invalid_argument);
}

TEST_CASE("acquire with M=N subsampling returns the series itself") {
  const auto theta = SensingMatrix::build(32, 32,
                                          SensingKind::kRandomSubsample, 2);
  TimeSeries ts;
  ts.sample_rate_hz = 1.0;
  ts.samples = random_vector(32, 3);
  const auto rec = acquire(theta, ts);
  for (std::size_t i = 0; i < 32; ++i) {
    CHECK(rec.z[i] == ts.samples[i]);
  }
  CHECK(rec.sample_rate_hz == ts.sample_rate_hz);
}

TEST_CASE("explicit indices {0,3} pick [a, d]") {
  const auto theta = SensingMatrix::from_indices({0, 3}, 4);
  TimeSeries ts;
  ts.sample_rate_hz = 1.0;
  ts.samples = {cplx{1, 0}, cplx{2, 0}, cplx{3, 0}, cplx{4, 0}};
  const auto rec = acquire(theta, ts);
  REQUIRE(rec.z.size() == 2);
  CHECK(rec.z[0] == cplx{1, 0});
  CHECK(rec.z[1] == cplx{4, 0});
}

TEST_CASE("Bernoulli apply matches a naive dense multiply") {
  const std::size_t m = 16;
  const std::size_t n = 48;
  const auto theta = SensingMatrix::build(m, n, SensingKind::kBernoulli, 21);
  const auto x = random_vector(n, 4);
  const auto z = theta.apply(x);
  const auto& d = theta.bernoulli_entries();
  for (std::size_t i = 0; i < m; ++i) {
    cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) acc += d[i * n + j] * x[j];
    CHECK(std::abs(acc - z[i]) < 1e-12);
  }
}

TEST_CASE("acquire is linear") {
  for (const auto kind :
       {SensingKind::kRandomSubsample, SensingKind::kBernoulli}) {
    const auto theta = SensingMatrix::build(20, 64, kind, 8);
    const auto x = random_vector(64, 5);
    const auto y = random_vector(64, 6);
    const cplx a{1.3, -0.4};
    const cplx b{-0.2, 2.1};
    std::vector<cplx> mix(64);
    for (std::size_t i = 0; i < 64; ++i) mix[i] = a * x[i] + b * y[i];
    const auto zm = theta.apply(mix);
    const auto zx = theta.apply(x);
    const auto zy = theta.apply(y);
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(std::abs(zm[i] - (a * zx[i] + b * zy[i])) < 1e-12);
    }
  }
}

TEST_CASE("subsample rows are orthonormal: Theta Theta^T = I exactly") {
  const auto theta = SensingMatrix::build(24, 64,
                                          SensingKind::kRandomSubsample, 13);
  // apply Theta^T then Theta to each basis vector of R^M
  for (std::size_t i = 0; i < 24; ++i) {
    std::vector<cplx> e(24, cplx{0.0, 0.0});
    e[i] = cplx{1.0, 0.0};
    const auto back = theta.apply(theta.adjoint(e));
    for (std::size_t j = 0; j < 24; ++j) {
      CHECK(back[j] == (i == j ? cplx{1.0, 0.0} : cplx{0.0, 0.0}));
    }
  }
}

TEST_CASE("sensing construction is deterministic per seed") {
  const auto a = SensingMatrix::build(32, 128, SensingKind::kRandomSubsample,
                                      77);
  const auto b = SensingMatrix::build(32, 128, SensingKind::kRandomSubsample,
                                      77);
  CHECK(a.selected_indices() == b.selected_indices());
  const auto c = SensingMatrix::build(16, 64, SensingKind::kBernoulli, 78);
  const auto d = SensingMatrix::build(16, 64, SensingKind::kBernoulli, 78);
  CHECK(c.bernoulli_entries() == d.bernoulli_entries());
}

TEST_CASE("prefilter: zero input stays zero, empty band throws") {
  TimeSeries ts;
  ts.sample_rate_hz = 200e6;
  ts.samples.assign(1024, cplx{0.0, 0.0});
  const auto out = prefilter(ts, 0.0, 100e6);
  CHECK(out.mean_power() == 0.0);
  CHECK_THROWS_AS(prefilter(ts, 50e6, 50e6), std::invalid_argument);
}

TEST_CASE("prefilter preserves an in-band tone within 1%") {
  const auto ts = tone(4096, 200e6, 42e6);
  const auto out = prefilter(ts, 0.0, 100e6);
  const double ratio = out.mean_power() / ts.mean_power();
  CHECK(ratio > 0.98);
  CHECK(ratio <= 1.0 + 1e-12);
}

TEST_CASE("prefilter rejects a tone 20% of bandwidth outside by >= 40 dB") {
  const double band_lo = 0.0;
  const double band_hi = 50e6;
  // snap the tone to the DFT grid so the measurement probes the mask, not
  // the Dirichlet leakage of an off-grid test tone
  const double bin = 200e6 / 4096.0;
  const double f_out =
      std::round((band_hi + 0.2 * (band_hi - band_lo)) / bin) * bin;
  const auto ts = tone(4096, 200e6, f_out);
  const auto out = prefilter(ts, band_lo, band_hi);
  const double atten_db =
      10.0 * std::log10(ts.mean_power() / std::max(out.mean_power(), 1e-300));
  CHECK(atten_db >= 40.0);
}
