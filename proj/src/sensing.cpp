#include "wbsc/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "wbsc/fft.hpp"
#include "wbsc/rng.hpp"

namespace wbsc {

const char* to_string(SensingKind kind) {
  switch (kind) {
    case SensingKind::kRandomSubsample:
      return "subsample";
    case SensingKind::kBernoulli:
      return "bernoulli";
  }
  return "?";
}

SensingMatrix SensingMatrix::build(std::size_t m, std::size_t n,
                                   SensingKind kind, std::uint64_t seed) {
  if (m < 1 || m > n) {
    throw std::invalid_argument("SensingMatrix: require 1 <= M <= N");
  }
  SensingMatrix out;
  out.m_ = m;
  out.n_ = n;
  out.kind_ = kind;
  out.seed_ = seed;
  auto engine = make_engine(mix_seed(seed, 0x73656e73ULL));
  if (kind == SensingKind::kRandomSubsample) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates: the first m entries are a uniform m-subset.
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(all[i], all[pick(engine)]);
    }
    out.indices_.assign(all.begin(), all.begin() + static_cast<long>(m));
    std::sort(out.indices_.begin(), out.indices_.end());
  } else {
    out.dense_.resize(m * n);
    const double mag = 1.0 / std::sqrt(static_cast<double>(m));
    std::uniform_int_distribution<int> coin(0, 1);
    for (auto& v : out.dense_) v = coin(engine) ? mag : -mag;
  }
  return out;
}

SensingMatrix SensingMatrix::from_indices(std::vector<std::size_t> indices,
                                          std::size_t n) {
  if (indices.empty() || indices.size() > n) {
    throw std::invalid_argument("SensingMatrix: require 1 <= M <= N");
  }
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end() ||
      indices.back() >= n) {
    throw std::invalid_argument(
        "SensingMatrix: indices must be distinct and < N");
  }
  SensingMatrix out;
  out.m_ = indices.size();
  out.n_ = n;
  out.kind_ = SensingKind::kRandomSubsample;
  out.indices_ = std::move(indices);
  return out;
}

std::vector<cplx> SensingMatrix::apply(std::span<const cplx> r) const {
  if (r.size() != n_) {
    throw std::invalid_argument("SensingMatrix::apply: dimension mismatch");
  }
  std::vector<cplx> z(m_);
  if (kind_ == SensingKind::kRandomSubsample) {
    for (std::size_t i = 0; i < m_; ++i) z[i] = r[indices_[i]];
  } else {
    for (std::size_t i = 0; i < m_; ++i) {
      const double* row = dense_.data() + i * n_;
      cplx acc{0.0, 0.0};
      for (std::size_t j = 0; j < n_; ++j) acc += row[j] * r[j];
      z[i] = acc;
    }
  }
  return z;
}

std::vector<cplx> SensingMatrix::adjoint(std::span<const cplx> z) const {
  if (z.size() != m_) {
    throw std::invalid_argument("SensingMatrix::adjoint: dimension mismatch");
  }
  std::vector<cplx> r(n_, cplx{0.0, 0.0});
  if (kind_ == SensingKind::kRandomSubsample) {
    for (std::size_t i = 0; i < m_; ++i) r[indices_[i]] = z[i];
  } else {
    for (std::size_t i = 0; i < m_; ++i) {
      const double* row = dense_.data() + i * n_;
      const cplx zi = z[i];
      for (std::size_t j = 0; j < n_; ++j) r[j] += row[j] * zi;
    }
  }
  return r;
}

MeasurementRecord acquire(const SensingMatrix& sensing, const TimeSeries& r) {
  if (r.size() != sensing.cols()) {
    throw std::invalid_argument("acquire: series length != sensing cols");
  }
  MeasurementRecord rec;
  rec.z = sensing.apply(std::span<const cplx>(r.samples));
  rec.sensing = sensing;
  rec.sample_rate_hz = r.sample_rate_hz;
  return rec;
}

TimeSeries prefilter(const TimeSeries& r, double band_lo_hz,
                     double band_hi_hz) {
  if (!(band_hi_hz > band_lo_hz)) {
    throw std::invalid_argument("prefilter: empty band");
  }
  const double fs = r.sample_rate_hz;
  if (band_lo_hz < 0.0 || band_hi_hz > 0.5 * fs) {
    throw std::invalid_argument("prefilter: band outside [0, fs/2]");
  }
  const std::size_t n = r.size();
  const Fft& plan = fft_plan(n);
  std::vector<cplx> spec(r.samples);
  plan.forward(std::span<cplx>(spec));

  // Raised-cosine transition bands sit just outside the passband so that
  // in-band gain is exactly 1.
  const double taper = 0.02 * (band_hi_hz - band_lo_hz);
  const double bin = fs / static_cast<double>(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double f = (m <= n / 2)
                         ? static_cast<double>(m) * bin
                         : (static_cast<double>(m) - static_cast<double>(n)) *
                               bin;
    double gain = 0.0;
    if (f >= band_lo_hz && f <= band_hi_hz) {
      gain = 1.0;
    } else if (taper > 0.0 && f < band_lo_hz && f > band_lo_hz - taper) {
      const double x = (band_lo_hz - f) / taper;
      gain = 0.5 * (1.0 + std::cos(std::numbers::pi * x));
    } else if (taper > 0.0 && f > band_hi_hz && f < band_hi_hz + taper) {
      const double x = (f - band_hi_hz) / taper;
      gain = 0.5 * (1.0 + std::cos(std::numbers::pi * x));
    }
    spec[m] *= gain;
  }
  plan.inverse(std::span<cplx>(spec));
  return TimeSeries{std::move(spec), fs};
}

}  // namespace wbsc
