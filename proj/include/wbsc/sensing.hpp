#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wbsc/scene.hpp"

namespace wbsc {

enum class SensingKind { kRandomSubsample, kBernoulli };

const char* to_string(SensingKind kind);

// M x N compressive sampling operator. RandomSubsample rows are one-hot
// (a sorted choice of M distinct time indices); Bernoulli entries are
// +-1/sqrt(M). Matrices persist as {kind, M, N, seed} and are rebuilt on
// load; the Bernoulli entries are materialized in memory for speed.
class SensingMatrix {
 public:
  SensingMatrix() = default;  // empty; fill via build()/from_indices()

  static SensingMatrix build(std::size_t m, std::size_t n, SensingKind kind,
                             std::uint64_t seed);
  // Test/tooling constructor from explicit subsample indices.
  static SensingMatrix from_indices(std::vector<std::size_t> indices,
                                    std::size_t n);

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  SensingKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::size_t>& selected_indices() const { return indices_; }
  // Row-major M x N sign matrix, scaled by 1/sqrt(M); Bernoulli only.
  const std::vector<double>& bernoulli_entries() const { return dense_; }

  // z = Theta * r
  std::vector<cplx> apply(std::span<const cplx> r) const;
  // r = Theta^H * z (scatter for subsample, transpose multiply for Bernoulli)
  std::vector<cplx> adjoint(std::span<const cplx> z) const;

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  SensingKind kind_ = SensingKind::kRandomSubsample;
  std::uint64_t seed_ = 0;
  std::vector<std::size_t> indices_;
  std::vector<double> dense_;
};

struct MeasurementRecord {
  std::vector<cplx> z;
  SensingMatrix sensing;
  std::string scene_ref;
  double snr_db = 0.0;
  double sample_rate_hz = 0.0;  // of the Nyquist-rate series that was sampled
};

MeasurementRecord acquire(const SensingMatrix& sensing, const TimeSeries& r);

// FFT-domain band-pass with a raised-cosine edge taper. The band is given
// in signal frequencies within [-fs/2, fs/2); passband gain is exactly 1.
TimeSeries prefilter(const TimeSeries& r, double band_lo_hz,
                     double band_hi_hz);

}  // namespace wbsc
