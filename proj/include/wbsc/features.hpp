#pragma once

#include <optional>
#include <vector>

#include "wbsc/recovery.hpp"
#include "wbsc/scene.hpp"

namespace wbsc {

struct PsdEstimate {
  std::vector<double> bins;  // power per bin, |s_hat|^2
  double bin_hz = 0.0;
  double noise_floor = 0.0;  // estimated per-bin noise power
};

struct SupportSegment {
  std::size_t lo_bin = 0;
  std::size_t hi_bin = 0;  // inclusive
  std::size_t peak_bin = 0;

  std::size_t width() const { return hi_bin - lo_bin + 1; }
};

struct FeatureVector {
  double f_c_hz = 0.0;
  double bw_hz = 0.0;
  double a_max = 0.0;
  double e_t = 0.0;
  std::optional<ModulationKind> label;
};

enum class BandwidthMode { kOccupied99, k3Db };

struct FeatureOptions {
  // Peak power divided by the noise floor when true, raw peak power when
  // false.
  bool normalize_a_max = true;
  BandwidthMode bw_mode = BandwidthMode::kOccupied99;
};

// Per-bin power with a median-based noise floor: for a complex-Gaussian
// floor the bin powers are exponential, so median/ln2 estimates the mean
// noise power. A small peak-relative clamp keeps the floor meaningful on
// synthetic noiseless spectra where the median is roundoff dust.
PsdEstimate estimate_psd(const SpectrumEstimate& s_hat);
PsdEstimate estimate_psd(std::span<const cplx> s_hat, double bin_hz);

// Maximal runs of bins whose amplitude exceeds threshold_factor times the
// floor amplitude (i.e. power > threshold_factor^2 * noise_floor). Runs
// separated by fewer than min_gap_bins quiet bins are merged.
std::vector<SupportSegment> detect_segments(const PsdEstimate& psd,
                                            double threshold_factor = 4.0,
                                            std::size_t min_gap_bins = 3);

// f_c: power-weighted centroid; bw: 99%-power (or 3 dB) width, floored at
// one bin; a_max: peak power (noise-normalized per options); e_t:
// integrated power over the segment.
FeatureVector extract_features(const PsdEstimate& psd,
                               const SupportSegment& seg,
                               const FeatureOptions& opts = {});

// Ground-truth labeling: a segment is matched to the nearest emitter whose
// carrier lies within half the emitter's occupied bandwidth of the
// segment centroid; each emitter labels at most one segment and unmatched
// segments are dropped.
std::vector<FeatureVector> label_features(
    const std::vector<FeatureVector>& features, const WidebandScene& scene);

}  // namespace wbsc
