#include "wbsc/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace wbsc {

PsdEstimate estimate_psd(std::span<const cplx> s_hat, double bin_hz) {
  PsdEstimate psd;
  psd.bin_hz = bin_hz;
  psd.bins.resize(s_hat.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < s_hat.size(); ++i) {
    psd.bins[i] = std::norm(s_hat[i]);
    peak = std::max(peak, psd.bins[i]);
  }
  if (!psd.bins.empty()) {
    // Median over the nonzero bins: on a dense spectrum this is the plain
    // median; on l1 solver output the exact zeros left by shrinkage would
    // otherwise drag the floor to nothing. When almost every bin is zero
    // the remaining bins ARE the signal, so the median says nothing about
    // noise and the floor falls back to a relative clamp.
    std::vector<double> nonzero;
    nonzero.reserve(psd.bins.size());
    for (double b : psd.bins) {
      if (b > 0.0) nonzero.push_back(b);
    }
    double median = 0.0;
    if (nonzero.size() >= psd.bins.size() / 4) {
      const std::size_t mid = nonzero.size() / 2;
      std::nth_element(nonzero.begin(),
                       nonzero.begin() + static_cast<long>(mid),
                       nonzero.end());
      median = nonzero[mid];
    }
    // exponential bin powers: median = mean * ln 2
    psd.noise_floor = std::max(median / std::numbers::ln2, 1e-12 * peak);
  }
  return psd;
}

PsdEstimate estimate_psd(const SpectrumEstimate& s_hat) {
  return estimate_psd(std::span<const cplx>(s_hat.s_hat), s_hat.bin_hz);
}

std::vector<SupportSegment> detect_segments(const PsdEstimate& psd,
                                            double threshold_factor,
                                            std::size_t min_gap_bins) {
  if (threshold_factor <= 1.0) {
    throw std::invalid_argument("detect_segments: threshold_factor must be > 1");
  }
  // threshold_factor scales the floor amplitude, so square it for power
  const double threshold =
      threshold_factor * threshold_factor * psd.noise_floor;
  std::vector<SupportSegment> runs;
  const std::size_t n = psd.bins.size();
  std::size_t i = 0;
  while (i < n) {
    if (psd.bins[i] > threshold) {
      SupportSegment seg;
      seg.lo_bin = i;
      while (i < n && psd.bins[i] > threshold) ++i;
      seg.hi_bin = i - 1;
      runs.push_back(seg);
    } else {
      ++i;
    }
  }
  // merge runs separated by fewer than min_gap_bins quiet bins
  std::vector<SupportSegment> merged;
  for (const auto& run : runs) {
    if (!merged.empty() &&
        run.lo_bin - merged.back().hi_bin - 1 < min_gap_bins) {
      merged.back().hi_bin = run.hi_bin;
    } else {
      merged.push_back(run);
    }
  }
  for (auto& seg : merged) {
    seg.peak_bin = seg.lo_bin;
    for (std::size_t b = seg.lo_bin; b <= seg.hi_bin; ++b) {
      if (psd.bins[b] > psd.bins[seg.peak_bin]) seg.peak_bin = b;
    }
  }
  return merged;
}

FeatureVector extract_features(const PsdEstimate& psd,
                               const SupportSegment& seg,
                               const FeatureOptions& opts) {
  if (seg.hi_bin >= psd.bins.size() || seg.lo_bin > seg.hi_bin ||
      seg.peak_bin < seg.lo_bin || seg.peak_bin > seg.hi_bin) {
    throw std::invalid_argument("extract_features: segment out of range");
  }
  FeatureVector fv;
  double total = 0.0;
  double centroid = 0.0;
  for (std::size_t b = seg.lo_bin; b <= seg.hi_bin; ++b) {
    total += psd.bins[b];
    centroid += psd.bins[b] * static_cast<double>(b);
  }
  if (total <= 0.0) {
    throw std::invalid_argument("extract_features: segment has no power");
  }
  fv.f_c_hz = (centroid / total) * psd.bin_hz;
  fv.e_t = total * psd.bin_hz;
  const double peak = psd.bins[seg.peak_bin];
  fv.a_max = (opts.normalize_a_max && psd.noise_floor > 0.0)
                 ? peak / psd.noise_floor
                 : peak;

  if (opts.bw_mode == BandwidthMode::kOccupied99) {
    // trim 0.5% of the segment power from each tail
    const double lo_target = 0.005 * total;
    const double hi_target = 0.995 * total;
    std::size_t lo99 = seg.lo_bin;
    std::size_t hi99 = seg.hi_bin;
    double cum = 0.0;
    for (std::size_t b = seg.lo_bin; b <= seg.hi_bin; ++b) {
      cum += psd.bins[b];
      if (cum >= lo_target) {
        lo99 = b;
        break;
      }
    }
    cum = 0.0;
    for (std::size_t b = seg.lo_bin; b <= seg.hi_bin; ++b) {
      cum += psd.bins[b];
      if (cum >= hi_target) {
        hi99 = b;
        break;
      }
    }
    fv.bw_hz = static_cast<double>(hi99 - lo99 + 1) * psd.bin_hz;
  } else {
    const double half = 0.5 * peak;
    std::size_t lo3 = seg.peak_bin;
    std::size_t hi3 = seg.peak_bin;
    while (lo3 > seg.lo_bin && psd.bins[lo3 - 1] >= half) --lo3;
    while (hi3 < seg.hi_bin && psd.bins[hi3 + 1] >= half) ++hi3;
    fv.bw_hz = static_cast<double>(hi3 - lo3 + 1) * psd.bin_hz;
  }
  return fv;
}

std::vector<FeatureVector> label_features(
    const std::vector<FeatureVector>& features, const WidebandScene& scene) {
  struct Candidate {
    double distance;
    std::size_t feature_idx;
    std::size_t emitter_idx;
  };
  std::vector<Candidate> candidates;
  for (std::size_t f = 0; f < features.size(); ++f) {
    for (std::size_t e = 0; e < scene.emitters.size(); ++e) {
      const auto& em = scene.emitters[e];
      const double dist = std::abs(features[f].f_c_hz - em.carrier_hz);
      const double half_bw =
          0.5 * (1.0 + kRrcRolloff) * em.symbol_rate_hz;
      if (dist <= half_bw) candidates.push_back({dist, f, e});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              if (a.feature_idx != b.feature_idx)
                return a.feature_idx < b.feature_idx;
              return a.emitter_idx < b.emitter_idx;
            });
  std::vector<char> feature_used(features.size(), 0);
  std::vector<char> emitter_used(scene.emitters.size(), 0);
  std::vector<std::pair<std::size_t, ModulationKind>> matches;
  for (const auto& c : candidates) {
    if (feature_used[c.feature_idx] || emitter_used[c.emitter_idx]) continue;
    feature_used[c.feature_idx] = 1;
    emitter_used[c.emitter_idx] = 1;
    matches.emplace_back(c.feature_idx,
                         scene.emitters[c.emitter_idx].modulation);
  }
  std::sort(matches.begin(), matches.end());
  std::vector<FeatureVector> out;
  out.reserve(matches.size());
  for (const auto& [idx, label] : matches) {
    FeatureVector fv = features[idx];
    fv.label = label;
    out.push_back(fv);
  }
  return out;
}

}  // namespace wbsc
