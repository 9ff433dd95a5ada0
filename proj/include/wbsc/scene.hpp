#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wbsc/fft.hpp"

namespace wbsc {

// Class ordering is the tie-break ordering used by the classifiers:
// BASK < BPSK < QPSK < QAM32.
enum class ModulationKind : int { kBask = 0, kBpsk = 1, kQpsk = 2, kQam32 = 3 };

inline constexpr int kNumModulations = 4;
inline constexpr double kRrcRolloff = 0.35;

// Unit-average-energy constellation points, indexed by symbol value.
std::span<const cplx> constellation(ModulationKind kind);

const char* to_string(ModulationKind kind);
std::optional<ModulationKind> modulation_from_string(const std::string& name);

struct EmitterSpec {
  ModulationKind modulation = ModulationKind::kBpsk;
  double carrier_hz = 0.0;
  double symbol_rate_hz = 0.0;
  double amplitude = 1.0;
  cplx channel_gain{1.0, 0.0};

  // Band edges of the pulse-shaped emission, [carrier +- (1+rolloff)*rate/2].
  double occupied_lo_hz() const {
    return carrier_hz - 0.5 * (1.0 + kRrcRolloff) * symbol_rate_hz;
  }
  double occupied_hi_hz() const {
    return carrier_hz + 0.5 * (1.0 + kRrcRolloff) * symbol_rate_hz;
  }
};

struct TimeSeries {
  std::vector<cplx> samples;
  double sample_rate_hz = 0.0;

  std::size_t size() const { return samples.size(); }
  double mean_power() const;
};

struct WidebandScene {
  double band_upper_hz = 100e6;
  std::size_t n_samples = 4096;
  std::vector<EmitterSpec> emitters;
  double noise_psd = 0.0;  // W/Hz over the sampled band
  std::uint64_t seed = 0;

  double sample_rate_hz() const { return 2.0 * band_upper_hz; }
  double bin_hz() const {
    return sample_rate_hz() / static_cast<double>(n_samples);
  }
  // Throws std::invalid_argument if any invariant is violated.
  void validate() const;
};

struct SamplingGrid {
  std::size_t n_samples = 0;
  double sample_rate_hz = 0.0;
};

// Number of symbol slots the emitter occupies in one block; the effective
// symbol rate is quantized so an integer number of symbols tiles the block.
std::size_t symbol_slots(double symbol_rate_hz, const SamplingGrid& grid);

// Root-raised-cosine shaped, carrier-shifted, amplitude-calibrated waveform.
// Synthesis is block-periodic with the carrier snapped to the nearest DFT
// bin, so the emission occupies exactly its (1+rolloff)*rate band and the
// composite scene spectrum is exactly sparse. Shorter symbol sequences are
// tiled cyclically across the block's symbol slots. The waveform is scaled
// so its mean power equals amplitude^2 exactly (zero sequences stay zero).
TimeSeries modulate_nb(const EmitterSpec& spec, std::span<const int> symbols,
                       const SamplingGrid& grid);

// Frequency-domain single-emitter synthesis used by modulate_nb/compose_scene;
// adds gain * spectrum into `accum` (length grid.n_samples, unitary bins).
void accumulate_emitter_spectrum(const EmitterSpec& spec,
                                 std::span<const int> symbols,
                                 const SamplingGrid& grid, cplx gain,
                                 std::span<cplx> accum);

// Uniform random symbol indices for a modulation; the stream is derived
// from (scene seed, emitter fingerprint) so single-emitter sub-scenes
// reproduce the symbols the emitter gets in the full scene.
std::vector<int> draw_symbols(ModulationKind kind, std::size_t count,
                              std::uint64_t seed);
std::uint64_t emitter_fingerprint(const EmitterSpec& spec);

// Sum of channel_gain-weighted emitter waveforms plus AWGN of the scene's
// noise_psd; deterministic per scene.seed.
TimeSeries compose_scene(const WidebandScene& scene);

// Adds complex circular AWGN at the requested SNR relative to the measured
// input power. +inf SNR returns the input unchanged.
TimeSeries add_awgn(const TimeSeries& ts, double snr_db, std::uint64_t seed);

struct RateRange {
  double lo_hz = 0.5e6;
  double hi_hz = 2.0e6;
};

struct SceneConfig {
  double band_upper_hz = 100e6;
  std::size_t n_samples = 4096;
  std::size_t n_emitters_min = 4;
  std::size_t n_emitters_max = 4;
  std::vector<ModulationKind> pool{ModulationKind::kBask, ModulationKind::kBpsk,
                                   ModulationKind::kQpsk,
                                   ModulationKind::kQam32};
  // When true, each emitter draws its modulation from the pool uniformly;
  // when false the pool is cycled so counts stay balanced.
  bool sample_pool_uniform = false;
  RateRange symbol_rate;  // used when per_modulation_rate is empty
  std::vector<std::pair<ModulationKind, RateRange>> per_modulation_rate;
  double amplitude_lo = 0.5;
  double amplitude_hi = 1.5;
  bool allow_overlap = false;
  double guard_hz = 1e6;         // spacing margin between occupied bands
  double carrier_margin_hz = 3e6;  // keep-out from 0 and band_upper
  bool random_phase_gain = false;  // unit-magnitude random channel phase

  RateRange rate_for(ModulationKind kind) const;
};

// Draws a scene honoring the config and all WidebandScene invariants.
// Throws std::runtime_error when the request cannot fit (sparsity cap or
// non-overlapping placement failure).
WidebandScene random_scene(const SceneConfig& config, std::uint64_t seed);

}  // namespace wbsc
