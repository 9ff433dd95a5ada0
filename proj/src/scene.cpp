#include "wbsc/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wbsc/rng.hpp"

namespace wbsc {

namespace {

std::vector<cplx> make_qpsk() {
  const double s = 1.0 / std::sqrt(2.0);
  return {cplx(s, s), cplx(-s, s), cplx(-s, -s), cplx(s, -s)};
}

// 6x6 cross constellation with the four corners removed, mean energy 1.
std::vector<cplx> make_qam32() {
  std::vector<cplx> pts;
  const std::array<double, 6> level{-5, -3, -1, 1, 3, 5};
  for (double re : level) {
    for (double im : level) {
      if (std::abs(re) == 5 && std::abs(im) == 5) continue;
      pts.emplace_back(re, im);
    }
  }
  // sum of |c|^2 over the 32 points is 640, so the mean is exactly 20
  const double norm = 1.0 / std::sqrt(20.0);
  for (auto& p : pts) p *= norm;
  return pts;
}

const std::vector<cplx>& constellation_vec(ModulationKind kind) {
  static const std::vector<cplx> bask{cplx(0.0, 0.0),
                                      cplx(std::sqrt(2.0), 0.0)};
  static const std::vector<cplx> bpsk{cplx(-1.0, 0.0), cplx(1.0, 0.0)};
  static const std::vector<cplx> qpsk = make_qpsk();
  static const std::vector<cplx> qam32 = make_qam32();
  switch (kind) {
    case ModulationKind::kBask:
      return bask;
    case ModulationKind::kBpsk:
      return bpsk;
    case ModulationKind::kQpsk:
      return qpsk;
    case ModulationKind::kQam32:
      return qam32;
  }
  throw std::invalid_argument("unknown modulation kind");
}

// Root-raised-cosine amplitude response at offset f from the carrier.
double rrc_gain(double f, double symbol_rate_hz, double rolloff) {
  const double fa = 0.5 * (1.0 - rolloff) * symbol_rate_hz;
  const double fb = 0.5 * (1.0 + rolloff) * symbol_rate_hz;
  const double af = std::abs(f);
  if (af <= fa) return 1.0;
  if (af >= fb) return 0.0;
  const double x = std::numbers::pi * (af - fa) / (rolloff * symbol_rate_hz);
  return std::sqrt(0.5 * (1.0 + std::cos(x)));
}

constexpr std::uint64_t kNoiseStream = 0x77626e6f69736531ULL;
constexpr std::uint64_t kSceneStream = 0x77627363656e6531ULL;

}  // namespace

std::span<const cplx> constellation(ModulationKind kind) {
  const auto& v = constellation_vec(kind);
  return {v.data(), v.size()};
}

const char* to_string(ModulationKind kind) {
  switch (kind) {
    case ModulationKind::kBask:
      return "BASK";
    case ModulationKind::kBpsk:
      return "BPSK";
    case ModulationKind::kQpsk:
      return "QPSK";
    case ModulationKind::kQam32:
      return "QAM32";
  }
  return "?";
}

std::optional<ModulationKind> modulation_from_string(const std::string& name) {
  for (int i = 0; i < kNumModulations; ++i) {
    const auto kind = static_cast<ModulationKind>(i);
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

double TimeSeries::mean_power() const {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += std::norm(s);
  return acc / static_cast<double>(samples.size());
}

void WidebandScene::validate() const {
  if (!Fft::is_power_of_two(n_samples)) {
    throw std::invalid_argument("scene: n_samples must be a power of two");
  }
  if (band_upper_hz <= 0.0) {
    throw std::invalid_argument("scene: band_upper_hz must be positive");
  }
  if (noise_psd < 0.0) {
    throw std::invalid_argument("scene: noise_psd must be nonnegative");
  }
  double occupied_bins = 0.0;
  for (const auto& e : emitters) {
    if (e.carrier_hz <= 0.0 || e.carrier_hz >= band_upper_hz) {
      throw std::invalid_argument("emitter: carrier outside (0, band_upper)");
    }
    if (e.symbol_rate_hz <= 0.0) {
      throw std::invalid_argument("emitter: symbol_rate_hz must be positive");
    }
    if (e.occupied_lo_hz() < 0.0 || e.occupied_hi_hz() > band_upper_hz) {
      throw std::invalid_argument("emitter: occupied band outside scene band");
    }
    if (e.amplitude <= 0.0) {
      throw std::invalid_argument("emitter: amplitude must be positive");
    }
    occupied_bins += (1.0 + kRrcRolloff) * e.symbol_rate_hz / bin_hz();
  }
  if (occupied_bins > 0.3 * static_cast<double>(n_samples)) {
    throw std::invalid_argument(
        "scene: total occupied bins exceed the 0.3*N sparsity cap");
  }
}

std::size_t symbol_slots(double symbol_rate_hz, const SamplingGrid& grid) {
  const double block_s =
      static_cast<double>(grid.n_samples) / grid.sample_rate_hz;
  return static_cast<std::size_t>(std::lround(symbol_rate_hz * block_s));
}

std::uint64_t emitter_fingerprint(const EmitterSpec& spec) {
  std::uint64_t h = mix_seed(static_cast<std::uint64_t>(spec.modulation),
                             bits_of(spec.carrier_hz));
  h = mix_seed(h, bits_of(spec.symbol_rate_hz));
  return mix_seed(h, bits_of(spec.amplitude));
}

std::vector<int> draw_symbols(ModulationKind kind, std::size_t count,
                              std::uint64_t seed) {
  auto engine = make_engine(seed);
  std::uniform_int_distribution<int> dist(
      0, static_cast<int>(constellation(kind).size()) - 1);
  std::vector<int> out(count);
  for (auto& s : out) s = dist(engine);
  return out;
}

void accumulate_emitter_spectrum(const EmitterSpec& spec,
                                 std::span<const int> symbols,
                                 const SamplingGrid& grid, cplx gain,
                                 std::span<cplx> accum) {
  const std::size_t n = grid.n_samples;
  if (accum.size() != n) {
    throw std::invalid_argument("accumulate_emitter_spectrum: size mismatch");
  }
  const double fs = grid.sample_rate_hz;
  const double bin = fs / static_cast<double>(n);
  const auto points = constellation(spec.modulation);
  if (symbols.empty()) {
    throw std::invalid_argument("modulate_nb: empty symbol sequence");
  }
  for (int s : symbols) {
    if (s < 0 || static_cast<std::size_t>(s) >= points.size()) {
      throw std::out_of_range("modulate_nb: symbol index out of range");
    }
  }
  const std::size_t slots = symbol_slots(spec.symbol_rate_hz, grid);
  if (slots < 8) {
    throw std::invalid_argument(
        "modulate_nb: grid too short for 8 symbols at this rate");
  }
  // Effective rate after quantizing to an integer symbol count per block.
  const double rate = static_cast<double>(slots) * bin;
  const double half_bw = 0.5 * (1.0 + kRrcRolloff) * rate;
  if (spec.carrier_hz - half_bw < 0.0 || spec.carrier_hz + half_bw > 0.5 * fs) {
    throw std::domain_error("modulate_nb: occupied band exceeds grid Nyquist");
  }
  const long carrier_bin = std::lround(spec.carrier_hz / bin);
  const long spread = static_cast<long>(std::floor(half_bw / bin));

  // Per-offset symbol spectrum times the pulse response, then one overall
  // scale so the realized mean power is exactly amplitude^2.
  std::vector<cplx> local(2 * spread + 1);
  double sumsq = 0.0;
  for (long d = -spread; d <= spread; ++d) {
    const double g = rrc_gain(static_cast<double>(d) * bin, rate, kRrcRolloff);
    cplx c{0.0, 0.0};
    if (g > 0.0) {
      const double w =
          -2.0 * std::numbers::pi * static_cast<double>(d) /
          static_cast<double>(slots);
      for (std::size_t k = 0; k < slots; ++k) {
        const cplx sym = points[symbols[k % symbols.size()]];
        const double ang = w * static_cast<double>(k);
        c += sym * cplx(std::cos(ang), std::sin(ang));
      }
      c *= g;
    }
    local[static_cast<std::size_t>(d + spread)] = c;
    sumsq += std::norm(c);
  }
  if (sumsq <= 0.0) return;  // all-zero symbol energy (e.g. BASK all zeros)
  const double scale =
      spec.amplitude * std::sqrt(static_cast<double>(n) / sumsq);
  for (long d = -spread; d <= spread; ++d) {
    const std::size_t idx = static_cast<std::size_t>(
        (carrier_bin + d + static_cast<long>(n)) % static_cast<long>(n));
    accum[idx] += gain * scale * local[static_cast<std::size_t>(d + spread)];
  }
}

TimeSeries modulate_nb(const EmitterSpec& spec, std::span<const int> symbols,
                       const SamplingGrid& grid) {
  std::vector<cplx> spectrum(grid.n_samples, cplx{0.0, 0.0});
  accumulate_emitter_spectrum(spec, symbols, grid, cplx{1.0, 0.0}, spectrum);
  const Fft& plan = fft_plan(grid.n_samples);
  plan.inverse(std::span<cplx>(spectrum));
  return TimeSeries{std::move(spectrum), grid.sample_rate_hz};
}

TimeSeries compose_scene(const WidebandScene& scene) {
  scene.validate();
  const SamplingGrid grid{scene.n_samples, scene.sample_rate_hz()};
  std::vector<cplx> spectrum(scene.n_samples, cplx{0.0, 0.0});
  for (const auto& e : scene.emitters) {
    const std::size_t slots = symbol_slots(e.symbol_rate_hz, grid);
    const auto symbols = draw_symbols(
        e.modulation, slots, mix_seed(scene.seed, emitter_fingerprint(e)));
    accumulate_emitter_spectrum(e, symbols, grid, e.channel_gain, spectrum);
  }
  const Fft& plan = fft_plan(scene.n_samples);
  plan.inverse(std::span<cplx>(spectrum));
  TimeSeries out{std::move(spectrum), grid.sample_rate_hz};
  if (scene.noise_psd > 0.0) {
    const double noise_power = scene.noise_psd * scene.sample_rate_hz();
    auto engine = make_engine(mix_seed(scene.seed, kNoiseStream));
    std::normal_distribution<double> dist(0.0, std::sqrt(0.5 * noise_power));
    for (auto& s : out.samples) s += cplx(dist(engine), dist(engine));
  }
  return out;
}

TimeSeries add_awgn(const TimeSeries& ts, double snr_db, std::uint64_t seed) {
  if (ts.samples.empty()) {
    throw std::invalid_argument("add_awgn: empty input");
  }
  if (std::isinf(snr_db) && snr_db > 0.0) return ts;
  const double p_signal = ts.mean_power();
  if (p_signal <= 0.0) {
    throw std::invalid_argument("add_awgn: zero-power input with finite SNR");
  }
  const double p_noise = p_signal / std::pow(10.0, snr_db / 10.0);
  TimeSeries out = ts;
  auto engine = make_engine(seed);
  std::normal_distribution<double> dist(0.0, std::sqrt(0.5 * p_noise));
  for (auto& s : out.samples) s += cplx(dist(engine), dist(engine));
  return out;
}

RateRange SceneConfig::rate_for(ModulationKind kind) const {
  for (const auto& [k, r] : per_modulation_rate) {
    if (k == kind) return r;
  }
  return symbol_rate;
}

WidebandScene random_scene(const SceneConfig& config, std::uint64_t seed) {
  if (config.pool.empty()) {
    throw std::runtime_error("random_scene: empty modulation pool");
  }
  if (config.n_emitters_min > config.n_emitters_max) {
    throw std::runtime_error("random_scene: emitter count range inverted");
  }
  auto engine = make_engine(mix_seed(seed, kSceneStream));

  WidebandScene scene;
  scene.band_upper_hz = config.band_upper_hz;
  scene.n_samples = config.n_samples;
  scene.seed = seed;

  std::uniform_int_distribution<std::size_t> count_dist(config.n_emitters_min,
                                                        config.n_emitters_max);
  const std::size_t n_emitters = count_dist(engine);

  const double bin = scene.bin_hz();
  // Keep at least 8 symbols per block so modulate_nb's contract holds.
  const double min_rate = 8.0 * bin;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, double>> taken;  // occupied bands w/ guard
  double occupied_bins = 0.0;

  for (std::size_t i = 0; i < n_emitters; ++i) {
    EmitterSpec e;
    if (config.sample_pool_uniform) {
      std::uniform_int_distribution<std::size_t> pick(0,
                                                      config.pool.size() - 1);
      e.modulation = config.pool[pick(engine)];
    } else {
      e.modulation = config.pool[i % config.pool.size()];
    }
    const RateRange range = config.rate_for(e.modulation);
    const double lo = std::max(range.lo_hz, min_rate);
    const double hi = std::max(range.hi_hz, lo);
    if (range.hi_hz < min_rate) {
      throw std::runtime_error(
          "random_scene: symbol-rate range below the 8-symbol minimum");
    }
    e.symbol_rate_hz = lo + (hi - lo) * unit(engine);
    e.amplitude =
        config.amplitude_lo +
        (config.amplitude_hi - config.amplitude_lo) * unit(engine);
    if (config.random_phase_gain) {
      const double ang = 2.0 * std::numbers::pi * unit(engine);
      e.channel_gain = cplx(std::cos(ang), std::sin(ang));
    }

    const double half_bw = 0.5 * (1.0 + kRrcRolloff) * e.symbol_rate_hz;
    const double lo_c = config.carrier_margin_hz + half_bw;
    const double hi_c = config.band_upper_hz - config.carrier_margin_hz -
                        half_bw;
    if (hi_c <= lo_c) {
      throw std::runtime_error("random_scene: band too narrow for emitter");
    }
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      e.carrier_hz = lo_c + (hi_c - lo_c) * unit(engine);
      if (config.allow_overlap) {
        placed = true;
        break;
      }
      const double a = e.occupied_lo_hz() - config.guard_hz;
      const double b = e.occupied_hi_hz() + config.guard_hz;
      placed = std::none_of(taken.begin(), taken.end(),
                            [&](const std::pair<double, double>& t) {
                              return a < t.second && t.first < b;
                            });
    }
    if (!placed) {
      throw std::runtime_error(
          "random_scene: could not place emitter without overlap");
    }
    taken.emplace_back(e.occupied_lo_hz(), e.occupied_hi_hz());
    occupied_bins += (1.0 + kRrcRolloff) * e.symbol_rate_hz / bin;
    if (occupied_bins > 0.3 * static_cast<double>(scene.n_samples)) {
      throw std::runtime_error("random_scene: sparsity cap exceeded");
    }
    scene.emitters.push_back(e);
  }
  scene.validate();
  return scene;
}

}  // namespace wbsc
