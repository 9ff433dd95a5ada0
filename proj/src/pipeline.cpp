#include "wbsc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "wbsc/rng.hpp"

namespace wbsc {

namespace {

constexpr std::uint64_t kSceneTag = 0xA1;
constexpr std::uint64_t kNoiseTag = 0xA2;
constexpr std::uint64_t kSensingTag = 0xA3;
constexpr std::uint64_t kTrainTag = 0x7261696eULL;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mu;
  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) break;
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!failed.exchange(true)) error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(jobs, static_cast<int>(count));
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failed.load()) throw std::runtime_error(error);
}

}  // namespace

const char* to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kForest:
      return "rf";
    case ClassifierKind::kNaiveBayes:
      return "nbc";
  }
  return "?";
}

ExperimentConfig::ExperimentConfig() {
  scene.band_upper_hz = 100e6;
  scene.n_samples = 4096;
  scene.n_emitters_min = 4;
  scene.n_emitters_max = 4;
  scene.amplitude_lo = 0.5;
  scene.amplitude_hi = 1.5;
  scene.allow_overlap = false;
  scene.guard_hz = 1e6;
  scene.carrier_margin_hz = 3e6;
  // Symbol-rate ranges per modulation; neighbouring classes overlap so the
  // bandwidth feature is informative but not a giveaway. BASK and BPSK
  // share a range and are separated by the carrier-line peak instead.
  scene.per_modulation_rate = {
      {ModulationKind::kBask, {1.4e6, 2.6e6}},
      {ModulationKind::kBpsk, {1.4e6, 2.6e6}},
      {ModulationKind::kQpsk, {1.0e6, 1.8e6}},
      {ModulationKind::kQam32, {0.8e6, 1.3e6}},
  };
}

void ExperimentConfig::validate() const {
  if (train_trials + test_trials != n_trials) {
    throw std::invalid_argument(
        "config: train_trials + test_trials must equal n_trials");
  }
  if (train_trials == 0 || test_trials == 0) {
    throw std::invalid_argument("config: empty train or test split");
  }
  for (double r : ratios) {
    if (r < 0.5 || r > 1.0) {
      throw std::invalid_argument("config: ratios must lie in [0.5, 1.0]");
    }
  }
  if (fixed_ratio < 0.5 || fixed_ratio > 1.0) {
    throw std::invalid_argument("config: fixed_ratio must lie in [0.5, 1.0]");
  }
  if (threshold_factor <= 1.0) {
    throw std::invalid_argument("config: threshold_factor must be > 1");
  }
  if (jobs < 1) {
    throw std::invalid_argument("config: jobs must be >= 1");
  }
}

TrialResult run_trial(const ExperimentConfig& config, double ratio,
                      double snr_db, std::uint64_t seed) {
  const WidebandScene scene =
      random_scene(config.scene, mix_seed(seed, kSceneTag));
  TimeSeries ts = compose_scene(scene);
  if (std::isfinite(snr_db)) {
    ts = add_awgn(ts, snr_db, mix_seed(seed, kNoiseTag));
  }
  ts = prefilter(ts, 0.0, scene.band_upper_hz);

  const auto n = scene.n_samples;
  const auto m = static_cast<std::size_t>(std::min<double>(
      static_cast<double>(n),
      std::max(1.0, std::ceil(ratio * static_cast<double>(n)))));
  const SensingMatrix sensing =
      SensingMatrix::build(m, n, config.sensing, mix_seed(seed, kSensingTag));
  MeasurementRecord rec = acquire(sensing, ts);
  rec.snr_db = snr_db;

  const RecoveryOperator op(rec.sensing);
  const SpectrumEstimate est = solve(config.solver, rec, op, config.solver_opts);

  const PsdEstimate psd = estimate_psd(est);
  const auto segments =
      detect_segments(psd, config.threshold_factor, config.min_gap_bins);
  std::vector<FeatureVector> features;
  features.reserve(segments.size());
  for (const auto& seg : segments) {
    features.push_back(extract_features(psd, seg, config.feature_opts));
  }
  TrialResult result;
  result.rows = label_features(features, scene);
  result.recovery_converged = est.converged;
  result.n_segments = segments.size();
  return result;
}

Dataset rows_to_dataset(const std::vector<FeatureVector>& rows) {
  Dataset data;
  data.dim = 4;
  data.classes = {"BASK", "BPSK", "QPSK", "QAM32"};
  for (const auto& row : rows) {
    if (!row.label) continue;
    const double features[4] = {row.f_c_hz, row.bw_hz, row.a_max, row.e_t};
    data.push_row(std::span<const double>(features, 4),
                  static_cast<int>(*row.label));
  }
  return data;
}

int TrainedModel::predict(const FeatureVector& fv) const {
  const double raw[4] = {fv.f_c_hz, fv.bw_hz, fv.a_max, fv.e_t};
  const auto scaled = scaler.apply(std::span<const double>(raw, 4));
  return kind == ClassifierKind::kForest ? forest.predict(scaled)
                                         : nbc.predict(scaled);
}

TrainedModel train_model(const Dataset& data, ClassifierKind kind,
                         const ForestConfig& forest_config,
                         std::uint64_t seed) {
  TrainedModel model;
  model.kind = kind;
  model.scaler = FeatureScaler::fit(data);
  const Dataset scaled = model.scaler.apply(data);
  if (kind == ClassifierKind::kForest) {
    model.forest = train_forest(scaled, forest_config, seed);
  } else {
    model.nbc = train_nbc(scaled);
  }
  return model;
}

ClassifierEval evaluate_rows(const TrainedModel& model,
                             const std::vector<FeatureVector>& test_rows) {
  std::vector<int> truth;
  std::vector<int> pred;
  for (const auto& row : test_rows) {
    if (!row.label) continue;
    truth.push_back(static_cast<int>(*row.label));
    pred.push_back(model.predict(row));
  }
  ClassifierEval eval;
  eval.confusion = confusion_matrix(truth, pred, kNumModulations);
  for (std::size_t c = 0; c < eval.confusion.n_classes; ++c) {
    eval.per_class.push_back(wilson_interval(eval.confusion.at(c, c),
                                             eval.confusion.row_total(c)));
  }
  return eval;
}

namespace {

struct PointTrials {
  double axis_value = 0.0;
  std::vector<TrialResult> trials;
};

void check_class_representation(const Dataset& data, double axis_value) {
  std::vector<std::size_t> counts(data.classes.size(), 0);
  for (int label : data.y) ++counts[static_cast<std::size_t>(label)];
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 2) {
      throw std::runtime_error(
          "sweep: class " + data.classes[c] +
          " has fewer than 2 training rows at axis point " +
          std::to_string(axis_value));
    }
  }
}

SweepReport run_sweep(const ExperimentConfig& config, bool ratio_axis) {
  config.validate();
  SweepReport report;
  report.axis_name = ratio_axis ? "compression_ratio" : "snr_db";
  report.fixed_value = ratio_axis ? config.fixed_snr_db : config.fixed_ratio;
  report.classes = {"BASK", "BPSK", "QPSK", "QAM32"};
  report.config = config;

  const std::vector<double>& axis =
      ratio_axis ? config.ratios : config.snrs_db;

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PointTrials> points(axis.size());
  for (std::size_t p = 0; p < axis.size(); ++p) {
    points[p].axis_value = axis[p];
    points[p].trials.resize(config.n_trials);
    const double ratio = ratio_axis ? axis[p] : config.fixed_ratio;
    const double snr = ratio_axis ? config.fixed_snr_db : axis[p];
    parallel_for(config.n_trials, config.jobs, [&](std::size_t t) {
      const std::uint64_t seed =
          trial_seed(config.master_seed, axis[p], t);
      points[p].trials[t] = run_trial(config, ratio, snr, seed);
    });
  }
  report.timing.trials_s = seconds_since(t0);

  // Optionally pool the training rows across axis points.
  std::vector<FeatureVector> pooled_train;
  if (config.pooled_training) {
    for (const auto& point : points) {
      for (std::size_t t = 0; t < config.train_trials; ++t) {
        const auto& trial = point.trials[t];
        if (!trial.recovery_converged) continue;
        pooled_train.insert(pooled_train.end(), trial.rows.begin(),
                            trial.rows.end());
      }
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  std::vector<TrainedModel> forest_models(points.size());
  std::vector<TrainedModel> nbc_models(points.size());
  TrainedModel pooled_forest;
  TrainedModel pooled_nbc;
  if (config.pooled_training) {
    const Dataset data = rows_to_dataset(pooled_train);
    check_class_representation(data, axis.empty() ? 0.0 : axis.front());
    const std::uint64_t seed =
        mix_seed(config.master_seed, kTrainTag);
    pooled_forest = train_model(data, ClassifierKind::kForest, config.forest,
                                seed);
    pooled_nbc = train_model(data, ClassifierKind::kNaiveBayes, config.forest,
                             seed);
  } else {
    for (std::size_t p = 0; p < points.size(); ++p) {
      std::vector<FeatureVector> train_rows;
      for (std::size_t t = 0; t < config.train_trials; ++t) {
        const auto& trial = points[p].trials[t];
        if (!trial.recovery_converged) continue;  // flagged, not trained on
        train_rows.insert(train_rows.end(), trial.rows.begin(),
                          trial.rows.end());
      }
      const Dataset data = rows_to_dataset(train_rows);
      check_class_representation(data, points[p].axis_value);
      const std::uint64_t seed = mix_seed(
          trial_seed(config.master_seed, points[p].axis_value, config.n_trials),
          kTrainTag);
      forest_models[p] =
          train_model(data, ClassifierKind::kForest, config.forest, seed);
      nbc_models[p] =
          train_model(data, ClassifierKind::kNaiveBayes, config.forest, seed);
    }
  }
  report.timing.train_s = seconds_since(t1);

  const auto t2 = std::chrono::steady_clock::now();
  for (std::size_t p = 0; p < points.size(); ++p) {
    AxisPointReport point;
    point.axis_value = points[p].axis_value;
    std::vector<FeatureVector> test_rows;
    for (std::size_t t = 0; t < config.n_trials; ++t) {
      const auto& trial = points[p].trials[t];
      if (!trial.recovery_converged) ++point.n_failed_trials;
      if (t < config.train_trials) {
        if (trial.recovery_converged) point.n_train_rows += trial.rows.size();
      } else {
        test_rows.insert(test_rows.end(), trial.rows.begin(),
                         trial.rows.end());
      }
    }
    point.n_test_rows = test_rows.size();
    const TrainedModel& fm =
        config.pooled_training ? pooled_forest : forest_models[p];
    const TrainedModel& nm = config.pooled_training ? pooled_nbc : nbc_models[p];
    point.forest = evaluate_rows(fm, test_rows);
    point.nbc = evaluate_rows(nm, test_rows);
    report.points.push_back(std::move(point));
  }
  report.timing.eval_s = seconds_since(t2);
  return report;
}

}  // namespace

SweepReport sweep_compression(const ExperimentConfig& config) {
  return run_sweep(config, true);
}

SweepReport sweep_snr(const ExperimentConfig& config) {
  return run_sweep(config, false);
}

}  // namespace wbsc
