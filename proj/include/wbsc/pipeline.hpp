#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wbsc/features.hpp"
#include "wbsc/forest.hpp"
#include "wbsc/recovery.hpp"
#include "wbsc/scene.hpp"
#include "wbsc/sensing.hpp"

namespace wbsc {

enum class ClassifierKind { kForest, kNaiveBayes };

const char* to_string(ClassifierKind kind);

// Full receiver-chain Monte Carlo configuration. Defaults reproduce the
// benchmark setup: a [0,100] MHz band observed at 200 Msamples/s, four
// emitters per trial (one per modulation), basis-pursuit recovery and a
// random-forest classifier with a naive-Bayes baseline evaluated alongside.
struct ExperimentConfig {
  SceneConfig scene;
  std::vector<double> ratios{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> snrs_db{-6.0, -3.0, 0.0, 3.0, 6.0, 9.0};
  double fixed_snr_db = 5.0;  // compression sweep runs at this SNR
  double fixed_ratio = 0.5;   // SNR sweep runs at this compression
  std::size_t n_trials = 1500;
  std::size_t train_trials = 1200;
  std::size_t test_trials = 300;
  std::uint64_t master_seed = 1;
  SensingKind sensing = SensingKind::kRandomSubsample;
  SolverKind solver = SolverKind::kBp;
  // Feature extraction needs the spectrum shape, not solver-grade
  // precision, so the sweeps run BP at a loose feasibility tolerance.
  SolverOptions solver_opts{.lambda = -1.0,
                            .tol = 5e-3,
                            .max_iter = 600,
                            .omp_sparsity = 160};
  ClassifierKind classifier = ClassifierKind::kForest;
  ForestConfig forest;
  double threshold_factor = 5.5;
  std::size_t min_gap_bins = 4;
  FeatureOptions feature_opts;
  bool pooled_training = false;  // train once across axis points when true
  int jobs = 1;

  ExperimentConfig();
  void validate() const;
};

struct TrialResult {
  std::vector<FeatureVector> rows;  // labeled by ground-truth matching
  bool recovery_converged = true;
  std::size_t n_segments = 0;  // raw detections before matching
};

// One Monte Carlo iteration of the receiver chain: scene synthesis,
// AWGN, pre-filter, compressive acquisition at M = ceil(ratio*N), sparse
// recovery, PSD, segmentation, feature extraction and labeling.
TrialResult run_trial(const ExperimentConfig& config, double ratio,
                      double snr_db, std::uint64_t seed);

struct ClassifierEval {
  ConfusionMatrix confusion;
  std::vector<RateInterval> per_class;
};

struct AxisPointReport {
  double axis_value = 0.0;
  std::size_t n_train_rows = 0;
  std::size_t n_test_rows = 0;
  std::size_t n_failed_trials = 0;
  ClassifierEval forest;
  ClassifierEval nbc;

  const ClassifierEval& eval(ClassifierKind kind) const {
    return kind == ClassifierKind::kForest ? forest : nbc;
  }
};

struct StageTiming {
  double trials_s = 0.0;
  double train_s = 0.0;
  double eval_s = 0.0;
};

struct SweepReport {
  std::string axis_name;  // "compression_ratio" or "snr_db"
  double fixed_value = 0.0;
  std::vector<std::string> classes;
  std::vector<AxisPointReport> points;
  ExperimentConfig config;
  StageTiming timing;  // informational; not part of the stable output files
};

// Correct-classification rate versus M/N at the configured fixed SNR.
SweepReport sweep_compression(const ExperimentConfig& config);
// Correct-classification rate versus SNR at the configured fixed ratio.
SweepReport sweep_snr(const ExperimentConfig& config);

// Assembles a labeled Dataset from feature rows (unlabeled rows are
// skipped); class set is the full modulation ordering.
Dataset rows_to_dataset(const std::vector<FeatureVector>& rows);

struct TrainedModel {
  ClassifierKind kind = ClassifierKind::kForest;
  FeatureScaler scaler;
  ForestModel forest;
  NaiveBayesModel nbc;

  int predict(const FeatureVector& fv) const;
};

TrainedModel train_model(const Dataset& data, ClassifierKind kind,
                         const ForestConfig& forest_config,
                         std::uint64_t seed);

// Evaluates a trial list that was split into [0, train_trials) and
// [train_trials, n_trials); used by the sweeps and exposed for tests.
ClassifierEval evaluate_rows(const TrainedModel& model,
                             const std::vector<FeatureVector>& test_rows);

}  // namespace wbsc
