// wbsc: wide-band spectrum classification toolkit CLI.
//
// Subcommands cover the individual pipeline stages (synth, recover,
// features, train, eval) and the Monte Carlo sweeps (sweep-compression,
// sweep-snr). Errors are reported as a JSON object on stderr with a
// nonzero exit code.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wbsc/io.hpp"
#include "wbsc/pipeline.hpp"
#include "wbsc/rng.hpp"

namespace fs = std::filesystem;
using wbsc::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string solver;
  std::string classifier;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config JSON");
  cmd->add_option("--out-dir", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "master seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--solver", opts.solver, "bp|lasso|omp")
      ->check(CLI::IsMember({"bp", "lasso", "omp"}));
  cmd->add_option("--classifier", opts.classifier, "rf|nbc")
      ->check(CLI::IsMember({"rf", "nbc"}));
  cmd->add_option("--jobs", opts.jobs, "worker threads");
}

wbsc::ExperimentConfig load_config(const CommonOpts& opts) {
  wbsc::ExperimentConfig config;
  if (!opts.config_path.empty()) {
    config = wbsc::experiment_from_json(
        json::parse(wbsc::read_text_file(opts.config_path)));
  }
  if (opts.seed_set) config.master_seed = opts.seed;
  if (!opts.solver.empty()) {
    config.solver = opts.solver == "bp"      ? wbsc::SolverKind::kBp
                    : opts.solver == "lasso" ? wbsc::SolverKind::kLasso
                                             : wbsc::SolverKind::kOmp;
  }
  if (!opts.classifier.empty()) {
    config.classifier = opts.classifier == "rf"
                            ? wbsc::ClassifierKind::kForest
                            : wbsc::ClassifierKind::kNaiveBayes;
  }
  if (opts.jobs > 0) config.jobs = opts.jobs;
  return config;
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  return (fs::path(opts.out_dir) / name).string();
}

int cmd_synth(const CommonOpts& opts, double snr_db) {
  const auto config = load_config(opts);
  const auto scene = wbsc::random_scene(config.scene, config.master_seed);
  wbsc::TimeSeries ts = wbsc::compose_scene(scene);
  if (std::isfinite(snr_db)) {
    ts = wbsc::add_awgn(ts, snr_db,
                        wbsc::mix_seed(config.master_seed, 0xA2));
  }
  wbsc::write_text_file(out_path(opts, "scene.json"),
                        wbsc::scene_to_json(scene).dump(2) + "\n");
  wbsc::save_iq(ts, out_path(opts, "iq.bin"), out_path(opts, "iq.json"));
  std::cout << "wrote scene.json, iq.bin, iq.json to " << opts.out_dir
            << "\n";
  return 0;
}

int cmd_recover(const CommonOpts& opts, const std::string& iq_path,
                const std::string& sidecar_path, double ratio,
                const std::string& sensing_name, bool no_prefilter) {
  const auto config = load_config(opts);
  wbsc::TimeSeries ts = wbsc::load_iq(iq_path, sidecar_path);
  if (!no_prefilter) {
    ts = wbsc::prefilter(ts, 0.0, 0.5 * ts.sample_rate_hz);
  }
  const std::size_t n = ts.size();
  const auto m = static_cast<std::size_t>(
      std::max(1.0, std::ceil(ratio * static_cast<double>(n))));
  const auto kind = sensing_name == "bernoulli"
                        ? wbsc::SensingKind::kBernoulli
                        : wbsc::SensingKind::kRandomSubsample;
  const auto sensing = wbsc::SensingMatrix::build(
      m, n, kind, wbsc::mix_seed(config.master_seed, 0xA3));
  auto rec = wbsc::acquire(sensing, ts);
  const wbsc::RecoveryOperator op(rec.sensing);
  const auto est = wbsc::solve(config.solver, rec, op, config.solver_opts);
  wbsc::save_spectrum_csv(est, out_path(opts, "spectrum.csv"));
  wbsc::write_text_file(out_path(opts, "diagnostics.json"),
                        wbsc::estimate_diagnostics(est).dump(2) + "\n");
  std::cout << wbsc::estimate_diagnostics(est).dump() << "\n";
  return 0;
}

int cmd_features(const CommonOpts& opts, const std::string& spectrum_path,
                 const std::string& scene_path) {
  const auto config = load_config(opts);
  const auto est = wbsc::load_spectrum_csv(spectrum_path);
  const auto psd = wbsc::estimate_psd(est);
  const auto segments = wbsc::detect_segments(psd, config.threshold_factor,
                                              config.min_gap_bins);
  std::vector<wbsc::FeatureVector> rows;
  for (const auto& seg : segments) {
    rows.push_back(wbsc::extract_features(psd, seg, config.feature_opts));
  }
  if (!scene_path.empty()) {
    const auto scene = wbsc::scene_from_json(
        json::parse(wbsc::read_text_file(scene_path)));
    rows = wbsc::label_features(rows, scene);
  }
  wbsc::save_features_csv(rows, out_path(opts, "features.csv"));
  std::cout << "wrote " << rows.size() << " feature rows\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& data_path) {
  const auto config = load_config(opts);
  const auto rows = wbsc::load_features_csv(data_path);
  const auto data = wbsc::rows_to_dataset(rows);
  if (data.n() == 0) {
    throw std::runtime_error("train: no labeled rows in " + data_path);
  }
  const auto model = wbsc::train_model(
      data, config.classifier, config.forest,
      wbsc::mix_seed(config.master_seed, 0x7261696eULL));
  wbsc::save_model(model, out_path(opts, "model.json"));
  std::cout << "trained " << to_string(config.classifier) << " on "
            << data.n() << " rows\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& model_path,
             const std::string& data_path) {
  const auto model = wbsc::load_model(model_path);
  const auto rows = wbsc::load_features_csv(data_path);
  const auto eval = wbsc::evaluate_rows(model, rows);
  json per_class = json::object();
  const auto& classes =
      model.kind == wbsc::ClassifierKind::kForest ? model.forest.classes
                                                  : model.nbc.classes;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    per_class[classes[c]] = {{"rate", eval.per_class[c].rate},
                             {"ci_lo", eval.per_class[c].lo},
                             {"ci_hi", eval.per_class[c].hi},
                             {"n", eval.confusion.row_total(c)}};
  }
  json confusion = json::array();
  for (std::size_t t = 0; t < eval.confusion.n_classes; ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < eval.confusion.n_classes; ++p) {
      row.push_back(eval.confusion.at(t, p));
    }
    confusion.push_back(row);
  }
  const json out = {{"per_class", per_class},
                    {"confusion", confusion},
                    {"overall_accuracy", eval.confusion.overall_accuracy()}};
  wbsc::write_text_file(out_path(opts, "metrics.json"), out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const CommonOpts& opts, bool compression) {
  auto config = load_config(opts);
  const auto report =
      compression ? wbsc::sweep_compression(config) : wbsc::sweep_snr(config);
  wbsc::emit_report(report, opts.out_dir);
  for (const auto& point : report.points) {
    std::cout << report.axis_name << "=" << point.axis_value;
    const auto& eval = point.eval(config.classifier);
    for (std::size_t c = 0; c < report.classes.size(); ++c) {
      std::cout << "  " << report.classes[c] << "="
                << eval.per_class[c].rate;
    }
    std::cout << "\n";
  }
  std::cout << "report written to " << opts.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wide-band spectrum classification toolkit"};
  app.require_subcommand(1);

  CommonOpts synth_opts;
  double synth_snr = std::numeric_limits<double>::infinity();
  auto* synth = app.add_subcommand("synth", "generate a random scene + IQ");
  add_common(synth, synth_opts);
  synth->add_option("--snr-db", synth_snr, "AWGN level (default: noiseless)");

  CommonOpts rec_opts;
  std::string rec_iq = "out/iq.bin";
  std::string rec_sidecar = "out/iq.json";
  double rec_ratio = 0.5;
  std::string rec_sensing = "subsample";
  bool rec_no_prefilter = false;
  auto* recover =
      app.add_subcommand("recover", "compressive acquisition + recovery");
  add_common(recover, rec_opts);
  recover->add_option("--iq", rec_iq, "input IQ binary");
  recover->add_option("--sidecar", rec_sidecar, "input IQ sidecar JSON");
  recover->add_option("--ratio", rec_ratio, "compression ratio M/N")
      ->check(CLI::Range(0.0, 1.0));
  recover->add_option("--sensing", rec_sensing, "subsample|bernoulli")
      ->check(CLI::IsMember({"subsample", "bernoulli"}));
  recover->add_flag("--no-prefilter", rec_no_prefilter,
                    "skip the noise pre-filter");

  CommonOpts feat_opts;
  std::string feat_spectrum = "out/spectrum.csv";
  std::string feat_scene;
  auto* features =
      app.add_subcommand("features", "segment a spectrum and extract features");
  add_common(features, feat_opts);
  features->add_option("--spectrum", feat_spectrum, "input spectrum CSV");
  features->add_option("--scene", feat_scene,
                       "scene JSON for ground-truth labels");

  CommonOpts train_opts;
  std::string train_data = "out/features.csv";
  auto* train = app.add_subcommand("train", "train a classifier");
  add_common(train, train_opts);
  train->add_option("--data", train_data, "labeled features CSV");

  CommonOpts eval_opts;
  std::string eval_model = "out/model.json";
  std::string eval_data = "out/features.csv";
  auto* eval = app.add_subcommand("eval", "evaluate a trained model");
  add_common(eval, eval_opts);
  eval->add_option("--model", eval_model, "model JSON");
  eval->add_option("--data", eval_data, "labeled features CSV");

  CommonOpts sc_opts;
  auto* sweep_c = app.add_subcommand(
      "sweep-compression", "classification rate vs compression ratio");
  add_common(sweep_c, sc_opts);

  CommonOpts ss_opts;
  auto* sweep_s =
      app.add_subcommand("sweep-snr", "classification rate vs SNR");
  add_common(sweep_s, ss_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_opts, synth_snr);
    if (recover->parsed()) {
      return cmd_recover(rec_opts, rec_iq, rec_sidecar, rec_ratio,
                         rec_sensing, rec_no_prefilter);
    }
    if (features->parsed()) {
      return cmd_features(feat_opts, feat_spectrum, feat_scene);
    }
    if (train->parsed()) return cmd_train(train_opts, train_data);
    if (eval->parsed()) return cmd_eval(eval_opts, eval_model, eval_data);
    if (sweep_c->parsed()) return cmd_sweep(sc_opts, true);
    if (sweep_s->parsed()) return cmd_sweep(ss_opts, false);
  } catch (const std::exception& e) {
    const json err = {{"error", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
