#include "wbsc/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wbsc {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json classifier_eval_to_json(const ClassifierEval& eval,
                             const std::vector<std::string>& classes) {
  json pc = json::object();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& ri = eval.per_class[c];
    pc[classes[c]] = {{"rate", ri.rate},
                      {"ci_lo", ri.lo},
                      {"ci_hi", ri.hi},
                      {"n", eval.confusion.row_total(c)}};
  }
  json rows = json::array();
  for (std::size_t t = 0; t < eval.confusion.n_classes; ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < eval.confusion.n_classes; ++p) {
      row.push_back(eval.confusion.at(t, p));
    }
    rows.push_back(row);
  }
  return {{"per_class", pc},
          {"confusion", rows},
          {"overall_accuracy", eval.confusion.overall_accuracy()}};
}

json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    if (n.is_leaf) {
      nodes.push_back({{"counts", n.class_counts}});
    } else {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right}});
    }
  }
  return {{"n_classes", tree.n_classes}, {"nodes", nodes}};
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree tree;
  tree.n_classes = j.at("n_classes").get<int>();
  for (const auto& nj : j.at("nodes")) {
    TreeNode node;
    if (nj.contains("counts")) {
      node.is_leaf = true;
      node.class_counts = nj.at("counts").get<std::vector<std::size_t>>();
    } else {
      node.is_leaf = false;
      node.feature = nj.at("feature").get<int>();
      node.threshold = nj.at("threshold").get<double>();
      node.left = nj.at("left").get<int>();
      node.right = nj.at("right").get<int>();
    }
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

}  // namespace

json scene_to_json(const WidebandScene& scene) {
  json emitters = json::array();
  for (const auto& e : scene.emitters) {
    emitters.push_back({{"modulation", to_string(e.modulation)},
                        {"carrier_hz", e.carrier_hz},
                        {"symbol_rate_hz", e.symbol_rate_hz},
                        {"amplitude", e.amplitude},
                        {"channel_gain",
                         {e.channel_gain.real(), e.channel_gain.imag()}}});
  }
  return {{"band_upper_hz", scene.band_upper_hz},
          {"n_samples", scene.n_samples},
          {"noise_psd", scene.noise_psd},
          {"seed", scene.seed},
          {"emitters", emitters}};
}

WidebandScene scene_from_json(const json& j) {
  WidebandScene scene;
  scene.band_upper_hz = j.at("band_upper_hz").get<double>();
  scene.n_samples = j.at("n_samples").get<std::size_t>();
  scene.noise_psd = j.value("noise_psd", 0.0);
  scene.seed = j.value("seed", std::uint64_t{0});
  for (const auto& ej : j.at("emitters")) {
    EmitterSpec e;
    const auto name = ej.at("modulation").get<std::string>();
    const auto kind = modulation_from_string(name);
    if (!kind) {
      throw std::invalid_argument("scene: unknown modulation " + name);
    }
    e.modulation = *kind;
    e.carrier_hz = ej.at("carrier_hz").get<double>();
    e.symbol_rate_hz = ej.at("symbol_rate_hz").get<double>();
    e.amplitude = ej.value("amplitude", 1.0);
    if (ej.contains("channel_gain")) {
      e.channel_gain = cplx(ej.at("channel_gain").at(0).get<double>(),
                            ej.at("channel_gain").at(1).get<double>());
    }
    scene.emitters.push_back(e);
  }
  scene.validate();
  return scene;
}

void save_iq(const TimeSeries& ts, const std::string& bin_path,
             const std::string& sidecar_path) {
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("save_iq: cannot open " + bin_path);
  for (const auto& s : ts.samples) {
    const double iq[2] = {s.real(), s.imag()};
    bin.write(reinterpret_cast<const char*>(iq), sizeof(iq));
  }
  if (!bin) throw std::runtime_error("save_iq: write failed " + bin_path);
  const json sidecar = {{"sample_rate_hz", ts.sample_rate_hz},
                        {"n_samples", ts.size()},
                        {"format", "f64le_iq"}};
  write_text_file(sidecar_path, sidecar.dump(2) + "\n");
}

TimeSeries load_iq(const std::string& bin_path,
                   const std::string& sidecar_path) {
  const json sidecar = json::parse(read_text_file(sidecar_path));
  TimeSeries ts;
  ts.sample_rate_hz = sidecar.at("sample_rate_hz").get<double>();
  const auto n = sidecar.at("n_samples").get<std::size_t>();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("load_iq: cannot open " + bin_path);
  ts.samples.resize(n);
  for (auto& s : ts.samples) {
    double iq[2];
    bin.read(reinterpret_cast<char*>(iq), sizeof(iq));
    if (!bin) throw std::runtime_error("load_iq: truncated " + bin_path);
    s = cplx(iq[0], iq[1]);
  }
  return ts;
}

void save_spectrum_csv(const SpectrumEstimate& est, const std::string& path) {
  std::ostringstream out;
  out << "bin_hz,re,im,magnitude\n";
  for (std::size_t i = 0; i < est.s_hat.size(); ++i) {
    const double f = static_cast<double>(i) * est.bin_hz;
    out << fmt_double(f) << ',' << fmt_double(est.s_hat[i].real()) << ','
        << fmt_double(est.s_hat[i].imag()) << ','
        << fmt_double(std::abs(est.s_hat[i])) << '\n';
  }
  write_text_file(path, out.str());
}

SpectrumEstimate load_spectrum_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_spectrum_csv: empty file " + path);
  }
  SpectrumEstimate est;
  double first_hz = 0.0;
  double second_hz = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double f = 0.0;
    double re = 0.0;
    double im = 0.0;
    double mag = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &f, &re, &im, &mag) < 3) {
      throw std::runtime_error("load_spectrum_csv: bad row: " + line);
    }
    if (est.s_hat.empty()) first_hz = f;
    if (est.s_hat.size() == 1) second_hz = f;
    est.s_hat.emplace_back(re, im);
  }
  if (est.s_hat.size() >= 2) est.bin_hz = second_hz - first_hz;
  return est;
}

json estimate_diagnostics(const SpectrumEstimate& est) {
  return {{"solver", to_string(est.solver)},
          {"iterations", est.iterations},
          {"converged", est.converged},
          {"residual_norm", est.residual_norm},
          {"n_bins", est.s_hat.size()},
          {"bin_hz", est.bin_hz}};
}

void save_features_csv(const std::vector<FeatureVector>& rows,
                       const std::string& path) {
  std::ostringstream out;
  out << "f_c_hz,bw_hz,a_max,e_t,label\n";
  for (const auto& row : rows) {
    out << fmt_double(row.f_c_hz) << ',' << fmt_double(row.bw_hz) << ','
        << fmt_double(row.a_max) << ',' << fmt_double(row.e_t) << ','
        << (row.label ? to_string(*row.label) : "") << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<FeatureVector> load_features_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_features_csv: empty file " + path);
  }
  std::vector<FeatureVector> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FeatureVector fv;
    std::istringstream row(line);
    std::string field;
    double* slots[4] = {&fv.f_c_hz, &fv.bw_hz, &fv.a_max, &fv.e_t};
    for (double* slot : slots) {
      if (!std::getline(row, field, ',')) {
        throw std::runtime_error("load_features_csv: bad row: " + line);
      }
      *slot = std::stod(field);
    }
    if (std::getline(row, field, ',') && !field.empty()) {
      const auto kind = modulation_from_string(field);
      if (!kind) {
        throw std::runtime_error("load_features_csv: unknown label " + field);
      }
      fv.label = kind;
    }
    rows.push_back(fv);
  }
  return rows;
}

json model_to_json(const TrainedModel& model) {
  json j = {{"format_version", 1},
            {"type", to_string(model.kind)},
            {"normalization",
             {{"mean", model.scaler.mean}, {"scale", model.scaler.scale}}}};
  if (model.kind == ClassifierKind::kForest) {
    json trees = json::array();
    for (const auto& tree : model.forest.trees) {
      trees.push_back(tree_to_json(tree));
    }
    j["classes"] = model.forest.classes;
    j["forest"] = {{"n_trees", model.forest.config.n_trees},
                   {"bootstrap", model.forest.config.bootstrap},
                   {"max_depth", model.forest.config.tree.max_depth},
                   {"min_leaf", model.forest.config.tree.min_leaf},
                   {"features_per_split",
                    model.forest.config.tree.features_per_split},
                   {"seed", model.forest.config.seed},
                   {"trees", trees}};
  } else {
    j["classes"] = model.nbc.classes;
    j["nbc"] = {{"dim", model.nbc.dim},
                {"log_prior", model.nbc.log_prior},
                {"mean", model.nbc.mean},
                {"variance", model.nbc.variance}};
  }
  return j;
}

TrainedModel model_from_json(const json& j) {
  if (j.at("format_version").get<int>() != 1) {
    throw std::runtime_error("model: unsupported format_version");
  }
  TrainedModel model;
  model.scaler.mean =
      j.at("normalization").at("mean").get<std::vector<double>>();
  model.scaler.scale =
      j.at("normalization").at("scale").get<std::vector<double>>();
  const auto type = j.at("type").get<std::string>();
  if (type == "rf") {
    model.kind = ClassifierKind::kForest;
    const auto& fj = j.at("forest");
    model.forest.classes = j.at("classes").get<std::vector<std::string>>();
    model.forest.config.n_trees = fj.at("n_trees").get<int>();
    model.forest.config.bootstrap = fj.at("bootstrap").get<bool>();
    model.forest.config.tree.max_depth = fj.at("max_depth").get<int>();
    model.forest.config.tree.min_leaf = fj.at("min_leaf").get<int>();
    model.forest.config.tree.features_per_split =
        fj.at("features_per_split").get<int>();
    model.forest.config.seed = fj.at("seed").get<std::uint64_t>();
    for (const auto& tj : fj.at("trees")) {
      model.forest.trees.push_back(tree_from_json(tj));
    }
  } else if (type == "nbc") {
    model.kind = ClassifierKind::kNaiveBayes;
    model.nbc.classes = j.at("classes").get<std::vector<std::string>>();
    const auto& nj = j.at("nbc");
    model.nbc.dim = nj.at("dim").get<std::size_t>();
    model.nbc.log_prior = nj.at("log_prior").get<std::vector<double>>();
    model.nbc.mean = nj.at("mean").get<std::vector<double>>();
    model.nbc.variance = nj.at("variance").get<std::vector<double>>();
  } else {
    throw std::runtime_error("model: unknown type " + type);
  }
  return model;
}

void save_model(const TrainedModel& model, const std::string& path) {
  write_text_file(path, model_to_json(model).dump(2) + "\n");
}

TrainedModel load_model(const std::string& path) {
  return model_from_json(json::parse(read_text_file(path)));
}

json experiment_to_json(const ExperimentConfig& config) {
  json rates = json::object();
  for (const auto& [kind, range] : config.scene.per_modulation_rate) {
    rates[to_string(kind)] = {range.lo_hz, range.hi_hz};
  }
  return {{"band_upper_hz", config.scene.band_upper_hz},
          {"n", config.scene.n_samples},
          {"n_emitters_min", config.scene.n_emitters_min},
          {"n_emitters_max", config.scene.n_emitters_max},
          {"amplitude", {config.scene.amplitude_lo, config.scene.amplitude_hi}},
          {"allow_overlap", config.scene.allow_overlap},
          {"guard_hz", config.scene.guard_hz},
          {"carrier_margin_hz", config.scene.carrier_margin_hz},
          {"symbol_rate_hz",
           {config.scene.symbol_rate.lo_hz, config.scene.symbol_rate.hi_hz}},
          {"per_modulation_rate_hz", rates},
          {"ratios", config.ratios},
          {"snrs_db", config.snrs_db},
          {"fixed_snr_db", config.fixed_snr_db},
          {"fixed_ratio", config.fixed_ratio},
          {"n_trials", config.n_trials},
          {"train_trials", config.train_trials},
          {"test_trials", config.test_trials},
          {"master_seed", config.master_seed},
          {"sensing", to_string(config.sensing)},
          {"solver", to_string(config.solver)},
          {"solver_tol", config.solver_opts.tol},
          {"solver_max_iter", config.solver_opts.max_iter},
          {"solver_lambda", config.solver_opts.lambda},
          {"omp_sparsity", config.solver_opts.omp_sparsity},
          {"classifier", to_string(config.classifier)},
          {"n_trees", config.forest.n_trees},
          {"max_depth", config.forest.tree.max_depth},
          {"min_leaf", config.forest.tree.min_leaf},
          {"features_per_split", config.forest.tree.features_per_split},
          {"threshold_factor", config.threshold_factor},
          {"min_gap_bins", config.min_gap_bins},
          {"normalize_a_max", config.feature_opts.normalize_a_max},
          {"pooled_training", config.pooled_training},
          {"jobs", config.jobs}};
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig config;
  config.scene.band_upper_hz =
      j.value("band_upper_hz", config.scene.band_upper_hz);
  config.scene.n_samples = j.value("n", config.scene.n_samples);
  config.scene.n_emitters_min =
      j.value("n_emitters_min", config.scene.n_emitters_min);
  config.scene.n_emitters_max =
      j.value("n_emitters_max", config.scene.n_emitters_max);
  if (j.contains("amplitude")) {
    config.scene.amplitude_lo = j.at("amplitude").at(0).get<double>();
    config.scene.amplitude_hi = j.at("amplitude").at(1).get<double>();
  }
  config.scene.allow_overlap =
      j.value("allow_overlap", config.scene.allow_overlap);
  config.scene.guard_hz = j.value("guard_hz", config.scene.guard_hz);
  config.scene.carrier_margin_hz =
      j.value("carrier_margin_hz", config.scene.carrier_margin_hz);
  if (j.contains("symbol_rate_hz")) {
    config.scene.symbol_rate.lo_hz =
        j.at("symbol_rate_hz").at(0).get<double>();
    config.scene.symbol_rate.hi_hz =
        j.at("symbol_rate_hz").at(1).get<double>();
  }
  if (j.contains("per_modulation_rate_hz")) {
    config.scene.per_modulation_rate.clear();
    for (const auto& [name, range] :
         j.at("per_modulation_rate_hz").items()) {
      const auto kind = modulation_from_string(name);
      if (!kind) {
        throw std::invalid_argument("config: unknown modulation " + name);
      }
      config.scene.per_modulation_rate.push_back(
          {*kind,
           {range.at(0).get<double>(), range.at(1).get<double>()}});
    }
  }
  config.ratios = j.value("ratios", config.ratios);
  config.snrs_db = j.value("snrs_db", config.snrs_db);
  config.fixed_snr_db = j.value("fixed_snr_db", config.fixed_snr_db);
  config.fixed_ratio = j.value("fixed_ratio", config.fixed_ratio);
  config.n_trials = j.value("n_trials", config.n_trials);
  config.train_trials = j.value("train_trials", config.train_trials);
  config.test_trials = j.value("test_trials", config.test_trials);
  config.master_seed = j.value("master_seed", config.master_seed);
  if (j.contains("sensing")) {
    const auto name = j.at("sensing").get<std::string>();
    if (name == "subsample") {
      config.sensing = SensingKind::kRandomSubsample;
    } else if (name == "bernoulli") {
      config.sensing = SensingKind::kBernoulli;
    } else {
      throw std::invalid_argument("config: unknown sensing kind " + name);
    }
  }
  if (j.contains("solver")) {
    const auto name = j.at("solver").get<std::string>();
    if (name == "bp") {
      config.solver = SolverKind::kBp;
    } else if (name == "lasso") {
      config.solver = SolverKind::kLasso;
    } else if (name == "omp") {
      config.solver = SolverKind::kOmp;
    } else {
      throw std::invalid_argument("config: unknown solver " + name);
    }
  }
  config.solver_opts.tol = j.value("solver_tol", config.solver_opts.tol);
  config.solver_opts.max_iter =
      j.value("solver_max_iter", config.solver_opts.max_iter);
  config.solver_opts.lambda =
      j.value("solver_lambda", config.solver_opts.lambda);
  config.solver_opts.omp_sparsity =
      j.value("omp_sparsity", config.solver_opts.omp_sparsity);
  if (j.contains("classifier")) {
    const auto name = j.at("classifier").get<std::string>();
    if (name == "rf") {
      config.classifier = ClassifierKind::kForest;
    } else if (name == "nbc") {
      config.classifier = ClassifierKind::kNaiveBayes;
    } else {
      throw std::invalid_argument("config: unknown classifier " + name);
    }
  }
  config.forest.n_trees = j.value("n_trees", config.forest.n_trees);
  config.forest.tree.max_depth =
      j.value("max_depth", config.forest.tree.max_depth);
  config.forest.tree.min_leaf =
      j.value("min_leaf", config.forest.tree.min_leaf);
  config.forest.tree.features_per_split =
      j.value("features_per_split", config.forest.tree.features_per_split);
  config.threshold_factor =
      j.value("threshold_factor", config.threshold_factor);
  config.min_gap_bins = j.value("min_gap_bins", config.min_gap_bins);
  config.feature_opts.normalize_a_max =
      j.value("normalize_a_max", config.feature_opts.normalize_a_max);
  config.pooled_training = j.value("pooled_training", config.pooled_training);
  config.jobs = j.value("jobs", config.jobs);
  config.validate();
  return config;
}

json report_to_json(const SweepReport& report) {
  json points = json::array();
  for (const auto& point : report.points) {
    points.push_back(
        {{"axis_value", point.axis_value},
         {"n_train_rows", point.n_train_rows},
         {"n_test_rows", point.n_test_rows},
         {"n_failed_trials", point.n_failed_trials},
         {"rf", classifier_eval_to_json(point.forest, report.classes)},
         {"nbc", classifier_eval_to_json(point.nbc, report.classes)}});
  }
  return {{"axis", report.axis_name},
          {"fixed_value", report.fixed_value},
          {"classes", report.classes},
          {"points", points},
          {"config", experiment_to_json(report.config)}};
}

void emit_report(const SweepReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(out_dir) / name).string();
  };
  write_text_file(path("report.json"), report_to_json(report).dump(2) + "\n");

  const ClassifierKind primary = report.config.classifier;
  std::ostringstream rates;
  rates << "axis_value,class,rate,ci_lo,ci_hi,n_test\n";
  for (const auto& point : report.points) {
    const auto& eval = point.eval(primary);
    for (std::size_t c = 0; c < report.classes.size(); ++c) {
      rates << fmt_double(point.axis_value) << ',' << report.classes[c] << ','
            << fmt_double(eval.per_class[c].rate) << ','
            << fmt_double(eval.per_class[c].lo) << ','
            << fmt_double(eval.per_class[c].hi) << ','
            << eval.confusion.row_total(c) << '\n';
    }
  }
  write_text_file(path("rates.csv"), rates.str());

  std::ostringstream long_rates;
  long_rates << "axis_value,classifier,class,rate,ci_lo,ci_hi,n_test\n";
  for (const auto& point : report.points) {
    for (const auto kind :
         {ClassifierKind::kForest, ClassifierKind::kNaiveBayes}) {
      const auto& eval = point.eval(kind);
      for (std::size_t c = 0; c < report.classes.size(); ++c) {
        long_rates << fmt_double(point.axis_value) << ',' << to_string(kind)
                   << ',' << report.classes[c] << ','
                   << fmt_double(eval.per_class[c].rate) << ','
                   << fmt_double(eval.per_class[c].lo) << ','
                   << fmt_double(eval.per_class[c].hi) << ','
                   << eval.confusion.row_total(c) << '\n';
      }
    }
  }
  write_text_file(path("rates_long.csv"), long_rates.str());

  const json timing = {{"trials_s", report.timing.trials_s},
                       {"train_s", report.timing.train_s},
                       {"eval_s", report.timing.eval_s}};
  write_text_file(path("timing.json"), timing.dump(2) + "\n");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace wbsc
