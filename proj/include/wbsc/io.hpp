#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wbsc/features.hpp"
#include "wbsc/forest.hpp"
#include "wbsc/pipeline.hpp"
#include "wbsc/recovery.hpp"
#include "wbsc/scene.hpp"

namespace wbsc {

using json = nlohmann::json;

// ---- scenes ----
json scene_to_json(const WidebandScene& scene);
WidebandScene scene_from_json(const json& j);

// ---- time series: interleaved little-endian float64 I/Q + JSON sidecar ----
void save_iq(const TimeSeries& ts, const std::string& bin_path,
             const std::string& sidecar_path);
TimeSeries load_iq(const std::string& bin_path,
                   const std::string& sidecar_path);

// ---- spectra ----
void save_spectrum_csv(const SpectrumEstimate& est, const std::string& path);
SpectrumEstimate load_spectrum_csv(const std::string& path);
json estimate_diagnostics(const SpectrumEstimate& est);

// ---- feature datasets (CSV: f_c_hz,bw_hz,a_max,e_t,label) ----
void save_features_csv(const std::vector<FeatureVector>& rows,
                       const std::string& path);
std::vector<FeatureVector> load_features_csv(const std::string& path);

// ---- trained models (versioned JSON) ----
json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const json& j);
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

// ---- experiment configs ----
json experiment_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_from_json(const json& j);

// ---- sweep reports ----
json report_to_json(const SweepReport& report);  // excludes timing
// Writes report.json, rates.csv (primary classifier), rates_long.csv
// (both classifiers) and timing.json under out_dir. Everything except
// timing.json is byte-stable for identical reports.
void emit_report(const SweepReport& report, const std::string& out_dir);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace wbsc
