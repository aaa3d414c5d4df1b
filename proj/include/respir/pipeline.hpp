#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "respir/dbn.hpp"
#include "respir/emd.hpp"
#include "respir/error.hpp"
#include "respir/eval.hpp"
#include "respir/features.hpp"

namespace respir {

class PipelineError : public Error {
public:
    using Error::Error;
};

// Everything one end-to-end run needs. All fields have defaults; a JSON
// config file may set any subset and CLI flags override file values. The
// single top-level seed drives synthesis of folds and per-fold training
// (TrainConfig::seed is derived from it, never read from the file).
struct PipelineConfig {
    std::filesystem::path manifest;
    std::filesystem::path workdir = ".";
    double segment_seconds = 0.0;  // 0 = analyze each recording in full
    SiftConfig sift;
    FeatureSource feature_source = FeatureSource::Imf;
    TrainConfig train;
    std::vector<int> hidden_sizes = {160, 130};
    int k = 5;
    std::uint64_t seed = 0;
};

bool operator==(const PipelineConfig& a, const PipelineConfig& b);

nlohmann::json pipeline_config_to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Manifest -> decompositions -> per-IMF instances, with per-recording error
// context (stage, file, cause).
std::vector<FeatureInstance> instances_from_manifest(
    const PipelineConfig& config);

nlohmann::json make_report(const PipelineConfig& config, const CvResult& cv,
                           std::size_t instance_count);

// Fixed-width text table of the per-fold and pooled metrics in a report.
std::string render_report_text(const nlohmann::json& report);

struct PipelineResult {
    std::size_t instance_count = 0;
    CvResult cv;
    std::filesystem::path features_csv;
    std::filesystem::path report_path;
    std::vector<std::filesystem::path> model_paths;
};

// Full run: extract features, cross-validate, and write features.csv,
// model_fold_<i>.json, and report.json into the workdir. Identical config
// and seed give a byte-identical report.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace respir
