#include "respir/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <utility>

#include "respir/manifest.hpp"
#include "respir/wav.hpp"

namespace respir {

using nlohmann::json;

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
    return a.manifest == b.manifest && a.workdir == b.workdir &&
           a.segment_seconds == b.segment_seconds &&
           a.sift.sd_threshold == b.sift.sd_threshold &&
           a.sift.max_sift_iterations == b.sift.max_sift_iterations &&
           a.sift.max_imfs == b.sift.max_imfs &&
           a.sift.boundary == b.sift.boundary &&
           a.sift.max_energy_ratio_db == b.sift.max_energy_ratio_db &&
           a.feature_source == b.feature_source &&
           a.train.learning_rate == b.train.learning_rate &&
           a.train.fine_tune_epochs == b.train.fine_tune_epochs &&
           a.train.pretrain_epochs == b.train.pretrain_epochs &&
           a.train.cd_steps == b.train.cd_steps &&
           a.train.batch_size == b.train.batch_size &&
           a.train.weight_init_std == b.train.weight_init_std &&
           a.train.loss == b.train.loss && a.hidden_sizes == b.hidden_sizes &&
           a.k == b.k && a.seed == b.seed;
}

json pipeline_config_to_json(const PipelineConfig& c) {
    json j;
    j["manifest"] = c.manifest.string();
    j["workdir"] = c.workdir.string();
    j["segment_seconds"] = c.segment_seconds;
    j["sift"] = {{"sd_threshold", c.sift.sd_threshold},
                 {"max_sift_iterations", c.sift.max_sift_iterations},
                 {"max_imfs", c.sift.max_imfs},
                 {"boundary", "mirror"},
                 {"max_energy_ratio_db", c.sift.max_energy_ratio_db}};
    j["feature_source"] =
        c.feature_source == FeatureSource::Imf ? "imf" : "envelope";
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"fine_tune_epochs", c.train.fine_tune_epochs},
                  {"pretrain_epochs", c.train.pretrain_epochs},
                  {"cd_steps", c.train.cd_steps},
                  {"batch_size", c.train.batch_size},
                  {"weight_init_std", c.train.weight_init_std},
                  {"loss", c.train.loss == Loss::SigmoidMse
                               ? "sigmoid_mse"
                               : "softmax_cross_entropy"}};
    j["hidden_sizes"] = c.hidden_sizes;
    j["k"] = c.k;
    j["seed"] = c.seed;
    return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
    PipelineConfig c;
    try {
        c.manifest = j.value("manifest", std::string());
        c.workdir = j.value("workdir", std::string("."));
        c.segment_seconds = j.value("segment_seconds", 0.0);
        if (j.contains("sift")) {
            const json& s = j.at("sift");
            c.sift.sd_threshold = s.value("sd_threshold", c.sift.sd_threshold);
            c.sift.max_sift_iterations =
                s.value("max_sift_iterations", c.sift.max_sift_iterations);
            c.sift.max_imfs = s.value("max_imfs", c.sift.max_imfs);
            const std::string boundary = s.value("boundary", "mirror");
            if (boundary != "mirror") {
                throw PipelineError("unknown boundary mode: " + boundary);
            }
            c.sift.max_energy_ratio_db =
                s.value("max_energy_ratio_db", c.sift.max_energy_ratio_db);
        }
        const std::string fs = j.value("feature_source", "imf");
        if (fs == "imf") {
            c.feature_source = FeatureSource::Imf;
        } else if (fs == "envelope") {
            c.feature_source = FeatureSource::Envelope;
        } else {
            throw PipelineError("unknown feature_source: " + fs);
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            c.train.learning_rate =
                t.value("learning_rate", c.train.learning_rate);
            c.train.fine_tune_epochs =
                t.value("fine_tune_epochs", c.train.fine_tune_epochs);
            c.train.pretrain_epochs =
                t.value("pretrain_epochs", c.train.pretrain_epochs);
            c.train.cd_steps = t.value("cd_steps", c.train.cd_steps);
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            c.train.weight_init_std =
                t.value("weight_init_std", c.train.weight_init_std);
            const std::string loss = t.value("loss", "sigmoid_mse");
            if (loss == "sigmoid_mse") {
                c.train.loss = Loss::SigmoidMse;
            } else if (loss == "softmax_cross_entropy") {
                c.train.loss = Loss::SoftmaxCrossEntropy;
            } else {
                throw PipelineError("unknown loss: " + loss);
            }
        }
        c.hidden_sizes = j.value("hidden_sizes", c.hidden_sizes);
        c.k = j.value("k", c.k);
        c.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw PipelineError(std::string("bad config: ") + e.what());
    }
    if (c.hidden_sizes.empty()) {
        throw PipelineError("hidden_sizes must not be empty");
    }
    for (int s : c.hidden_sizes) {
        if (s < 1) throw PipelineError("hidden sizes must be positive");
    }
    return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PipelineError("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw PipelineError("config " + path.string() +
                            " is not valid JSON: " + e.what());
    }
    return pipeline_config_from_json(j);
}

namespace {

[[noreturn]] void stage_fail(const std::string& stage, const std::string& file,
                             const Error& cause) {
    std::string msg = "stage " + stage;
    if (!file.empty()) msg += " (" + file + ")";
    throw PipelineError(msg + ": " + cause.what(), cause.is_user_input());
}

}  // namespace

std::vector<FeatureInstance> instances_from_manifest(
    const PipelineConfig& config) {
    RecordingManifest manifest;
    try {
        manifest = load_manifest(config.manifest);
    } catch (const Error& e) {
        stage_fail("manifest", config.manifest.string(), e);
    }
    std::vector<FeatureInstance> instances;
    for (const ManifestEntry& entry : manifest.entries) {
        const std::filesystem::path path =
            resolve_entry_path(config.manifest, entry);
        Signal signal;
        try {
            signal = read_wav(path);
        } catch (const Error& e) {
            stage_fail("read", path.string(), e);
        }
        signal.subject_id = entry.subject;
        signal.channel = entry.channel;
        try {
            if (config.segment_seconds > 0.0) {
                signal = segment(signal, config.segment_seconds);
            }
            const Decomposition dec = decompose(signal, config.sift);
            auto extracted = extract_instances(dec, signal, entry.subject,
                                               entry.label,
                                               config.feature_source);
            for (auto& inst : extracted) {
                instances.push_back(std::move(inst));
            }
        } catch (const Error& e) {
            stage_fail("decompose", path.string(), e);
        }
    }
    if (instances.empty()) {
        throw PipelineError(
            "no usable instances: every recording decomposed into fewer than "
            "2 IMFs");
    }
    return instances;
}

namespace {

json cm_to_json(const ConfusionMatrix& cm) {
    return json{{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}};
}

json metrics_to_json(const Metrics& m) {
    json j = json::object();
    if (m.accuracy) j["accuracy"] = *m.accuracy;
    if (m.sensitivity) j["sensitivity"] = *m.sensitivity;
    if (m.specificity) j["specificity"] = *m.specificity;
    return j;
}

}  // namespace

json make_report(const PipelineConfig& config, const CvResult& cv,
                 std::size_t instance_count) {
    json report;
    report["config"] = pipeline_config_to_json(config);
    report["instance_count"] = instance_count;
    json plan;
    plan["k"] = cv.plan.k;
    plan["seed"] = cv.plan.seed;
    plan["assignments"] = cv.plan.assignments;
    plan["warnings"] = cv.plan.warnings;
    report["fold_plan"] = std::move(plan);
    json folds = json::array();
    for (const FoldResult& fr : cv.folds) {
        folds.push_back(json{{"fold", fr.fold},
                             {"cm", cm_to_json(fr.cm)},
                             {"metrics", metrics_to_json(fr.metrics)}});
    }
    report["folds"] = std::move(folds);
    report["pooled"] = json{
        {"cm", cm_to_json(cv.pooled_cm)},
        {"metrics", metrics_to_json(cv.pooled)},
        {"metrics_alt_convention", metrics_to_json(cv.pooled_alt)}};
    return report;
}

std::string render_report_text(const json& report) {
    auto cell = [](const json& metrics, const char* key) {
        char buf[16];
        if (metrics.contains(key)) {
            std::snprintf(buf, sizeof(buf), "%8.4f",
                          metrics.at(key).get<double>());
        } else {
            std::snprintf(buf, sizeof(buf), "%8s", "-");
        }
        return std::string(buf);
    };
    std::string out =
        "  fold  sensitivity  specificity  accuracy      tp    fn    fp    tn\n";
    auto row = [&](const std::string& name, const json& entry) {
        const json& m = entry.at("metrics");
        const json& cm = entry.at("cm");
        char head[16];
        std::snprintf(head, sizeof(head), "%6s", name.c_str());
        char counts[48];
        std::snprintf(counts, sizeof(counts), "  %6lld%6lld%6lld%6lld",
                      cm.at("tp").get<long long>(),
                      cm.at("fn").get<long long>(),
                      cm.at("fp").get<long long>(),
                      cm.at("tn").get<long long>());
        out += std::string(head) + "     " + cell(m, "sensitivity") + "     " +
               cell(m, "specificity") + "  " + cell(m, "accuracy") + counts +
               "\n";
    };
    for (const json& fr : report.at("folds")) {
        row(std::to_string(fr.at("fold").get<int>()), fr);
    }
    json pooled = report.at("pooled");
    row("all", pooled);
    const json alt = pooled.at("metrics_alt_convention");
    out += "  alt convention (sensitivity = tp/(tp+fp)):" +
           cell(alt, "sensitivity") + "     " + cell(alt, "specificity") +
           "  " + cell(alt, "accuracy") + "\n";
    return out;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.workdir, ec);
    if (ec || !std::filesystem::is_directory(config.workdir)) {
        throw PipelineError("cannot create workdir: " +
                            config.workdir.string());
    }

    PipelineResult result;
    std::vector<FeatureInstance> instances = instances_from_manifest(config);
    result.instance_count = instances.size();

    result.features_csv = config.workdir / "features.csv";
    try {
        save_features_csv(instances, result.features_csv);
    } catch (const Error& e) {
        stage_fail("features", result.features_csv.string(), e);
    }

    try {
        result.cv = cross_validate(instances, config.k, config.seed,
                                   config.hidden_sizes, config.train);
    } catch (const Error& e) {
        stage_fail("cross-validate", "", e);
    }

    for (std::size_t f = 0; f < result.cv.fold_models.size(); ++f) {
        const std::filesystem::path model_path =
            config.workdir / ("model_fold_" + std::to_string(f) + ".json");
        try {
            save_model(result.cv.fold_models[f], model_path);
        } catch (const Error& e) {
            stage_fail("save-model", model_path.string(), e);
        }
        result.model_paths.push_back(model_path);
    }

    const json report = make_report(config, result.cv, instances.size());
    result.report_path = config.workdir / "report.json";
    std::ofstream out(result.report_path);
    if (!out) {
        throw PipelineError("cannot open for writing: " +
                            result.report_path.string());
    }
    out << report.dump(1) << '\n';
    if (!out.flush()) {
        throw PipelineError("write failed: " + result.report_path.string());
    }
    return result;
}

}  // namespace respir
