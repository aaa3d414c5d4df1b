#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "respir/dbn.hpp"
#include "respir/emd.hpp"
#include "respir/eval.hpp"
#include "respir/features.hpp"
#include "respir/hilbert.hpp"
#include "respir/manifest.hpp"
#include "respir/pipeline.hpp"
#include "respir/synth.hpp"
#include "respir/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_series_csv(const fs::path& path, const std::vector<double>& series) {
    std::ofstream out(path);
    if (!out) {
        throw respir::Error("cannot open for writing: " + path.string());
    }
    char buf[40];
    for (double v : series) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        out << buf;
    }
    if (!out.flush()) throw respir::Error("write failed: " + path.string());
}

std::vector<double> read_series_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw respir::Error("cannot open: " + path.string());
    std::vector<double> series;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(line.c_str(), &end);
        if (end == line.c_str()) {
            throw respir::Error("bad number in " + path.string());
        }
        series.push_back(v);
    }
    return series;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

json summarize_series(const std::vector<double>& v) {
    return json{{"median", quantile(v, 0.5)},
                {"iqr", quantile(v, 0.75) - quantile(v, 0.25)}};
}

// Flags that were actually passed override config-file values.
template <typename T>
void override_if(const CLI::App* cmd, const std::string& flag, T& dst,
                 const T& src) {
    if (cmd->count(flag) > 0) dst = src;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lung-sound analysis: synthesis, mode decomposition, "
                 "instantaneous-frequency analysis, feature extraction, and "
                 "asthma/healthy classification"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON config file; explicit flags override its values")
        ->check(CLI::ExistingFile);
    std::uint64_t global_seed = 0;
    app.add_option("--seed", global_seed, "default seed for all subcommands");

    // ---- synth ----
    auto* synth = app.add_subcommand(
        "synth", "generate a seeded synthetic dataset of WAVs + manifest");
    int n_per_class = 10;
    std::string synth_out;
    respir::SynthConfig synth_cfg;
    synth->add_option("--n-per-class", n_per_class,
                      "subjects per class (asthma and healthy)")
        ->check(CLI::PositiveNumber);
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_cfg.seed, "dataset seed");
    synth->add_option("--sample-rate", synth_cfg.sample_rate_hz, "Hz");
    synth->add_option("--duration", synth_cfg.duration_s, "seconds");
    synth->add_option("--breath-cycle", synth_cfg.breath_cycle_s, "seconds");
    synth->add_option("--band-low", synth_cfg.noise_band_low_hz, "Hz");
    synth->add_option("--band-high", synth_cfg.noise_band_high_hz, "Hz");
    synth->add_option("--wheeze-freq", synth_cfg.wheeze_freq_hz, "Hz (>= 400)");
    synth->add_option("--wheeze-ms", synth_cfg.wheeze_duration_ms,
                      "milliseconds (>= 250)");
    synth->add_option("--wheeze-gain", synth_cfg.wheeze_gain, "in [0, 1]");

    // ---- decompose ----
    auto* dec = app.add_subcommand(
        "decompose", "split a WAV into intrinsic mode functions + residual");
    std::string dec_in, dec_out;
    double dec_seconds = 0.0;
    respir::SiftConfig dec_sift;
    dec->add_option("--in", dec_in, "input WAV")->required();
    dec->add_option("--out", dec_out, "output directory")->required();
    dec->add_option("--seconds", dec_seconds,
                    "analyze only the first SECONDS of the recording");
    dec->add_option("--sd-threshold", dec_sift.sd_threshold, "sift stop");
    dec->add_option("--max-sift", dec_sift.max_sift_iterations, "cap");
    dec->add_option("--max-imfs", dec_sift.max_imfs, "cap");
    dec->add_option("--energy-db", dec_sift.max_energy_ratio_db,
                    "residual energy-drop stop (dB)");

    // ---- hsa ----
    auto* hsa = app.add_subcommand(
        "hsa", "instantaneous amplitude/frequency summaries per IMF");
    std::string hsa_in, hsa_out = "hsa.json";
    int hsa_rate = 0;
    hsa->add_option("--in", hsa_in, "directory written by decompose")
        ->required();
    hsa->add_option("--rate", hsa_rate,
                    "sample rate in Hz (default: from decomposition.json)");
    hsa->add_option("--out", hsa_out, "output JSON");

    // ---- features ----
    auto* feat = app.add_subcommand(
        "features", "extract per-IMF statistical features for a manifest");
    std::string feat_manifest, feat_out = "features.csv";
    std::string feat_source = "imf";
    double feat_seconds = 0.0;
    respir::SiftConfig feat_sift;
    feat->add_option("--manifest", feat_manifest, "recording manifest JSON")
        ->required();
    feat->add_option("--out", feat_out, "output CSV");
    feat->add_option("--feature-source", feat_source,
                     "statistics source: imf | envelope")
        ->check(CLI::IsMember({"imf", "envelope"}));
    feat->add_option("--seconds", feat_seconds, "leading analysis window");
    feat->add_option("--sd-threshold", feat_sift.sd_threshold, "sift stop");
    feat->add_option("--max-sift", feat_sift.max_sift_iterations, "cap");
    feat->add_option("--max-imfs", feat_sift.max_imfs, "cap");
    feat->add_option("--energy-db", feat_sift.max_energy_ratio_db,
                     "residual energy-drop stop (dB)");

    // ---- train ----
    auto* train = app.add_subcommand(
        "train", "train a classifier on a feature CSV (no cross-validation)");
    std::string train_features, train_out = "model.json";
    std::vector<int> train_arch = {160, 130};
    respir::TrainConfig train_cfg;
    std::string train_loss = "sigmoid_mse";
    train->add_option("--features", train_features, "feature CSV")->required();
    train->add_option("--out", train_out, "model JSON");
    train->add_option("--arch", train_arch, "hidden layer sizes")
        ->delimiter(',');
    train->add_option("--lr", train_cfg.learning_rate, "learning rate");
    train->add_option("--epochs", train_cfg.fine_tune_epochs,
                      "fine-tune epochs");
    train->add_option("--pretrain-epochs", train_cfg.pretrain_epochs,
                      "contrastive-divergence epochs per layer");
    train->add_option("--cd", train_cfg.cd_steps, "CD chain steps");
    train->add_option("--batch", train_cfg.batch_size, "mini-batch size");
    train->add_option("--init-std", train_cfg.weight_init_std,
                      "weight init standard deviation");
    train->add_option("--seed", train_cfg.seed, "training seed");
    train->add_option("--loss", train_loss,
                      "sigmoid_mse | softmax_cross_entropy")
        ->check(CLI::IsMember({"sigmoid_mse", "softmax_cross_entropy"}));

    // ---- cv ----
    auto* cv = app.add_subcommand(
        "cv", "subject-disjoint k-fold cross-validation, end to end");
    std::string cv_manifest, cv_workdir = ".", cv_out;
    std::vector<int> cv_arch = {160, 130};
    int cv_k = 5;
    std::uint64_t cv_seed = 0;
    double cv_lr = 0.2, cv_seconds = 0.0;
    int cv_epochs = 100, cv_pretrain = 50, cv_batch = 10;
    std::string cv_source = "imf";
    respir::SiftConfig cv_sift;
    cv->add_option("--manifest", cv_manifest, "recording manifest JSON");
    cv->add_option("--workdir", cv_workdir,
                   "where features.csv, models, and report.json are written");
    cv->add_option("--out", cv_out,
                   "also copy the report JSON to this path");
    cv->add_option("--arch", cv_arch, "hidden layer sizes")->delimiter(',');
    cv->add_option("--k", cv_k, "number of folds");
    cv->add_option("--seed", cv_seed, "global seed (folds + training)");
    cv->add_option("--lr", cv_lr, "learning rate");
    cv->add_option("--epochs", cv_epochs, "fine-tune epochs");
    cv->add_option("--pretrain-epochs", cv_pretrain, "CD epochs per layer");
    cv->add_option("--batch", cv_batch, "mini-batch size");
    cv->add_option("--seconds", cv_seconds, "leading analysis window");
    cv->add_option("--feature-source", cv_source, "imf | envelope")
        ->check(CLI::IsMember({"imf", "envelope"}));
    cv->add_option("--sd-threshold", cv_sift.sd_threshold, "sift stop");
    cv->add_option("--max-sift", cv_sift.max_sift_iterations, "cap");
    cv->add_option("--max-imfs", cv_sift.max_imfs, "cap");
    cv->add_option("--energy-db", cv_sift.max_energy_ratio_db,
                   "residual energy-drop stop (dB)");

    // ---- report ----
    auto* rep = app.add_subcommand("report",
                                   "render a report JSON as a text table");
    std::string rep_in;
    rep->add_option("--in", rep_in, "report JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            if (synth->count("--seed") == 0 && app.count("--seed") > 0) {
                synth_cfg.seed = global_seed;
            }
            const respir::RecordingManifest manifest =
                respir::gen_dataset(n_per_class, synth_cfg, synth_out);
            std::cout << "wrote " << manifest.entries.size()
                      << " recordings and manifest.json to " << synth_out
                      << "\n";
        } else if (dec->parsed()) {
            respir::Signal signal = respir::read_wav(dec_in);
            if (dec_seconds > 0.0) {
                signal = respir::segment(signal, dec_seconds);
            }
            const respir::Decomposition d = respir::decompose(signal, dec_sift);
            fs::create_directories(dec_out);
            json summary;
            summary["samples"] = signal.samples.size();
            summary["sample_rate_hz"] = signal.sample_rate_hz;
            summary["imf_count"] = d.imfs.size();
            json files = json::array();
            json sifts = json::array();
            for (const respir::Imf& imf : d.imfs) {
                const std::string name =
                    "imf_" + std::to_string(imf.index) + ".csv";
                write_series_csv(fs::path(dec_out) / name, imf.values);
                files.push_back(name);
                sifts.push_back(imf.sift_iterations);
            }
            write_series_csv(fs::path(dec_out) / "residual.csv", d.residual);
            summary["imf_files"] = files;
            summary["sift_iterations"] = sifts;
            summary["residual_file"] = "residual.csv";
            std::ofstream out(fs::path(dec_out) / "decomposition.json");
            out << summary.dump(1) << '\n';
            if (!out.flush()) {
                throw respir::Error("write failed: " + dec_out);
            }
            std::cout << d.imfs.size() << " IMFs written to " << dec_out
                      << "\n";
        } else if (hsa->parsed()) {
            std::ifstream in(fs::path(hsa_in) / "decomposition.json");
            if (!in) {
                throw respir::Error("no decomposition.json in " + hsa_in);
            }
            json summary;
            try {
                in >> summary;
            } catch (const json::exception& e) {
                throw respir::Error("corrupt decomposition.json: " +
                                    std::string(e.what()));
            }
            const int rate = hsa_rate > 0
                                 ? hsa_rate
                                 : summary.value("sample_rate_hz", 0);
            if (rate <= 0) {
                throw respir::Error(
                    "sample rate unknown; pass --rate explicitly");
            }
            json out_json;
            out_json["sample_rate_hz"] = rate;
            json imfs = json::array();
            int index = 0;
            for (const json& name : summary.at("imf_files")) {
                ++index;
                const std::vector<double> series =
                    read_series_csv(fs::path(hsa_in) / name.get<std::string>());
                const respir::InstantAttributes attrs =
                    respir::instant_attributes(
                        respir::hilbert_transform(series), rate);
                imfs.push_back(
                    json{{"index", index},
                         {"amplitude", summarize_series(attrs.amplitude)},
                         {"frequency_hz", summarize_series(attrs.frequency_hz)}});
            }
            out_json["imfs"] = std::move(imfs);
            std::ofstream out(hsa_out);
            if (!out) {
                throw respir::Error("cannot open for writing: " + hsa_out);
            }
            out << out_json.dump(1) << '\n';
            if (!out.flush()) throw respir::Error("write failed: " + hsa_out);
            std::cout << "wrote " << hsa_out << "\n";
        } else if (feat->parsed()) {
            respir::PipelineConfig cfg;
            if (!config_path.empty()) {
                cfg = respir::load_pipeline_config(config_path);
            }
            override_if(feat, "--seconds", cfg.segment_seconds, feat_seconds);
            override_if(feat, "--sd-threshold", cfg.sift.sd_threshold,
                        feat_sift.sd_threshold);
            override_if(feat, "--max-sift", cfg.sift.max_sift_iterations,
                        feat_sift.max_sift_iterations);
            override_if(feat, "--max-imfs", cfg.sift.max_imfs,
                        feat_sift.max_imfs);
            override_if(feat, "--energy-db", cfg.sift.max_energy_ratio_db,
                        feat_sift.max_energy_ratio_db);
            if (feat->count("--feature-source") > 0) {
                cfg.feature_source = feat_source == "imf"
                                         ? respir::FeatureSource::Imf
                                         : respir::FeatureSource::Envelope;
            }
            cfg.manifest = feat_manifest;
            const auto instances = respir::instances_from_manifest(cfg);
            respir::save_features_csv(instances, feat_out);
            std::cout << instances.size() << " instances written to "
                      << feat_out << "\n";
        } else if (train->parsed()) {
            if (train->count("--seed") == 0 && app.count("--seed") > 0) {
                train_cfg.seed = global_seed;
            }
            train_cfg.loss = train_loss == "sigmoid_mse"
                                 ? respir::Loss::SigmoidMse
                                 : respir::Loss::SoftmaxCrossEntropy;
            const auto instances = respir::load_features_csv(train_features);
            const respir::DbnModel model =
                respir::train_dbn(instances, train_arch, train_cfg);
            respir::save_model(model, train_out);
            const std::vector<respir::Label> pred =
                respir::predict(model, instances);
            long correct = 0;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                if (pred[i] == instances[i].label) ++correct;
            }
            std::printf("trained on %zu instances; training accuracy %.4f\n",
                        instances.size(),
                        static_cast<double>(correct) /
                            static_cast<double>(instances.size()));
            std::cout << "model written to " << train_out << "\n";
        } else if (cv->parsed()) {
            respir::PipelineConfig cfg;
            if (!config_path.empty()) {
                cfg = respir::load_pipeline_config(config_path);
            }
            override_if(cv, "--manifest", cfg.manifest,
                        fs::path(cv_manifest));
            override_if(cv, "--workdir", cfg.workdir, fs::path(cv_workdir));
            override_if(cv, "--arch", cfg.hidden_sizes, cv_arch);
            override_if(cv, "--k", cfg.k, cv_k);
            override_if(cv, "--seconds", cfg.segment_seconds, cv_seconds);
            override_if(cv, "--lr", cfg.train.learning_rate, cv_lr);
            override_if(cv, "--epochs", cfg.train.fine_tune_epochs, cv_epochs);
            override_if(cv, "--pretrain-epochs", cfg.train.pretrain_epochs,
                        cv_pretrain);
            override_if(cv, "--batch", cfg.train.batch_size, cv_batch);
            override_if(cv, "--sd-threshold", cfg.sift.sd_threshold,
                        cv_sift.sd_threshold);
            override_if(cv, "--max-sift", cfg.sift.max_sift_iterations,
                        cv_sift.max_sift_iterations);
            override_if(cv, "--max-imfs", cfg.sift.max_imfs, cv_sift.max_imfs);
            override_if(cv, "--energy-db", cfg.sift.max_energy_ratio_db,
                        cv_sift.max_energy_ratio_db);
            if (cv->count("--feature-source") > 0) {
                cfg.feature_source = cv_source == "imf"
                                         ? respir::FeatureSource::Imf
                                         : respir::FeatureSource::Envelope;
            }
            if (cv->count("--seed") > 0) {
                cfg.seed = cv_seed;
            } else if (app.count("--seed") > 0) {
                cfg.seed = global_seed;
            }
            if (cfg.manifest.empty()) {
                throw respir::Error(
                    "no manifest given (flag --manifest or config file)");
            }
            const respir::PipelineResult result = respir::run_pipeline(cfg);
            const json report =
                respir::make_report(cfg, result.cv, result.instance_count);
            std::cout << respir::render_report_text(report);
            std::cout << "report written to " << result.report_path.string()
                      << "\n";
            if (!cv_out.empty() &&
                fs::absolute(cv_out) != fs::absolute(result.report_path)) {
                fs::copy_file(result.report_path, cv_out,
                              fs::copy_options::overwrite_existing);
                std::cout << "report copied to " << cv_out << "\n";
            }
        } else if (rep->parsed()) {
            std::ifstream in(rep_in);
            if (!in) throw respir::Error("cannot open: " + rep_in);
            json report;
            try {
                in >> report;
            } catch (const json::exception& e) {
                throw respir::Error("corrupt report: " + std::string(e.what()));
            }
            std::cout << respir::render_report_text(report);
        }
        return 0;
    } catch (const respir::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_user_input() ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
