#include "respir/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace respir {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void validate(const TrainConfig& config) {
    if (!(config.learning_rate >= 0.0)) {
        throw DbnError("learning_rate must be non-negative");
    }
    if (config.fine_tune_epochs < 0 || config.pretrain_epochs < 0) {
        throw DbnError("epoch counts must be non-negative");
    }
    if (config.cd_steps < 1) throw DbnError("cd_steps must be at least 1");
    if (config.batch_size < 1) throw DbnError("batch_size must be at least 1");
    if (!(config.weight_init_std >= 0.0)) {
        throw DbnError("weight_init_std must be non-negative");
    }
}

std::vector<double> hidden_probs(const RbmLayer& layer,
                                 const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != layer.visible) {
        throw DbnError("visible vector width mismatch", false);
    }
    std::vector<double> h(layer.hidden);
    for (int j = 0; j < layer.hidden; ++j) {
        double z = layer.hidden_bias[j];
        for (int i = 0; i < layer.visible; ++i) {
            z += v[i] * layer.weights[static_cast<std::size_t>(i) * layer.hidden + j];
        }
        h[j] = sigmoid(z);
    }
    return h;
}

std::vector<double> visible_probs(const RbmLayer& layer,
                                  const std::vector<double>& h) {
    if (static_cast<int>(h.size()) != layer.hidden) {
        throw DbnError("hidden vector width mismatch", false);
    }
    std::vector<double> v(layer.visible);
    for (int i = 0; i < layer.visible; ++i) {
        double z = layer.visible_bias[i];
        const double* row = &layer.weights[static_cast<std::size_t>(i) * layer.hidden];
        for (int j = 0; j < layer.hidden; ++j) z += row[j] * h[j];
        v[i] = sigmoid(z);
    }
    return v;
}

RbmUpdate cd_update(const RbmLayer& layer,
                    const std::vector<std::vector<double>>& batch,
                    int cd_steps, SplitMix64& rng) {
    if (batch.empty()) throw DbnError("empty batch", false);
    RbmUpdate u;
    u.d_weights.assign(layer.weights.size(), 0.0);
    u.d_visible_bias.assign(layer.visible, 0.0);
    u.d_hidden_bias.assign(layer.hidden, 0.0);

    std::vector<double> hs(layer.hidden);
    for (const std::vector<double>& v0 : batch) {
        const std::vector<double> h0p = hidden_probs(layer, v0);
        for (int j = 0; j < layer.hidden; ++j) {
            hs[j] = rng.uniform() < h0p[j] ? 1.0 : 0.0;
        }
        std::vector<double> v1, h1p;
        for (int step = 0; step < cd_steps; ++step) {
            v1 = visible_probs(layer, hs);
            h1p = hidden_probs(layer, v1);
            if (step + 1 < cd_steps) {
                for (int j = 0; j < layer.hidden; ++j) {
                    hs[j] = rng.uniform() < h1p[j] ? 1.0 : 0.0;
                }
            }
        }
        for (int i = 0; i < layer.visible; ++i) {
            double* row = &u.d_weights[static_cast<std::size_t>(i) * layer.hidden];
            for (int j = 0; j < layer.hidden; ++j) {
                row[j] += v0[i] * h0p[j] - v1[i] * h1p[j];
            }
            u.d_visible_bias[i] += v0[i] - v1[i];
        }
        for (int j = 0; j < layer.hidden; ++j) {
            u.d_hidden_bias[j] += h0p[j] - h1p[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& w : u.d_weights) w *= inv;
    for (double& b : u.d_visible_bias) b *= inv;
    for (double& c : u.d_hidden_bias) c *= inv;
    return u;
}

RbmLayer init_rbm(int visible, int hidden, double init_std, SplitMix64& rng) {
    if (visible < 1 || hidden < 1) {
        throw DbnError("layer widths must be at least 1");
    }
    RbmLayer layer;
    layer.visible = visible;
    layer.hidden = hidden;
    layer.weights.resize(static_cast<std::size_t>(visible) * hidden);
    for (double& w : layer.weights) w = init_std * rng.gaussian();
    layer.visible_bias.assign(visible, 0.0);
    layer.hidden_bias.assign(hidden, 0.0);
    return layer;
}

namespace {

void check_normalized(const std::vector<std::vector<double>>& data) {
    if (data.empty()) throw DbnError("training data is empty");
    const std::size_t width = data.front().size();
    for (const auto& row : data) {
        if (row.size() != width) {
            throw DbnError("training rows differ in width");
        }
        for (double v : row) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw DbnError("training data must be normalized to [0, 1]");
            }
        }
    }
}

}  // namespace

RbmLayer train_rbm(const std::vector<std::vector<double>>& data, int hidden,
                   const TrainConfig& config, SplitMix64& rng) {
    validate(config);
    check_normalized(data);
    const int visible = static_cast<int>(data.front().size());
    RbmLayer layer = init_rbm(visible, hidden, config.weight_init_std, rng);
    const std::size_t n = data.size();
    const std::size_t bs = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t stop = std::min(n, start + bs);
            const std::vector<std::vector<double>> batch(
                data.begin() + static_cast<std::ptrdiff_t>(start),
                data.begin() + static_cast<std::ptrdiff_t>(stop));
            const RbmUpdate u = cd_update(layer, batch, config.cd_steps, rng);
            for (std::size_t k = 0; k < layer.weights.size(); ++k) {
                layer.weights[k] += config.learning_rate * u.d_weights[k];
            }
            for (int i = 0; i < layer.visible; ++i) {
                layer.visible_bias[i] += config.learning_rate * u.d_visible_bias[i];
            }
            for (int j = 0; j < layer.hidden; ++j) {
                layer.hidden_bias[j] += config.learning_rate * u.d_hidden_bias[j];
            }
        }
    }
    return layer;
}

double reconstruction_cross_entropy(
    const RbmLayer& layer, const std::vector<std::vector<double>>& data) {
    check_normalized(data);
    constexpr double kEps = 1e-12;
    double total = 0.0;
    for (const auto& v0 : data) {
        const std::vector<double> v1 = visible_probs(layer, hidden_probs(layer, v0));
        for (int i = 0; i < layer.visible; ++i) {
            const double p = std::clamp(v1[i], kEps, 1.0 - kEps);
            total -= v0[i] * std::log(p) + (1.0 - v0[i]) * std::log(1.0 - p);
        }
    }
    return total / static_cast<double>(data.size());
}

std::vector<RbmLayer> pretrain(const std::vector<std::vector<double>>& data,
                               const std::vector<int>& sizes,
                               const TrainConfig& config) {
    validate(config);
    check_normalized(data);
    if (sizes.empty()) throw DbnError("at least one hidden layer required");
    SplitMix64 rng(config.seed);
    std::vector<RbmLayer> layers;
    layers.reserve(sizes.size());
    std::vector<std::vector<double>> current = data;
    for (int size : sizes) {
        RbmLayer layer = train_rbm(current, size, config, rng);
        for (auto& row : current) row = hidden_probs(layer, row);
        layers.push_back(std::move(layer));
    }
    return layers;
}

DbnModel random_model(int input_width, const std::vector<int>& hidden_sizes,
                      double init_std, SplitMix64& rng) {
    if (hidden_sizes.empty()) {
        throw DbnError("at least one hidden layer required");
    }
    DbnModel model;
    int prev = input_width;
    for (int size : hidden_sizes) {
        model.layers.push_back(init_rbm(prev, size, init_std, rng));
        prev = size;
    }
    model.output_weights.resize(static_cast<std::size_t>(prev) * kOutputClasses);
    for (double& w : model.output_weights) w = init_std * rng.gaussian();
    model.output_bias.fill(0.0);
    return model;
}

namespace {

std::vector<std::vector<double>> forward_activations(
    const DbnModel& model, const std::vector<double>& input) {
    if (model.layers.empty()) throw DbnError("model has no layers", false);
    if (static_cast<int>(input.size()) != model.input_width()) {
        throw DbnError("input width mismatch", false);
    }
    for (double v : input) {
        if (!std::isfinite(v)) throw DbnError("non-finite input", false);
    }
    std::vector<std::vector<double>> acts;
    acts.reserve(model.layers.size() + 1);
    acts.push_back(input);
    for (const RbmLayer& layer : model.layers) {
        acts.push_back(hidden_probs(layer, acts.back()));
    }
    return acts;
}

std::array<double, kOutputClasses> output_from_hidden(
    const DbnModel& model, const std::vector<double>& hidden, Loss loss) {
    std::array<double, kOutputClasses> z{};
    for (int k = 0; k < kOutputClasses; ++k) {
        double s = model.output_bias[k];
        for (std::size_t j = 0; j < hidden.size(); ++j) {
            s += hidden[j] * model.output_weights[j * kOutputClasses + k];
        }
        z[k] = s;
    }
    std::array<double, kOutputClasses> out{};
    if (loss == Loss::SigmoidMse) {
        for (int k = 0; k < kOutputClasses; ++k) out[k] = sigmoid(z[k]);
    } else {
        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (int k = 0; k < kOutputClasses; ++k) {
            out[k] = std::exp(z[k] - zmax);
            denom += out[k];
        }
        for (int k = 0; k < kOutputClasses; ++k) out[k] /= denom;
    }
    return out;
}

}  // namespace

std::array<double, kOutputClasses> forward(const DbnModel& model,
                                           const std::vector<double>& input,
                                           Loss loss) {
    const auto acts = forward_activations(model, input);
    return output_from_hidden(model, acts.back(), loss);
}

double batch_loss(const DbnModel& model,
                  const std::vector<std::vector<double>>& inputs,
                  const std::vector<int>& targets, Loss loss) {
    if (inputs.empty()) throw DbnError("empty evaluation set");
    if (inputs.size() != targets.size()) {
        throw DbnError("inputs and targets differ in count", false);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const int t = targets[i];
        if (t < 0 || t >= kOutputClasses) {
            throw DbnError("target class out of range", false);
        }
        const auto out = forward(model, inputs[i], loss);
        if (loss == Loss::SigmoidMse) {
            for (int k = 0; k < kOutputClasses; ++k) {
                const double d = out[k] - (k == t ? 1.0 : 0.0);
                total += 0.5 * d * d;
            }
        } else {
            total -= std::log(std::max(out[t], 1e-300));
        }
    }
    return total / static_cast<double>(inputs.size());
}

DbnGradients batch_gradient(const DbnModel& model,
                            const std::vector<std::vector<double>>& inputs,
                            const std::vector<int>& targets, Loss loss) {
    if (inputs.empty()) throw DbnError("empty batch");
    if (inputs.size() != targets.size()) {
        throw DbnError("inputs and targets differ in count", false);
    }
    const std::size_t depth = model.layers.size();
    DbnGradients g;
    g.layer_weights.resize(depth);
    g.layer_hidden_bias.resize(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        g.layer_weights[l].assign(model.layers[l].weights.size(), 0.0);
        g.layer_hidden_bias[l].assign(model.layers[l].hidden_bias.size(), 0.0);
    }
    g.output_weights.assign(model.output_weights.size(), 0.0);
    g.output_bias.fill(0.0);

    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const int t = targets[i];
        if (t < 0 || t >= kOutputClasses) {
            throw DbnError("target class out of range", false);
        }
        const auto acts = forward_activations(model, inputs[i]);
        const std::vector<double>& top = acts.back();
        const auto out = output_from_hidden(model, top, loss);

        std::array<double, kOutputClasses> delta_out{};
        for (int k = 0; k < kOutputClasses; ++k) {
            const double target = k == t ? 1.0 : 0.0;
            delta_out[k] = loss == Loss::SigmoidMse
                               ? (out[k] - target) * out[k] * (1.0 - out[k])
                               : out[k] - target;
        }
        std::vector<double> delta(top.size());
        for (std::size_t j = 0; j < top.size(); ++j) {
            double back = 0.0;
            for (int k = 0; k < kOutputClasses; ++k) {
                back += model.output_weights[j * kOutputClasses + k] * delta_out[k];
                g.output_weights[j * kOutputClasses + k] += top[j] * delta_out[k];
            }
            delta[j] = back * top[j] * (1.0 - top[j]);
        }
        for (int k = 0; k < kOutputClasses; ++k) g.output_bias[k] += delta_out[k];

        for (std::size_t l = depth; l-- > 0;) {
            const RbmLayer& layer = model.layers[l];
            const std::vector<double>& below = acts[l];
            for (int a = 0; a < layer.visible; ++a) {
                double* grow = &g.layer_weights[l][static_cast<std::size_t>(a) * layer.hidden];
                for (int j = 0; j < layer.hidden; ++j) {
                    grow[j] += below[a] * delta[j];
                }
            }
            for (int j = 0; j < layer.hidden; ++j) {
                g.layer_hidden_bias[l][j] += delta[j];
            }
            if (l > 0) {
                std::vector<double> delta_prev(layer.visible);
                for (int a = 0; a < layer.visible; ++a) {
                    double back = 0.0;
                    const double* wrow =
                        &layer.weights[static_cast<std::size_t>(a) * layer.hidden];
                    for (int j = 0; j < layer.hidden; ++j) {
                        back += wrow[j] * delta[j];
                    }
                    delta_prev[a] = back * below[a] * (1.0 - below[a]);
                }
                delta = std::move(delta_prev);
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(inputs.size());
    for (auto& w : g.layer_weights) {
        for (double& v : w) v *= inv;
    }
    for (auto& b : g.layer_hidden_bias) {
        for (double& v : b) v *= inv;
    }
    for (double& v : g.output_weights) v *= inv;
    for (double& v : g.output_bias) v *= inv;
    return g;
}

TrainStats fine_tune(DbnModel& model,
                     const std::vector<std::vector<double>>& inputs,
                     const std::vector<int>& targets,
                     const TrainConfig& config) {
    validate(config);
    if (inputs.empty()) throw DbnError("empty training set");
    if (inputs.size() != targets.size()) {
        throw DbnError("inputs and targets differ in count", false);
    }
    TrainStats stats;
    const std::size_t n = inputs.size();
    const std::size_t bs = static_cast<std::size_t>(config.batch_size);
    // Batches are drawn in a freshly shuffled order each epoch.  The order
    // comes from the model's own seeded stream, so training depends only on
    // the instance set, never on the order the caller happened to pass.
    SplitMix64 order_rng(config.seed ^ fnv1a64("fine-tune-shuffle"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < config.fine_tune_epochs; ++epoch) {
        shuffle(order, order_rng);
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t stop = std::min(n, start + bs);
            std::vector<std::vector<double>> bx;
            std::vector<int> by;
            bx.reserve(stop - start);
            by.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                bx.push_back(inputs[order[i]]);
                by.push_back(targets[order[i]]);
            }
            const DbnGradients g = batch_gradient(model, bx, by, config.loss);
            const double lr = config.learning_rate;
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                RbmLayer& layer = model.layers[l];
                for (std::size_t k = 0; k < layer.weights.size(); ++k) {
                    layer.weights[k] -= lr * g.layer_weights[l][k];
                }
                for (int j = 0; j < layer.hidden; ++j) {
                    layer.hidden_bias[j] -= lr * g.layer_hidden_bias[l][j];
                }
            }
            for (std::size_t k = 0; k < model.output_weights.size(); ++k) {
                model.output_weights[k] -= lr * g.output_weights[k];
            }
            for (int k = 0; k < kOutputClasses; ++k) {
                model.output_bias[k] -= lr * g.output_bias[k];
            }
        }
        stats.epoch_loss.push_back(batch_loss(model, inputs, targets, config.loss));
    }
    return stats;
}

DbnModel train_dbn(const std::vector<FeatureInstance>& train,
                   const std::vector<int>& hidden_sizes,
                   const TrainConfig& config) {
    if (train.empty()) throw DbnError("empty training set");
    const Normalizer norm = fit_normalizer(train);
    std::vector<std::vector<double>> rows;
    std::vector<int> targets;
    rows.reserve(train.size());
    targets.reserve(train.size());
    for (const FeatureInstance& inst : train) {
        const auto r = apply_normalizer(inst.vector, norm);
        rows.emplace_back(r.begin(), r.end());
        targets.push_back(inst.label == Label::Asthma ? 0 : 1);
    }

    DbnModel model;
    model.layers = pretrain(rows, hidden_sizes, config);
    model.normalizer = norm;
    SplitMix64 out_rng(config.seed ^ fnv1a64("output-layer"));
    model.output_weights.resize(
        static_cast<std::size_t>(model.last_hidden()) * kOutputClasses);
    for (double& w : model.output_weights) {
        w = config.weight_init_std * out_rng.gaussian();
    }
    model.output_bias.fill(0.0);
    fine_tune(model, rows, targets, config);
    return model;
}

Label predict_one(const DbnModel& model, const FeatureInstance& instance) {
    const auto r = apply_normalizer(instance.vector, model.normalizer);
    const auto out = forward(model, std::vector<double>(r.begin(), r.end()));
    // first maximum wins, so an exact tie lands on asthma
    const int k = static_cast<int>(
        std::max_element(out.begin(), out.end()) - out.begin());
    return k == 0 ? Label::Asthma : Label::Healthy;
}

std::vector<Label> predict(const DbnModel& model,
                           const std::vector<FeatureInstance>& instances) {
    std::vector<Label> out;
    out.reserve(instances.size());
    for (const FeatureInstance& inst : instances) {
        out.push_back(predict_one(model, inst));
    }
    return out;
}

namespace {

using nlohmann::json;

json layer_to_json(const RbmLayer& layer) {
    json w = json::array();
    for (int i = 0; i < layer.visible; ++i) {
        json row = json::array();
        for (int j = 0; j < layer.hidden; ++j) {
            row.push_back(layer.weights[static_cast<std::size_t>(i) * layer.hidden + j]);
        }
        w.push_back(std::move(row));
    }
    return json{{"W", std::move(w)},
                {"b", layer.visible_bias},
                {"c", layer.hidden_bias}};
}

RbmLayer layer_from_json(const json& j) {
    RbmLayer layer;
    const json& w = j.at("W");
    layer.visible = static_cast<int>(w.size());
    if (layer.visible == 0) throw DbnError("layer has no rows");
    layer.hidden = static_cast<int>(w.at(0).size());
    layer.weights.reserve(static_cast<std::size_t>(layer.visible) * layer.hidden);
    for (const json& row : w) {
        if (static_cast<int>(row.size()) != layer.hidden) {
            throw DbnError("ragged weight matrix");
        }
        for (const json& v : row) layer.weights.push_back(v.get<double>());
    }
    layer.visible_bias = j.at("b").get<std::vector<double>>();
    layer.hidden_bias = j.at("c").get<std::vector<double>>();
    if (static_cast<int>(layer.visible_bias.size()) != layer.visible ||
        static_cast<int>(layer.hidden_bias.size()) != layer.hidden) {
        throw DbnError("bias lengths do not match the weight matrix");
    }
    return layer;
}

}  // namespace

void save_model(const DbnModel& model, const std::filesystem::path& path) {
    json j;
    j["version"] = model.format_version;
    json sizes = json::array();
    sizes.push_back(model.input_width());
    for (const RbmLayer& layer : model.layers) sizes.push_back(layer.hidden);
    sizes.push_back(kOutputClasses);
    j["sizes"] = std::move(sizes);
    json layers = json::array();
    for (const RbmLayer& layer : model.layers) {
        layers.push_back(layer_to_json(layer));
    }
    j["layers"] = std::move(layers);
    json ow = json::array();
    const int lh = model.last_hidden();
    for (int a = 0; a < lh; ++a) {
        json row = json::array();
        for (int k = 0; k < kOutputClasses; ++k) {
            row.push_back(model.output_weights[static_cast<std::size_t>(a) * kOutputClasses + k]);
        }
        ow.push_back(std::move(row));
    }
    j["output"] = json{{"W", std::move(ow)},
                       {"b", std::vector<double>(model.output_bias.begin(),
                                                 model.output_bias.end())}};
    j["normalizer"] =
        json{{"min", std::vector<double>(model.normalizer.min.begin(),
                                         model.normalizer.min.end())},
             {"max", std::vector<double>(model.normalizer.max.begin(),
                                         model.normalizer.max.end())}};
    std::ofstream out(path);
    if (!out) throw DbnError("cannot open for writing: " + path.string());
    out << j.dump(1) << '\n';
    if (!out.flush()) throw DbnError("write failed: " + path.string());
}

DbnModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DbnError("cannot open: " + path.string());
    json j;
    try {
        in >> j;
        DbnModel model;
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw DbnError("unsupported model format version " +
                           std::to_string(version));
        }
        for (const json& lj : j.at("layers")) {
            model.layers.push_back(layer_from_json(lj));
        }
        if (model.layers.empty()) throw DbnError("model has no layers");
        for (std::size_t l = 1; l < model.layers.size(); ++l) {
            if (model.layers[l].visible != model.layers[l - 1].hidden) {
                throw DbnError("layer widths do not chain");
            }
        }
        const json& out_j = j.at("output");
        const json& ow = out_j.at("W");
        if (static_cast<int>(ow.size()) != model.last_hidden()) {
            throw DbnError("output layer width does not match the last hidden layer");
        }
        for (const json& row : ow) {
            if (static_cast<int>(row.size()) != kOutputClasses) {
                throw DbnError("output layer must have two classes");
            }
            for (const json& v : row) {
                model.output_weights.push_back(v.get<double>());
            }
        }
        const auto ob = out_j.at("b").get<std::vector<double>>();
        if (static_cast<int>(ob.size()) != kOutputClasses) {
            throw DbnError("output bias must have two entries");
        }
        std::copy(ob.begin(), ob.end(), model.output_bias.begin());
        const json& nj = j.at("normalizer");
        const auto nmin = nj.at("min").get<std::vector<double>>();
        const auto nmax = nj.at("max").get<std::vector<double>>();
        if (nmin.size() != model.normalizer.min.size() ||
            nmax.size() != model.normalizer.max.size()) {
            throw DbnError("normalizer must cover all features");
        }
        std::copy(nmin.begin(), nmin.end(), model.normalizer.min.begin());
        std::copy(nmax.begin(), nmax.end(), model.normalizer.max.begin());

        const json& sizes = j.at("sizes");
        if (static_cast<int>(sizes.size()) != static_cast<int>(model.layers.size()) + 2 ||
            sizes.at(0).get<int>() != model.input_width() ||
            sizes.back().get<int>() != kOutputClasses) {
            throw DbnError("declared sizes do not match the stored matrices");
        }
        return model;
    } catch (const json::exception& e) {
        throw DbnError("corrupt model file " + path.string() + ": " + e.what());
    }
}

}  // namespace respir
