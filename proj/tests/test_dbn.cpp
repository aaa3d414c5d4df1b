#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "helpers.hpp"
#include "rbm_oracle.hpp"
#include "respir/dbn.hpp"

using namespace respir;

namespace {

std::vector<std::vector<double>> unit_rows(std::size_t count, std::size_t width,
                                           std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<std::vector<double>> rows(count, std::vector<double>(width));
    for (auto& row : rows) {
        for (auto& v : row) v = 0.05 + 0.9 * rng.uniform();
    }
    return rows;
}

const std::vector<std::vector<double>> kOneHot4 = {
    {1.0, 0.0, 0.0, 0.0},
    {0.0, 1.0, 0.0, 0.0},
    {0.0, 0.0, 1.0, 0.0},
    {0.0, 0.0, 0.0, 1.0},
};

}  // namespace

TEST_CASE("sigmoid: midpoint, frozen value, symmetry, saturation") {
    CHECK(sigmoid(0.0) == 0.5);
    // frozen from a 20-digit arbitrary-precision evaluation of 1/(1+e^-2)
    CHECK(std::abs(sigmoid(2.0) - 0.88079707797788244406) < 1e-15);
    for (double x : {0.1, 0.5, 1.0, 3.0, 7.5, 20.0}) {
        CHECK(sigmoid(-x) == doctest::Approx(1.0 - sigmoid(x)).epsilon(1e-15));
    }
    CHECK(sigmoid(1000.0) == 1.0);
    CHECK(sigmoid(-1000.0) == 0.0);
    CHECK(std::isfinite(sigmoid(-745.0)));
    CHECK(sigmoid(1.0) > sigmoid(0.5));
}

TEST_CASE("hidden and visible activations, worked by hand") {
    RbmLayer layer;
    layer.visible = 2;
    layer.hidden = 1;
    layer.weights = {1.0, -2.0};  // row-major visible x hidden
    layer.visible_bias = {0.0, 0.25};
    layer.hidden_bias = {0.5};

    // z = c + v0*W00 + v1*W10 = 0.5 + 1*1 + 0.5*(-2) = 0.5
    const auto h = hidden_probs(layer, {1.0, 0.5});
    REQUIRE(h.size() == 1);
    CHECK(h[0] == doctest::Approx(sigmoid(0.5)).epsilon(1e-15));

    // v0 = sigmoid(0 + 1*1), v1 = sigmoid(0.25 + (-2)*1)
    const auto v = visible_probs(layer, {1.0});
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(sigmoid(1.0)).epsilon(1e-15));
    CHECK(v[1] == doctest::Approx(sigmoid(-1.75)).epsilon(1e-15));

    try {
        hidden_probs(layer, {1.0, 2.0, 3.0});
        FAIL("expected throw");
    } catch (const DbnError& e) {
        CHECK(!e.is_user_input());
    }
    CHECK_THROWS_AS(visible_probs(layer, {1.0, 2.0}), DbnError);
}

TEST_CASE("zero layer activates everything at exactly one half") {
    SplitMix64 rng(1);
    const RbmLayer layer = init_rbm(3, 4, 0.0, rng);
    for (double h : hidden_probs(layer, {0.3, 0.6, 0.9})) CHECK(h == 0.5);
    for (double v : visible_probs(layer, {0.1, 0.2, 0.3, 0.4})) CHECK(v == 0.5);
}

TEST_CASE("training configuration validation") {
    TrainConfig ok;
    CHECK_NOTHROW(validate(ok));
    TrainConfig bad = ok;
    bad.learning_rate = -0.1;
    CHECK_THROWS_AS(validate(bad), DbnError);
    bad = ok;
    bad.cd_steps = 0;
    CHECK_THROWS_AS(validate(bad), DbnError);
    bad = ok;
    bad.batch_size = 0;
    CHECK_THROWS_AS(validate(bad), DbnError);
    bad = ok;
    bad.fine_tune_epochs = -1;
    CHECK_THROWS_AS(validate(bad), DbnError);
    bad = ok;
    bad.weight_init_std = -1.0;
    CHECK_THROWS_AS(validate(bad), DbnError);
}

TEST_CASE("contrastive divergence updates are seeded and shaped") {
    SplitMix64 init_rng(5);
    const RbmLayer layer = init_rbm(4, 3, 0.1, init_rng);
    const auto batch = unit_rows(6, 4, 9);

    SplitMix64 r1(100), r2(100), r3(101);
    const RbmUpdate a = cd_update(layer, batch, 1, r1);
    const RbmUpdate b = cd_update(layer, batch, 1, r2);
    const RbmUpdate c = cd_update(layer, batch, 1, r3);
    CHECK(a.d_weights.size() == 12);
    CHECK(a.d_visible_bias.size() == 4);
    CHECK(a.d_hidden_bias.size() == 3);
    CHECK(a.d_weights == b.d_weights);        // same sampling stream
    CHECK(a.d_weights != c.d_weights);        // different stream
    CHECK(a.d_hidden_bias == b.d_hidden_bias);

    SplitMix64 r4(1);
    CHECK_THROWS_AS(cd_update(layer, {}, 1, r4), DbnError);

    // more Gibbs steps consume more randomness but stay finite
    SplitMix64 r5(7);
    const RbmUpdate k3 = cd_update(layer, batch, 3, r5);
    for (double w : k3.d_weights) CHECK(std::isfinite(w));
}

TEST_CASE("zero learning rate leaves the initialization untouched") {
    const auto data = unit_rows(8, 5, 12);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.pretrain_epochs = 3;

    SplitMix64 expect_rng(77);
    const RbmLayer expect = init_rbm(5, 3, cfg.weight_init_std, expect_rng);
    SplitMix64 train_rng(77);
    const RbmLayer got = train_rbm(data, 3, cfg, train_rng);
    CHECK(got.weights == expect.weights);
    CHECK(got.visible_bias == expect.visible_bias);
    CHECK(got.hidden_bias == expect.hidden_bias);
}

TEST_CASE("CD training drives reconstruction cross-entropy down") {
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.pretrain_epochs = 500;
    cfg.batch_size = 4;
    cfg.weight_init_std = 0.01;

    SplitMix64 before_rng(21);
    const RbmLayer before = init_rbm(4, 3, cfg.weight_init_std, before_rng);
    SplitMix64 train_rng(21);
    const RbmLayer after = train_rbm(kOneHot4, 3, cfg, train_rng);

    const double ce_before = reconstruction_cross_entropy(before, kOneHot4);
    const double ce_after = reconstruction_cross_entropy(after, kOneHot4);
    CHECK(ce_after < ce_before);
    CHECK(ce_after < 0.5 * ce_before);
}

TEST_CASE("unnormalized training data is rejected") {
    TrainConfig cfg;
    SplitMix64 rng(1);
    std::vector<std::vector<double>> hot = {{0.5, 1.5}};
    CHECK_THROWS_AS(train_rbm(hot, 2, cfg, rng), DbnError);
    std::vector<std::vector<double>> neg = {{-0.1, 0.5}};
    CHECK_THROWS_AS(train_rbm(neg, 2, cfg, rng), DbnError);
    std::vector<std::vector<double>> ragged = {{0.5, 0.5}, {0.5}};
    CHECK_THROWS_AS(train_rbm(ragged, 2, cfg, rng), DbnError);
    CHECK_THROWS_AS(pretrain(hot, {2}, cfg), DbnError);
}

TEST_CASE("greedy pretraining chains layer widths and is reproducible") {
    const auto data = unit_rows(10, 6, 31);
    TrainConfig cfg;
    cfg.pretrain_epochs = 5;
    cfg.seed = 4;

    const auto stack = pretrain(data, {5, 3}, cfg);
    REQUIRE(stack.size() == 2);
    CHECK(stack[0].visible == 6);
    CHECK(stack[0].hidden == 5);
    CHECK(stack[1].visible == 5);
    CHECK(stack[1].hidden == 3);

    const auto again = pretrain(data, {5, 3}, cfg);
    CHECK(again[0].weights == stack[0].weights);
    CHECK(again[1].weights == stack[1].weights);

    TrainConfig other = cfg;
    other.seed = 5;
    CHECK(pretrain(data, {5, 3}, other)[0].weights != stack[0].weights);

    CHECK_THROWS_AS(pretrain(data, {}, cfg), DbnError);
}

TEST_CASE("zero model outputs one half for both classes; ties mean asthma") {
    SplitMix64 rng(2);
    DbnModel model = random_model(12, {4}, 0.0, rng);
    const auto out = forward(model, std::vector<double>(12, 0.3));
    CHECK(out[0] == 0.5);
    CHECK(out[1] == 0.5);

    FeatureInstance inst;  // default normalizer maps everything to 0.5
    CHECK(predict_one(model, inst) == Label::Asthma);

    model.output_bias = {-3.0, 3.0};
    CHECK(predict_one(model, inst) == Label::Healthy);
    model.output_bias = {3.0, -3.0};
    CHECK(predict_one(model, inst) == Label::Asthma);
}

TEST_CASE("forward rejects malformed input") {
    SplitMix64 rng(3);
    const DbnModel model = random_model(4, {3}, 0.1, rng);
    CHECK_THROWS_AS(forward(model, {0.1, 0.2}), DbnError);
    CHECK_THROWS_AS(forward(model, {0.1, 0.2, 0.3, std::nan("")}), DbnError);
    CHECK_THROWS_AS(forward(DbnModel{}, {}), DbnError);
}

TEST_CASE("forward agrees with an independent matrix walk") {
    SplitMix64 rng(17);
    const DbnModel model = random_model(12, {16, 8}, 0.3, rng);
    SplitMix64 in_rng(18);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(12);
        for (auto& v : x) v = in_rng.uniform();

        // reference walk, written against the documented layout:
        // layer weights row-major visible x hidden, output likewise
        std::vector<double> act = x;
        for (const RbmLayer& layer : model.layers) {
            std::vector<double> next(static_cast<std::size_t>(layer.hidden));
            for (int j = 0; j < layer.hidden; ++j) {
                double z = layer.hidden_bias[static_cast<std::size_t>(j)];
                for (int i = 0; i < layer.visible; ++i) {
                    z += act[static_cast<std::size_t>(i)] *
                         layer.weights[static_cast<std::size_t>(i) * layer.hidden + j];
                }
                next[static_cast<std::size_t>(j)] = 1.0 / (1.0 + std::exp(-z));
            }
            act = std::move(next);
        }
        std::array<double, 2> expect{};
        for (int k = 0; k < 2; ++k) {
            double z = model.output_bias[static_cast<std::size_t>(k)];
            for (std::size_t j = 0; j < act.size(); ++j) {
                z += act[j] * model.output_weights[j * 2 + static_cast<std::size_t>(k)];
            }
            expect[static_cast<std::size_t>(k)] = 1.0 / (1.0 + std::exp(-z));
        }

        const auto got = forward(model, x);
        CHECK(std::abs(got[0] - expect[0]) < 1e-12);
        CHECK(std::abs(got[1] - expect[1]) < 1e-12);
    }
}

TEST_CASE("loss of the zero model, worked by hand") {
    SplitMix64 rng(4);
    const DbnModel model = random_model(3, {2}, 0.0, rng);
    const std::vector<std::vector<double>> inputs = {{0.1, 0.2, 0.3},
                                                     {0.9, 0.8, 0.7}};
    const std::vector<int> targets = {0, 1};
    // outputs are (0.5, 0.5): per instance 0.5*(0.25 + 0.25) = 0.25
    CHECK(batch_loss(model, inputs, targets, Loss::SigmoidMse) ==
          doctest::Approx(0.25).epsilon(1e-15));
    // softmax of equal scores is one half: -log(0.5)
    CHECK(batch_loss(model, inputs, targets, Loss::SoftmaxCrossEntropy) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(batch_loss(model, inputs, {0}, Loss::SigmoidMse), DbnError);
    CHECK_THROWS_AS(batch_loss(model, inputs, {0, 7}, Loss::SigmoidMse), DbnError);
}

// Central-difference check over every parameter of a 4-3-2 model. The
// tolerance is pinned as |a - n| <= 1e-8 + 1e-5 * max(|a|, |n|): relative
// 1e-5 with an absolute floor where the gradient itself vanishes.
TEST_CASE("backprop gradients match central finite differences") {
    const double kEps = 1e-5;
    auto check_model = [&](std::uint64_t seed, Loss loss) {
        SplitMix64 rng(seed);
        DbnModel model = random_model(4, {3}, 0.5, rng);
        const auto inputs = unit_rows(6, 4, seed + 1000);
        std::vector<int> targets(6);
        for (auto& t : targets) t = rng.uniform() < 0.5 ? 0 : 1;

        const DbnGradients g = batch_gradient(model, inputs, targets, loss);

        int checked = 0, failed = 0;
        auto probe = [&](double* param, double analytic) {
            const double keep = *param;
            *param = keep + kEps;
            const double up = batch_loss(model, inputs, targets, loss);
            *param = keep - kEps;
            const double down = batch_loss(model, inputs, targets, loss);
            *param = keep;
            const double numeric = (up - down) / (2.0 * kEps);
            ++checked;
            if (std::abs(analytic - numeric) >
                1e-8 + 1e-5 * std::max(std::abs(analytic), std::abs(numeric))) {
                ++failed;
                MESSAGE("analytic ", analytic, " numeric ", numeric);
            }
        };

        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            RbmLayer& layer = model.layers[l];
            for (std::size_t k = 0; k < layer.weights.size(); ++k) {
                probe(&layer.weights[k], g.layer_weights[l][k]);
            }
            for (std::size_t j = 0; j < layer.hidden_bias.size(); ++j) {
                probe(&layer.hidden_bias[j], g.layer_hidden_bias[l][j]);
            }
        }
        for (std::size_t k = 0; k < model.output_weights.size(); ++k) {
            probe(&model.output_weights[k], g.output_weights[k]);
        }
        for (int k = 0; k < kOutputClasses; ++k) {
            probe(&model.output_bias[static_cast<std::size_t>(k)],
                  g.output_bias[static_cast<std::size_t>(k)]);
        }
        CHECK(checked == 4 * 3 + 3 + 3 * 2 + 2);
        CHECK(failed == 0);
    };

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        INFO("seed ", seed);
        check_model(seed, Loss::SigmoidMse);
    }
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        INFO("softmax seed ", seed);
        check_model(seed, Loss::SoftmaxCrossEntropy);
    }
}

TEST_CASE("fine_tune: zero epochs is the identity, training reduces loss") {
    SplitMix64 rng(8);
    DbnModel model = random_model(4, {3}, 0.5, rng);
    const DbnModel snapshot = model;
    const auto inputs = unit_rows(8, 4, 80);
    const std::vector<int> targets = {0, 1, 0, 1, 0, 1, 0, 1};

    TrainConfig none;
    none.fine_tune_epochs = 0;
    const TrainStats empty_stats = fine_tune(model, inputs, targets, none);
    CHECK(empty_stats.epoch_loss.empty());
    CHECK(model.layers[0].weights == snapshot.layers[0].weights);
    CHECK(model.output_weights == snapshot.output_weights);

    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.fine_tune_epochs = 50;
    cfg.batch_size = 4;
    const TrainStats stats = fine_tune(model, inputs, targets, cfg);
    REQUIRE(stats.epoch_loss.size() == 50);
    CHECK(stats.epoch_loss.back() < stats.epoch_loss.front());
}

TEST_CASE("fine_tune solves a linearly separable toy problem") {
    // class is decided by the first coordinate
    std::vector<std::vector<double>> inputs;
    std::vector<int> targets;
    SplitMix64 rng(14);
    for (int i = 0; i < 8; ++i) {
        std::vector<double> x(4);
        const int cls = i % 2;
        x[0] = cls == 0 ? 0.85 + 0.1 * rng.uniform() : 0.05 + 0.1 * rng.uniform();
        for (int j = 1; j < 4; ++j) x[static_cast<std::size_t>(j)] = rng.uniform();
        inputs.push_back(std::move(x));
        targets.push_back(cls);
    }

    SplitMix64 model_rng(15);
    DbnModel model = random_model(4, {6}, 0.5, model_rng);
    TrainConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.fine_tune_epochs = 300;
    cfg.batch_size = 4;
    fine_tune(model, inputs, targets, cfg);

    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto out = forward(model, inputs[i]);
        const int got = out[1] > out[0] ? 1 : 0;
        CHECK(got == targets[i]);
    }
}

TEST_CASE("CD-1 points uphill along the exact likelihood gradient") {
    // small smoke version; the acceptance suite runs the full trial count
    int positive = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
        SplitMix64 rng(500 + static_cast<std::uint64_t>(trial));
        RbmLayer layer = init_rbm(5, 4, 0.3, rng);
        for (auto& b : layer.visible_bias) b = 0.1 * rng.gaussian();
        for (auto& c : layer.hidden_bias) c = 0.1 * rng.gaussian();

        std::vector<std::vector<double>> batch(6, std::vector<double>(5));
        for (auto& row : batch) {
            for (auto& v : row) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        }

        const ExactRbmGradient exact = exact_rbm_gradient(layer, batch);
        const RbmUpdate cd = cd_update(layer, batch, 1, rng);

        double dot = 0.0;
        for (std::size_t k = 0; k < exact.d_weights.size(); ++k) {
            dot += exact.d_weights[k] * cd.d_weights[k];
        }
        for (std::size_t i = 0; i < exact.d_visible_bias.size(); ++i) {
            dot += exact.d_visible_bias[i] * cd.d_visible_bias[i];
        }
        for (std::size_t j = 0; j < exact.d_hidden_bias.size(); ++j) {
            dot += exact.d_hidden_bias[j] * cd.d_hidden_bias[j];
        }
        if (dot > 0.0) ++positive;
    }
    CHECK(positive >= 16);  // 80% on the small sample
}

TEST_CASE("train_dbn separates crafted feature populations") {
    std::vector<FeatureInstance> train;
    SplitMix64 rng(40);
    for (int i = 0; i < 40; ++i) {
        FeatureInstance inst;
        const bool asthma = i % 2 == 0;
        inst.subject_id = asthma ? "asthma01" : "healthy01";
        inst.label = asthma ? Label::Asthma : Label::Healthy;
        inst.imf_index = 1 + i % 4;
        FeatureVector& v = inst.vector;
        v.mean = (asthma ? 5.0 : 1.0) + 0.3 * rng.gaussian();
        v.energy = (asthma ? 20.0 : 4.0) + rng.gaussian();
        v.std_dev = rng.uniform();
        v.kurtosis = 3.0 + rng.gaussian() * 0.1;
        train.push_back(std::move(inst));
    }

    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.fine_tune_epochs = 80;
    cfg.pretrain_epochs = 20;
    cfg.batch_size = 1;  // per-instance updates converge well within 80 epochs
    cfg.seed = 6;
    const DbnModel model = train_dbn(train, {8, 4}, cfg);

    const auto predictions = predict(model, train);
    REQUIRE(predictions.size() == train.size());
    int correct = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (predictions[i] == train[i].label) ++correct;
    }
    CHECK(correct >= 38);  // >= 95% on the training set

    // the stored normalizer is the one fitted on the training instances
    const Normalizer expect = fit_normalizer(train);
    CHECK(model.normalizer.min == expect.min);
    CHECK(model.normalizer.max == expect.max);

    CHECK_THROWS_AS(train_dbn({}, {8}, cfg), DbnError);
    CHECK(predict(model, {}).empty());
}

TEST_CASE("a reloaded model reproduces forward outputs bit for bit") {
    TempDir dir("dbn");
    const auto p = dir.path() / "model.json";

    std::vector<FeatureInstance> train;
    SplitMix64 rng(41);
    for (int i = 0; i < 20; ++i) {
        FeatureInstance inst;
        inst.label = i % 2 == 0 ? Label::Asthma : Label::Healthy;
        FeatureVector& v = inst.vector;
        v.mean = rng.gaussian();
        v.median = rng.gaussian();
        v.energy = rng.uniform() * 10.0;
        train.push_back(std::move(inst));
    }
    TrainConfig cfg;
    cfg.fine_tune_epochs = 10;
    cfg.pretrain_epochs = 5;
    const DbnModel model = train_dbn(train, {5, 3}, cfg);

    save_model(model, p);
    const DbnModel back = load_model(p);

    REQUIRE(back.layers.size() == model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        CHECK(back.layers[l].weights == model.layers[l].weights);
        CHECK(back.layers[l].visible_bias == model.layers[l].visible_bias);
        CHECK(back.layers[l].hidden_bias == model.layers[l].hidden_bias);
    }
    CHECK(back.output_weights == model.output_weights);
    CHECK(back.output_bias == model.output_bias);
    CHECK(back.normalizer.min == model.normalizer.min);
    CHECK(back.normalizer.max == model.normalizer.max);

    SplitMix64 in_rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(12);
        for (auto& v : x) v = in_rng.uniform();
        const auto a = forward(model, x);
        const auto b = forward(back, x);
        CHECK(a[0] == b[0]);
        CHECK(a[1] == b[1]);
    }
}

TEST_CASE("model loader rejects damaged files") {
    TempDir dir("dbn");
    CHECK_THROWS_AS(load_model(dir.path() / "missing.json"), DbnError);

    const auto garbage = dir.path() / "garbage.json";
    {
        std::ofstream f(garbage);
        f << "{ not json";
    }
    CHECK_THROWS_AS(load_model(garbage), DbnError);

    // build a real model file, then damage it in targeted ways
    SplitMix64 rng(50);
    DbnModel model = random_model(3, {2}, 0.1, rng);
    const auto good = dir.path() / "good.json";
    save_model(model, good);

    nlohmann::json doc;
    {
        std::ifstream f(good);
        f >> doc;
    }

    auto write_doc = [&](const char* name, const nlohmann::json& j) {
        const auto p = dir.path() / name;
        std::ofstream f(p);
        f << j.dump();
        return p;
    };

    nlohmann::json wrong_version = doc;
    wrong_version["version"] = 99;
    try {
        load_model(write_doc("version.json", wrong_version));
        FAIL("expected throw");
    } catch (const DbnError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }

    nlohmann::json ragged = doc;
    ragged["layers"][0]["W"][0] = {1.0};  // row width no longer matches
    CHECK_THROWS_AS(load_model(write_doc("ragged.json", ragged)), DbnError);

    nlohmann::json missing_field = doc;
    missing_field.erase("normalizer");
    CHECK_THROWS_AS(load_model(write_doc("nofield.json", missing_field)), DbnError);

    nlohmann::json bad_sizes = doc;
    bad_sizes["sizes"][0] = 17;
    CHECK_THROWS_AS(load_model(write_doc("sizes.json", bad_sizes)), DbnError);
}
