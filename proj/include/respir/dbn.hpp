#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "respir/error.hpp"
#include "respir/features.hpp"
#include "respir/rng.hpp"
#include "respir/signal.hpp"

namespace respir {

class DbnError : public Error {
public:
    using Error::Error;
};

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kOutputClasses = 2;  // index 0 = asthma, 1 = healthy

double sigmoid(double x);  // numerically stable for large |x|

// One restricted Boltzmann machine. Weights are row-major visible x hidden.
// The visible bias participates only in generative (CD) training and is
// kept for serialization; discriminative forward passes never read it.
struct RbmLayer {
    int visible = 0;
    int hidden = 0;
    std::vector<double> weights;
    std::vector<double> visible_bias;
    std::vector<double> hidden_bias;
};

// Hidden activation probabilities sigmoid(W^T v + c).
std::vector<double> hidden_probs(const RbmLayer& layer,
                                 const std::vector<double>& v);
// Visible reconstruction probabilities sigmoid(W h + b).
std::vector<double> visible_probs(const RbmLayer& layer,
                                  const std::vector<double>& h);

enum class Loss { SigmoidMse, SoftmaxCrossEntropy };

struct TrainConfig {
    double learning_rate = 0.2;
    int fine_tune_epochs = 100;
    int pretrain_epochs = 50;
    int cd_steps = 1;
    int batch_size = 10;
    std::uint64_t seed = 0;
    double weight_init_std = 0.01;
    Loss loss = Loss::SigmoidMse;
};

void validate(const TrainConfig& config);

// Batch-averaged contrastive-divergence statistics, before the learning-rate
// scale. Recipe (CD-1): h0p = sigmoid(W^T v0 + c); h0s ~ Bernoulli(h0p);
// v1 = sigmoid(W h0s + b) kept as probabilities; h1p = sigmoid(W^T v1 + c);
// d_weights = mean(v0 h0p^T - v1 h1p^T), d_visible_bias = mean(v0 - v1),
// d_hidden_bias = mean(h0p - h1p). For cd_steps > 1 the chain alternates
// sampled hidden states with visible probabilities before the final stats.
struct RbmUpdate {
    std::vector<double> d_weights;
    std::vector<double> d_visible_bias;
    std::vector<double> d_hidden_bias;
};
RbmUpdate cd_update(const RbmLayer& layer,
                    const std::vector<std::vector<double>>& batch,
                    int cd_steps, SplitMix64& rng);

// Weights drawn N(0, init_std^2) row by row, biases zero.
RbmLayer init_rbm(int visible, int hidden, double init_std, SplitMix64& rng);

// CD training: pretrain_epochs passes over the data in fixed batch order
// (no shuffling — keeps runs bit-reproducible), each batch applying
// learning_rate times the cd_update.
RbmLayer train_rbm(const std::vector<std::vector<double>>& data, int hidden,
                   const TrainConfig& config, SplitMix64& rng);

// Mean reconstruction cross-entropy over the data set; the quantity CD is
// expected to push down.
double reconstruction_cross_entropy(
    const RbmLayer& layer, const std::vector<std::vector<double>>& data);

// Greedy layer-wise pretraining: each trained layer's hidden probabilities
// become the next layer's data. Inputs must already be normalized to [0,1]
// (they are used directly as Bernoulli activation probabilities).
std::vector<RbmLayer> pretrain(const std::vector<std::vector<double>>& data,
                               const std::vector<int>& sizes,
                               const TrainConfig& config);

struct DbnModel {
    int format_version = kModelFormatVersion;
    std::vector<RbmLayer> layers;        // e.g. 12->160, 160->130
    std::vector<double> output_weights;  // last hidden x kOutputClasses
    std::array<double, kOutputClasses> output_bias{};
    Normalizer normalizer;

    int input_width() const { return layers.empty() ? 0 : layers.front().visible; }
    int last_hidden() const { return layers.empty() ? 0 : layers.back().hidden; }
};

// Random model (no pretraining), mostly for tests and toy problems.
DbnModel random_model(int input_width, const std::vector<int>& hidden_sizes,
                      double init_std, SplitMix64& rng);

// Sigmoid propagation through the hidden layers and the output layer
// (SigmoidMse), or softmax outputs when the model was trained with
// cross-entropy. Throws on width mismatch or non-finite input.
std::array<double, kOutputClasses> forward(const DbnModel& model,
                                           const std::vector<double>& input,
                                           Loss loss = Loss::SigmoidMse);

// Mean per-instance loss: SigmoidMse is 0.5 * sum_k (out_k - target_k)^2,
// SoftmaxCrossEntropy is -log p_target.
double batch_loss(const DbnModel& model,
                  const std::vector<std::vector<double>>& inputs,
                  const std::vector<int>& targets, Loss loss);

// Gradients of batch_loss w.r.t. the discriminative parameters, shaped like
// the model (visible biases excluded — they are not on the forward path).
struct DbnGradients {
    std::vector<std::vector<double>> layer_weights;
    std::vector<std::vector<double>> layer_hidden_bias;
    std::vector<double> output_weights;
    std::array<double, kOutputClasses> output_bias{};
};
DbnGradients batch_gradient(const DbnModel& model,
                            const std::vector<std::vector<double>>& inputs,
                            const std::vector<int>& targets, Loss loss);

struct TrainStats {
    std::vector<double> epoch_loss;  // full-train loss after each epoch
};

// Mini-batch gradient descent in fixed batch order. Targets are class
// indices (0 = asthma, 1 = healthy).
TrainStats fine_tune(DbnModel& model,
                     const std::vector<std::vector<double>>& inputs,
                     const std::vector<int>& targets,
                     const TrainConfig& config);

// Full training recipe on labeled instances: fit the normalizer, pretrain
// the RBM stack, attach a randomly initialized output layer, fine-tune.
DbnModel train_dbn(const std::vector<FeatureInstance>& train,
                   const std::vector<int>& hidden_sizes,
                   const TrainConfig& config);

Label predict_one(const DbnModel& model, const FeatureInstance& instance);
std::vector<Label> predict(const DbnModel& model,
                           const std::vector<FeatureInstance>& instances);

// Versioned JSON round trip; reloaded models reproduce forward outputs
// bit for bit.
void save_model(const DbnModel& model, const std::filesystem::path& path);
DbnModel load_model(const std::filesystem::path& path);

}  // namespace respir
