#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "respir/dbn.hpp"
#include "respir/error.hpp"
#include "respir/features.hpp"

namespace respir {

class EvalError : public Error {
public:
    using Error::Error;
};

// Subject-level fold assignment: subjects are shuffled per class with the
// seeded PRNG and dealt round-robin, so no subject's instances can land in
// both train and test of any fold.
struct FoldPlan {
    int k = 5;
    std::uint64_t seed = 0;
    std::map<std::string, int> assignments;  // subject id -> fold
    std::vector<std::string> warnings;       // e.g. a class with < k subjects
};

FoldPlan make_folds(const std::vector<std::pair<std::string, Label>>& subjects,
                    int k, std::uint64_t seed);

// Positive class = asthma.
struct ConfusionMatrix {
    long long tp = 0, fn = 0, fp = 0, tn = 0;

    long long total() const { return tp + fn + fp + tn; }
    void add(Label actual, Label predicted);
};

// Ratios with a zero denominator are reported absent, never NaN.
struct Metrics {
    std::optional<double> accuracy;     // (tp+tn)/total
    std::optional<double> sensitivity;  // tp/(tp+fn)
    std::optional<double> specificity;  // tn/(tn+fp)
};

Metrics compute_metrics(const ConfusionMatrix& cm);

// Alternate convention found in some reports: "sensitivity" normalized by
// predicted positives (tp/(tp+fp), i.e. precision) instead of actual
// positives; specificity and accuracy as usual. Reported alongside the
// standard line so results stay comparable either way.
Metrics compute_metrics_alt(const ConfusionMatrix& cm);

struct FoldResult {
    int fold = 0;
    ConfusionMatrix cm;
    Metrics metrics;
};

struct CvResult {
    FoldPlan plan;
    std::vector<FoldResult> folds;
    ConfusionMatrix pooled_cm;
    Metrics pooled;
    Metrics pooled_alt;
    std::vector<DbnModel> fold_models;  // one per fold, in fold order
};

// For each fold: fit the normalizer and train on the other folds' instances
// only, predict the held-out instances, and pool the confusion matrices.
// Instances are first put into a canonical (subject, channel, imf) order so
// the caller's ordering cannot change training batches or results. Per-fold
// training seed = seed + fold index.
CvResult cross_validate(const std::vector<FeatureInstance>& instances, int k,
                        std::uint64_t seed,
                        const std::vector<int>& hidden_sizes,
                        const TrainConfig& train_config);

}  // namespace respir
