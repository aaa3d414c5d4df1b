#include "respir/eval.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "respir/rng.hpp"

namespace respir {

FoldPlan make_folds(const std::vector<std::pair<std::string, Label>>& subjects,
                    int k, std::uint64_t seed) {
    if (k < 2) throw EvalError("k must be at least 2");
    if (subjects.empty()) throw EvalError("no subjects to assign");
    {
        std::set<std::string> seen;
        for (const auto& [id, label] : subjects) {
            (void)label;
            if (!seen.insert(id).second) {
                throw EvalError("duplicate subject id: " + id);
            }
        }
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    SplitMix64 rng(seed);
    for (Label label : {Label::Asthma, Label::Healthy}) {
        std::vector<std::string> ids;
        for (const auto& [id, l] : subjects) {
            if (l == label) ids.push_back(id);
        }
        // sort before shuffling so the plan depends only on the subject SET
        std::sort(ids.begin(), ids.end());
        shuffle(ids, rng);
        if (!ids.empty() && static_cast<int>(ids.size()) < k) {
            plan.warnings.push_back(std::string(label_name(label)) +
                                    " class has fewer subjects than folds; "
                                    "some folds will lack that class");
        }
        for (std::size_t i = 0; i < ids.size(); ++i) {
            plan.assignments[ids[i]] = static_cast<int>(i % k);
        }
    }
    return plan;
}

void ConfusionMatrix::add(Label actual, Label predicted) {
    if (actual == Label::Asthma) {
        predicted == Label::Asthma ? ++tp : ++fn;
    } else {
        predicted == Label::Asthma ? ++fp : ++tn;
    }
}

namespace {

std::optional<double> ratio(long long num, long long den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics compute_metrics(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw EvalError("empty confusion matrix");
    Metrics m;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
    m.specificity = ratio(cm.tn, cm.tn + cm.fp);
    return m;
}

Metrics compute_metrics_alt(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw EvalError("empty confusion matrix");
    Metrics m;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.sensitivity = ratio(cm.tp, cm.tp + cm.fp);
    m.specificity = ratio(cm.tn, cm.tn + cm.fp);
    return m;
}

CvResult cross_validate(const std::vector<FeatureInstance>& instances, int k,
                        std::uint64_t seed,
                        const std::vector<int>& hidden_sizes,
                        const TrainConfig& train_config) {
    if (instances.empty()) throw EvalError("no instances to evaluate");

    // canonical order: caller shuffling must not change training batches
    std::vector<FeatureInstance> ordered = instances;
    std::sort(ordered.begin(), ordered.end(),
              [](const FeatureInstance& a, const FeatureInstance& b) {
                  return std::tie(a.subject_id, a.channel, a.imf_index) <
                         std::tie(b.subject_id, b.channel, b.imf_index);
              });

    std::map<std::string, Label> subject_labels;
    for (const FeatureInstance& inst : ordered) {
        auto [it, inserted] = subject_labels.emplace(inst.subject_id, inst.label);
        if (!inserted && it->second != inst.label) {
            throw EvalError("subject " + inst.subject_id +
                            " appears with both labels");
        }
    }
    std::vector<std::pair<std::string, Label>> subjects(subject_labels.begin(),
                                                        subject_labels.end());

    CvResult result;
    result.plan = make_folds(subjects, k, seed);

    for (int fold = 0; fold < k; ++fold) {
        std::vector<FeatureInstance> train, test;
        std::set<std::string> train_subjects, test_subjects;
        for (const FeatureInstance& inst : ordered) {
            if (result.plan.assignments.at(inst.subject_id) == fold) {
                test.push_back(inst);
                test_subjects.insert(inst.subject_id);
            } else {
                train.push_back(inst);
                train_subjects.insert(inst.subject_id);
            }
        }
        if (test.empty()) {
            throw EvalError("fold " + std::to_string(fold) +
                            " has no test instances");
        }
        if (train.empty()) {
            throw EvalError("fold " + std::to_string(fold) +
                            " has no training instances");
        }
        for (const std::string& s : test_subjects) {
            if (train_subjects.count(s)) {
                throw EvalError("subject " + s + " leaks across fold " +
                                    std::to_string(fold),
                                false);
            }
        }

        TrainConfig fold_config = train_config;
        fold_config.seed = seed + static_cast<std::uint64_t>(fold);
        DbnModel model = train_dbn(train, hidden_sizes, fold_config);

        FoldResult fr;
        fr.fold = fold;
        const std::vector<Label> predictions = predict(model, test);
        for (std::size_t i = 0; i < test.size(); ++i) {
            fr.cm.add(test[i].label, predictions[i]);
            result.pooled_cm.add(test[i].label, predictions[i]);
        }
        fr.metrics = compute_metrics(fr.cm);
        result.folds.push_back(std::move(fr));
        result.fold_models.push_back(std::move(model));
    }

    result.pooled = compute_metrics(result.pooled_cm);
    result.pooled_alt = compute_metrics_alt(result.pooled_cm);
    return result;
}

}  // namespace respir
