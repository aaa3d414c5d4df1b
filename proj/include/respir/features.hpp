#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "respir/emd.hpp"
#include "respir/error.hpp"
#include "respir/signal.hpp"

namespace respir {

class FeatureError : public Error {
public:
    using Error::Error;
};

inline constexpr int kFeatureCount = 12;

// The 12 per-IMF statistics, population (1/N) convention throughout.
// "kurtosis" is Pearson m4/m2^2 (un-excess); the bare "moment" is the third
// central moment and the "cumulant" the fourth-order one (m4 - 3*m2^2) —
// both isolated here so a reinterpretation stays a one-line change.
struct FeatureVector {
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0;
    double maximum = 0.0;
    double minimum = 0.0;
    double variance = 0.0;
    double mode_binned = 0.0;       // center of densest of 100 equal bins
    double corr_with_source = 0.0;  // Pearson vs the original recording
    double kurtosis = 0.0;
    double third_central_moment = 0.0;
    double fourth_cumulant = 0.0;
    double energy = 0.0;  // sum of squares
    // Constant series (or constant source) leaves correlation/kurtosis
    // undefined; they are reported as 0 and this flag is set instead of
    // failing, so batch pipelines stay total.
    bool degenerate = false;

    std::array<double, kFeatureCount> as_array() const {
        return {mean,     median,           std_dev,  maximum,
                minimum,  variance,         mode_binned, corr_with_source,
                kurtosis, third_central_moment, fourth_cumulant, energy};
    }
};

// series: the IMF (or its instantaneous amplitude); source: the original
// recording, correlation partner. Both must have the same length >= 2.
FeatureVector compute_features(const std::vector<double>& series,
                               const std::vector<double>& source);

struct FeatureInstance {
    std::string subject_id;
    AuscultationSite channel = AuscultationSite::L1;
    int imf_index = 0;  // 1-based
    FeatureVector vector;
    Label label = Label::Healthy;
};

// What the statistics are computed on: the raw IMF samples (default) or the
// IMF's instantaneous (Hilbert) amplitude.
enum class FeatureSource { Imf, Envelope };

// One instance per IMF except the last, which is treated as trend. Fewer
// than 2 IMFs yields an empty list (the recording contributes nothing).
std::vector<FeatureInstance> extract_instances(
    const Decomposition& decomposition, const Signal& source,
    const std::string& subject_id, Label label,
    FeatureSource feature_source = FeatureSource::Imf);

// Per-feature min/max learned from training data only.
struct Normalizer {
    std::array<double, kFeatureCount> min{};
    std::array<double, kFeatureCount> max{};
};

Normalizer fit_normalizer(const std::vector<FeatureInstance>& train);

// Min-max map to [0, 1]; out-of-range values clamp, and a constant training
// feature (min == max) maps to 0.5.
std::array<double, kFeatureCount> apply_normalizer(const FeatureVector& v,
                                                   const Normalizer& n);

// CSV with header subject,channel,imf,label,mean,...,energy; numbers carry
// 17 significant digits so a round trip is value-exact.
void save_features_csv(const std::vector<FeatureInstance>& instances,
                       const std::filesystem::path& path);
std::vector<FeatureInstance> load_features_csv(
    const std::filesystem::path& path);

}  // namespace respir
