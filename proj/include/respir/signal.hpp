#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "respir/error.hpp"

namespace respir {

// The 12 standardized auscultation sites: six regions, left/right.
enum class AuscultationSite {
    L1, L2, L3, L4, L5, L6,
    R1, R2, R3, R4, R5, R6,
};

inline constexpr int kSiteCount = 12;

const std::array<AuscultationSite, kSiteCount>& all_sites();
std::string_view site_name(AuscultationSite site);
AuscultationSite site_from_name(std::string_view name);
// Region of the chest/back the site listens to ("posterior-upper" etc).
std::string_view site_region(AuscultationSite site);

enum class Label { Asthma, Healthy };

std::string_view label_name(Label label);
Label label_from_name(std::string_view name);

class SignalError : public Error {
public:
    using Error::Error;
};

// Mono auscultation waveform, samples normalized to [-1, 1].
struct Signal {
    std::vector<double> samples;
    int sample_rate_hz = 0;
    AuscultationSite channel = AuscultationSite::L1;
    std::string subject_id;

    double duration_s() const {
        return sample_rate_hz > 0
                   ? static_cast<double>(samples.size()) / sample_rate_hz
                   : 0.0;
    }
};

// Throws SignalError unless samples are non-empty, inside [-1, 1], and the
// rate is at least 2000 Hz (keeps wheeze content below Nyquist with margin).
void validate(const Signal& signal);

// First floor(seconds * rate) samples, metadata preserved.
Signal segment(const Signal& signal, double seconds);

}  // namespace respir
