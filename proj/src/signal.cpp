#include "respir/signal.hpp"

#include <cmath>
#include <cstdlib>

namespace respir {

namespace {
constexpr std::array<std::string_view, kSiteCount> kSiteNames = {
    "L1", "L2", "L3", "L4", "L5", "L6",
    "R1", "R2", "R3", "R4", "R5", "R6",
};

constexpr std::array<std::string_view, 6> kRegions = {
    "posterior-upper", "posterior-middle", "posterior-lower",
    "costophrenic",    "anterior-upper",   "anterior-lower",
};
}  // namespace

const std::array<AuscultationSite, kSiteCount>& all_sites() {
    static const std::array<AuscultationSite, kSiteCount> sites = [] {
        std::array<AuscultationSite, kSiteCount> s{};
        for (int i = 0; i < kSiteCount; ++i) s[i] = static_cast<AuscultationSite>(i);
        return s;
    }();
    return sites;
}

std::string_view site_name(AuscultationSite site) {
    return kSiteNames[static_cast<int>(site)];
}

AuscultationSite site_from_name(std::string_view name) {
    for (int i = 0; i < kSiteCount; ++i) {
        if (kSiteNames[i] == name) return static_cast<AuscultationSite>(i);
    }
    throw SignalError("unknown auscultation site: " + std::string(name));
}

std::string_view site_region(AuscultationSite site) {
    return kRegions[static_cast<int>(site) % 6];
}

std::string_view label_name(Label label) {
    return label == Label::Asthma ? "asthma" : "healthy";
}

Label label_from_name(std::string_view name) {
    if (name == "asthma") return Label::Asthma;
    if (name == "healthy") return Label::Healthy;
    throw SignalError("unknown label: " + std::string(name));
}

void validate(const Signal& signal) {
    if (signal.samples.empty()) throw SignalError("signal has no samples");
    if (signal.sample_rate_hz < 2000) {
        throw SignalError("sample rate " + std::to_string(signal.sample_rate_hz) +
                          " Hz below the 2000 Hz minimum");
    }
    for (double v : signal.samples) {
        if (!(v >= -1.0 && v <= 1.0)) {
            throw SignalError("sample outside [-1, 1]");
        }
    }
}

Signal segment(const Signal& signal, double seconds) {
    if (seconds <= 0.0) throw SignalError("segment length must be positive");
    auto want = static_cast<std::size_t>(seconds * signal.sample_rate_hz);
    if (signal.samples.size() < want) {
        throw SignalError("recording of " + std::to_string(signal.samples.size()) +
                          " samples shorter than requested " +
                          std::to_string(want) + "-sample window");
    }
    Signal out = signal;
    out.samples.resize(want);
    return out;
}

}  // namespace respir
