#pragma once

#include <cstdint>
#include <filesystem>

#include "respir/error.hpp"
#include "respir/manifest.hpp"
#include "respir/signal.hpp"

namespace respir {

class SynthError : public Error {
public:
    enum class Code {
        InvalidBand,
        InvalidDuration,
        WheezeBelowThreshold,
        ExcessiveClipping,
        UnwritableDirectory,
    };

    SynthError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

// Generator parameters. Wheeze constraints follow the clinical definition:
// tonal component of at least 250 ms at 400 Hz or above.
struct SynthConfig {
    int sample_rate_hz = 4000;
    double duration_s = 10.0;
    double breath_cycle_s = 4.0;
    double noise_band_low_hz = 100.0;
    double noise_band_high_hz = 1000.0;
    double wheeze_freq_hz = 450.0;
    double wheeze_duration_ms = 300.0;
    double wheeze_gain = 0.5;
    std::uint64_t seed = 0;
};

// One direct-form-I biquad section. Coefficients for the default generator
// band are listed in docs/determinism.md to 12 significant digits.
struct Biquad {
    double b0, b1, b2, a1, a2;

    void apply(std::vector<double>& x) const;
};

Biquad butter2_lowpass(double cutoff_hz, double rate_hz);
Biquad butter2_highpass(double cutoff_hz, double rate_hz);

// Band-limited noise amplitude-modulated by a raised-cosine breath envelope;
// peak normalized to 0.9. Bit-reproducible for a fixed seed.
Signal gen_normal(const SynthConfig& config);

// gen_normal plus a Hann-windowed wheeze tone centered in each expiratory
// half-cycle. Errors if wheeze parameters sit below the clinical thresholds
// or if more than 0.1% of samples would clip.
Signal gen_asthmatic(const SynthConfig& config);

// Writes n_per_class asthma + n_per_class healthy subjects, 12 channels
// each, as WAVs plus manifest.json under out_dir. Per-channel seed is
// config.seed XOR fnv1a64(subject + "/" + channel).
RecordingManifest gen_dataset(int n_per_class, const SynthConfig& config,
                              const std::filesystem::path& out_dir);

}  // namespace respir
