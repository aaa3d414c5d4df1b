#include "respir/synth.hpp"

#include <cmath>
#include <cstdio>

#include "respir/rng.hpp"
#include "respir/wav.hpp"

namespace respir {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kPeak = 0.9;
// Normal vesicular breath sounds are heard almost entirely during
// inspiration; expiration is faint. The low level also leaves the
// expiratory wheeze headroom before samples clip.
constexpr double kExpirationLevel = 0.25;

void check_common(const SynthConfig& c) {
    if (c.duration_s <= 0.0 || c.breath_cycle_s <= 0.0) {
        throw SynthError(SynthError::Code::InvalidDuration,
                         "duration and breath cycle must be positive");
    }
    if (c.sample_rate_hz < 2000) {
        throw SynthError(SynthError::Code::InvalidBand,
                         "sample rate below 2000 Hz");
    }
    if (c.noise_band_low_hz <= 0.0 ||
        c.noise_band_low_hz >= c.noise_band_high_hz ||
        c.noise_band_high_hz >= c.sample_rate_hz / 2.0) {
        throw SynthError(SynthError::Code::InvalidBand,
                         "noise band must satisfy 0 < low < high < rate/2");
    }
}

// Raised cosine per half cycle: silent at phase boundaries, peaking at the
// middle of inspiration (level 1) and expiration (level kExpirationLevel).
double breath_envelope(double t, double cycle_s) {
    const double half = cycle_s / 2.0;
    double tau = std::fmod(t, cycle_s);
    double level = 1.0;
    if (tau >= half) {
        tau -= half;
        level = kExpirationLevel;
    }
    return level * 0.5 * (1.0 - std::cos(2.0 * kPi * tau / half));
}

}  // namespace

void Biquad::apply(std::vector<double>& x) const {
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
        double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = v;
        y2 = y1;
        y1 = y;
        v = y;
    }
}

Biquad butter2_lowpass(double cutoff_hz, double rate_hz) {
    const double k = std::tan(kPi * cutoff_hz / rate_hz);
    const double norm = 1.0 + std::sqrt(2.0) * k + k * k;
    Biquad q{};
    q.b0 = k * k / norm;
    q.b1 = 2.0 * q.b0;
    q.b2 = q.b0;
    q.a1 = 2.0 * (k * k - 1.0) / norm;
    q.a2 = (1.0 - std::sqrt(2.0) * k + k * k) / norm;
    return q;
}

Biquad butter2_highpass(double cutoff_hz, double rate_hz) {
    const double k = std::tan(kPi * cutoff_hz / rate_hz);
    const double norm = 1.0 + std::sqrt(2.0) * k + k * k;
    Biquad q{};
    q.b0 = 1.0 / norm;
    q.b1 = -2.0 * q.b0;
    q.b2 = q.b0;
    q.a1 = 2.0 * (k * k - 1.0) / norm;
    q.a2 = (1.0 - std::sqrt(2.0) * k + k * k) / norm;
    return q;
}

Signal gen_normal(const SynthConfig& config) {
    check_common(config);
    const auto n = static_cast<std::size_t>(
        std::llround(config.duration_s * config.sample_rate_hz));

    SplitMix64 rng(config.seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.gaussian();

    butter2_highpass(config.noise_band_low_hz, config.sample_rate_hz).apply(x);
    butter2_lowpass(config.noise_band_high_hz, config.sample_rate_hz).apply(x);

    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / config.sample_rate_hz;
        x[i] *= breath_envelope(t, config.breath_cycle_s);
        peak = std::max(peak, std::abs(x[i]));
    }
    if (peak > 0.0) {
        const double scale = kPeak / peak;
        for (auto& v : x) v *= scale;
    }

    Signal s;
    s.samples = std::move(x);
    s.sample_rate_hz = config.sample_rate_hz;
    return s;
}

Signal gen_asthmatic(const SynthConfig& config) {
    if (config.wheeze_freq_hz < 400.0) {
        throw SynthError(SynthError::Code::WheezeBelowThreshold,
                         "wheeze frequency below the 400 Hz threshold");
    }
    if (config.wheeze_duration_ms < 250.0) {
        throw SynthError(SynthError::Code::WheezeBelowThreshold,
                         "wheeze duration below the 250 ms threshold");
    }
    // gain 0 is allowed and degenerates to the normal generator
    if (!(config.wheeze_gain >= 0.0 && config.wheeze_gain <= 1.0)) {
        throw SynthError(SynthError::Code::WheezeBelowThreshold,
                         "wheeze gain must be in [0, 1]");
    }
    const double half = config.breath_cycle_s / 2.0;
    const double wheeze_s = config.wheeze_duration_ms / 1000.0;
    if (wheeze_s > half) {
        throw SynthError(SynthError::Code::InvalidDuration,
                         "wheeze longer than the expiratory half-cycle");
    }

    Signal s = gen_normal(config);
    const std::size_t n = s.samples.size();
    const int rate = config.sample_rate_hz;
    const auto burst_len = static_cast<std::size_t>(std::llround(wheeze_s * rate));

    const int n_cycles = static_cast<int>(
        std::ceil(config.duration_s / config.breath_cycle_s));
    for (int c = 0; c < n_cycles; ++c) {
        // centered in the expiratory half-cycle
        const double t0 = c * config.breath_cycle_s + half + (half - wheeze_s) / 2.0;
        const auto i0 = static_cast<std::size_t>(std::llround(t0 * rate));
        if (i0 + burst_len > n) break;
        for (std::size_t j = 0; j < burst_len; ++j) {
            const double hann =
                0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(j) /
                                      static_cast<double>(burst_len - 1)));
            const double tone =
                std::sin(2.0 * kPi * config.wheeze_freq_hz * static_cast<double>(j) / rate);
            s.samples[i0 + j] += config.wheeze_gain * hann * tone;
        }
    }

    std::size_t clipped = 0;
    for (auto& v : s.samples) {
        if (v > 1.0) {
            v = 1.0;
            ++clipped;
        } else if (v < -1.0) {
            v = -1.0;
            ++clipped;
        }
    }
    if (static_cast<double>(clipped) > 0.001 * static_cast<double>(n)) {
        throw SynthError(SynthError::Code::ExcessiveClipping,
                         "more than 0.1% of samples would clip; lower wheeze_gain");
    }
    return s;
}

RecordingManifest gen_dataset(int n_per_class, const SynthConfig& config,
                              const std::filesystem::path& out_dir) {
    if (n_per_class < 1) {
        throw SynthError(SynthError::Code::InvalidDuration,
                         "n_per_class must be at least 1");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw SynthError(SynthError::Code::UnwritableDirectory,
                         "cannot create output directory: " + out_dir.string());
    }

    RecordingManifest manifest;
    for (Label label : {Label::Asthma, Label::Healthy}) {
        for (int i = 1; i <= n_per_class; ++i) {
            char id[32];
            std::snprintf(id, sizeof(id), "%s%02d",
                          std::string(label_name(label)).c_str(), i);
            for (AuscultationSite site : all_sites()) {
                SynthConfig c = config;
                const std::string key =
                    std::string(id) + "/" + std::string(site_name(site));
                c.seed = config.seed ^ fnv1a64(key);

                Signal s = label == Label::Asthma ? gen_asthmatic(c) : gen_normal(c);
                s.subject_id = id;
                s.channel = site;

                const std::string filename =
                    std::string(id) + "_" + std::string(site_name(site)) + ".wav";
                write_wav(out_dir / filename, s);

                ManifestEntry e;
                e.path = filename;
                e.subject = id;
                e.channel = site;
                e.label = label;
                manifest.entries.push_back(std::move(e));
            }
        }
    }
    save_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

}  // namespace respir
