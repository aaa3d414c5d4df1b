#include "respir/hilbert.hpp"

#include <cmath>
#include <complex>

#include "respir/fft.hpp"

namespace respir {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

AnalyticSignal hilbert_transform(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 2) {
        throw HilbertError("series must have at least 2 samples", false);
    }
    std::vector<std::complex<double>> spec(n);
    for (std::size_t i = 0; i < n; ++i) spec[i] = series[i];
    fft(spec, false);

    // Analytic-signal weights: keep DC (and Nyquist for even n), double the
    // positive frequencies, zero the negative ones.
    const std::size_t half = n / 2;
    for (std::size_t k = 1; k < n; ++k) {
        if (n % 2 == 0 && k == half) continue;  // Nyquist stays as-is
        if (k < half || (n % 2 == 1 && k == half)) {
            spec[k] *= 2.0;
        } else {
            spec[k] = 0.0;
        }
    }
    fft(spec, true);

    AnalyticSignal out;
    out.real_part = series;
    out.imag_part.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.imag_part[i] = spec[i].imag();
    return out;
}

InstantAttributes instant_attributes(const AnalyticSignal& analytic,
                                     int sample_rate_hz) {
    if (analytic.real_part.size() != analytic.imag_part.size()) {
        throw HilbertError("analytic signal parts differ in length", false);
    }
    if (sample_rate_hz <= 0) {
        throw HilbertError("sample rate must be positive", false);
    }
    const std::size_t n = analytic.real_part.size();
    InstantAttributes out;
    out.amplitude.resize(n);
    out.phase.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double re = analytic.real_part[i];
        const double im = analytic.imag_part[i];
        out.amplitude[i] = std::hypot(re, im);
        out.phase[i] = std::atan2(im, re);
    }
    // unwrap: pull successive phase jumps beyond pi back by 2*pi
    double offset = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double raw = out.phase[i];
        double prev_raw = out.phase[i - 1] - offset;
        double delta = raw - prev_raw;
        while (delta > kPi) {
            offset -= 2.0 * kPi;
            delta -= 2.0 * kPi;
        }
        while (delta < -kPi) {
            offset += 2.0 * kPi;
            delta += 2.0 * kPi;
        }
        out.phase[i] = raw + offset;
    }
    if (n > 1) {
        out.frequency_hz.resize(n - 1);
        const double scale = sample_rate_hz / (2.0 * kPi);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            out.frequency_hz[i] = (out.phase[i + 1] - out.phase[i]) * scale;
        }
    }
    return out;
}

std::vector<InstantAttributes> hilbert_spectrum(
    const Decomposition& decomposition, int sample_rate_hz) {
    if (decomposition.imfs.empty()) {
        throw HilbertError("decomposition has no IMFs to analyze");
    }
    std::vector<InstantAttributes> out;
    out.reserve(decomposition.imfs.size());
    for (const Imf& imf : decomposition.imfs) {
        out.push_back(
            instant_attributes(hilbert_transform(imf.values), sample_rate_hz));
    }
    return out;
}

}  // namespace respir
