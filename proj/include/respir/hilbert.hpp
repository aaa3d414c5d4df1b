#pragma once

#include <vector>

#include "respir/emd.hpp"
#include "respir/error.hpp"

namespace respir {

class HilbertError : public Error {
public:
    using Error::Error;
};

// Real series plus its Hilbert transform; real + i*imag is the analytic
// signal, whose spectrum vanishes on negative-frequency bins.
struct AnalyticSignal {
    std::vector<double> real_part;
    std::vector<double> imag_part;
};

struct InstantAttributes {
    std::vector<double> amplitude;     // modulus, length N
    std::vector<double> phase;         // unwrapped radians, length N
    std::vector<double> frequency_hz;  // forward difference, length N-1
};

// FFT method: transform, zero the negative-frequency bins, double the
// positive ones (DC and Nyquist untouched), inverse-transform. The
// imaginary part of the result is the Hilbert transform. Length must be >= 2.
AnalyticSignal hilbert_transform(const std::vector<double>& series);

InstantAttributes instant_attributes(const AnalyticSignal& analytic,
                                     int sample_rate_hz);

// Per-IMF instantaneous attributes, in IMF order. Empty decomposition is an
// error (nothing to analyze).
std::vector<InstantAttributes> hilbert_spectrum(
    const Decomposition& decomposition, int sample_rate_hz);

}  // namespace respir
