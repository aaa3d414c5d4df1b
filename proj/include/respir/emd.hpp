#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "respir/error.hpp"
#include "respir/signal.hpp"

namespace respir {

class EmdError : public Error {
public:
    using Error::Error;
};

enum class Boundary { Mirror };

struct SiftConfig {
    double sd_threshold = 0.25;   // Huang's SD stopping rule
    int max_sift_iterations = 100;
    int max_imfs = 10;
    Boundary boundary = Boundary::Mirror;
    // Decomposition also stops once the residual is this many dB weaker than
    // the input (10*log10(E_in/E_res) > cap). Without it, broadband sounds
    // keep shedding low-energy slow modes until they hit max_imfs.
    double max_energy_ratio_db = 20.0;
};

void validate(const SiftConfig& config);

struct Imf {
    std::vector<double> values;
    int index = 0;            // 1-based position in the decomposition
    int sift_iterations = 0;  // sift passes that produced it
};

struct Decomposition {
    std::vector<Imf> imfs;
    std::vector<double> residual;
};

struct ExtremaIndices {
    std::vector<std::size_t> maxima;
    std::vector<std::size_t> minima;
};

// Strict three-point local extrema. A plateau of equal samples counts once,
// at its midpoint index (rounded down). Throws EmdError for length < 3.
ExtremaIndices find_extrema(const std::vector<double>& series);

// Sign changes, ignoring exact zeros (a zero run between opposite signs
// counts as one crossing).
int zero_crossings(const std::vector<double>& series);

bool is_monotone(const std::vector<double>& series);

// Natural cubic spline through the extrema, evaluated at sample indices
// 0..length-1. Before fitting, the two extrema nearest each endpoint are
// reflected about that endpoint (mirror extension) to damp end swings.
// Returns nullopt when no extrema are given: the series no longer
// oscillates, which ends the decomposition rather than being an error.
std::optional<std::vector<double>> spline_envelope(
    const std::vector<std::pair<double, double>>& extrema, std::size_t length,
    Boundary boundary = Boundary::Mirror);

// Sifting loop: h <- h - mean(upper, lower envelope) until the normalized
// squared change SD = sum(mean^2)/sum(h^2) drops below sd_threshold and the
// extrema/zero-crossing counts agree within 1, or the iteration cap is hit.
// Requires at least 3 extrema in the input.
Imf extract_imf(const std::vector<double>& series, const SiftConfig& config);

// Repeatedly extract an IMF from the running residual. Stops when the
// residual has fewer than 3 extrema, is monotone, has shed all but
// max_energy_ratio_db of the input energy, or max_imfs is reached.
// The residual is the input minus the sum of IMFs by construction.
Decomposition decompose(const Signal& signal, const SiftConfig& config = {});

}  // namespace respir
