#include "respir/emd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace respir {

void validate(const SiftConfig& config) {
    if (!(config.sd_threshold > 0.0 && config.sd_threshold < 1.0)) {
        throw EmdError("sd_threshold must lie in (0, 1)");
    }
    if (config.max_sift_iterations < 1 || config.max_imfs < 1) {
        throw EmdError("iteration and IMF caps must be at least 1");
    }
    if (config.max_energy_ratio_db <= 0.0) {
        throw EmdError("max_energy_ratio_db must be positive");
    }
}

ExtremaIndices find_extrema(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 3) throw EmdError("series must have at least 3 samples");
    ExtremaIndices out;
    std::size_t i = 1;
    while (i + 1 < n) {
        if (series[i] == series[i - 1]) {
            ++i;
            continue;
        }
        std::size_t j = i;  // plateau [i..j] of equal values
        while (j + 1 < n && series[j + 1] == series[i]) ++j;
        if (j >= n - 1) break;  // plateau runs into the end: not an extremum
        const std::size_t mid = (i + j) / 2;
        if (series[i] > series[i - 1] && series[j] > series[j + 1]) {
            out.maxima.push_back(mid);
        } else if (series[i] < series[i - 1] && series[j] < series[j + 1]) {
            out.minima.push_back(mid);
        }
        i = j + 1;
    }
    return out;
}

int zero_crossings(const std::vector<double>& series) {
    int count = 0;
    double prev = 0.0;
    bool started = false;
    for (double v : series) {
        if (v == 0.0) continue;
        if (started && ((v > 0.0) != (prev > 0.0))) ++count;
        prev = v;
        started = true;
    }
    return count;
}

bool is_monotone(const std::vector<double>& series) {
    bool nondec = true, noninc = true;
    for (std::size_t i = 1; i < series.size(); ++i) {
        if (series[i] < series[i - 1]) nondec = false;
        if (series[i] > series[i - 1]) noninc = false;
    }
    return nondec || noninc;
}

namespace {

// Reflected copies of the two extrema nearest each endpoint, then sort.
// Reflections land strictly outside [0, length-1], so they cannot collide
// with original knots; the dedupe guard is belt and braces.
void mirror_knots(const std::vector<std::pair<double, double>>& extrema,
                  std::size_t length, std::vector<double>& xs,
                  std::vector<double>& ys) {
    const double last = static_cast<double>(length - 1);
    std::vector<std::pair<double, double>> knots(extrema.begin(), extrema.end());
    const std::size_t k = std::min<std::size_t>(2, extrema.size());
    for (std::size_t t = 0; t < k; ++t) {
        if (extrema[t].first > 0.0) {
            knots.emplace_back(-extrema[t].first, extrema[t].second);
        }
    }
    for (std::size_t t = 0; t < k; ++t) {
        const auto& e = extrema[extrema.size() - 1 - t];
        if (e.first < last) knots.emplace_back(2.0 * last - e.first, e.second);
    }
    std::sort(knots.begin(), knots.end());
    xs.clear();
    ys.clear();
    for (const auto& kn : knots) {
        if (!xs.empty() && kn.first == xs.back()) continue;
        xs.push_back(kn.first);
        ys.push_back(kn.second);
    }
}

// Natural cubic spline (zero second derivative at the outer knots) via the
// Thomas algorithm, evaluated at integer abscissae 0..length-1.
std::vector<double> natural_spline_eval(const std::vector<double>& xs,
                                        const std::vector<double>& ys,
                                        std::size_t length) {
    const std::size_t m = xs.size();
    std::vector<double> out(length);
    if (m == 1) {
        std::fill(out.begin(), out.end(), ys[0]);
        return out;
    }
    std::vector<double> M(m, 0.0);  // knot second derivatives
    if (m > 2) {
        const std::size_t u = m - 2;  // unknowns M[1..m-2]
        std::vector<double> a(u), b(u), c(u), d(u);
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const double hl = xs[i] - xs[i - 1];
            const double hr = xs[i + 1] - xs[i];
            a[i - 1] = hl / 6.0;
            b[i - 1] = (xs[i + 1] - xs[i - 1]) / 3.0;
            c[i - 1] = hr / 6.0;
            d[i - 1] = (ys[i + 1] - ys[i]) / hr - (ys[i] - ys[i - 1]) / hl;
        }
        for (std::size_t i = 1; i < u; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        M[u] = d[u - 1] / b[u - 1];
        for (std::size_t i = u - 1; i-- > 0;) {
            M[i + 1] = (d[i] - c[i] * M[i + 2]) / b[i];
        }
    }
    std::size_t seg = 0;
    for (std::size_t idx = 0; idx < length; ++idx) {
        const double x = static_cast<double>(idx);
        while (seg + 2 < m && x > xs[seg + 1]) ++seg;
        const double h = xs[seg + 1] - xs[seg];
        const double A = (xs[seg + 1] - x) / h;
        const double B = (x - xs[seg]) / h;
        out[idx] = A * ys[seg] + B * ys[seg + 1] +
                   ((A * A * A - A) * M[seg] + (B * B * B - B) * M[seg + 1]) *
                       (h * h) / 6.0;
    }
    return out;
}

}  // namespace

std::optional<std::vector<double>> spline_envelope(
    const std::vector<std::pair<double, double>>& extrema, std::size_t length,
    Boundary boundary) {
    (void)boundary;  // Mirror is the only mode
    if (length == 0) throw EmdError("envelope length must be positive");
    if (extrema.empty()) return std::nullopt;
    std::vector<double> xs, ys;
    mirror_knots(extrema, length, xs, ys);
    return natural_spline_eval(xs, ys, length);
}

namespace {

std::vector<std::pair<double, double>> knot_pairs(
    const std::vector<double>& series, const std::vector<std::size_t>& idx) {
    std::vector<std::pair<double, double>> p;
    p.reserve(idx.size());
    for (std::size_t i : idx) {
        p.emplace_back(static_cast<double>(i), series[i]);
    }
    return p;
}

}  // namespace

Imf extract_imf(const std::vector<double>& series, const SiftConfig& config) {
    validate(config);
    {
        const ExtremaIndices e = find_extrema(series);
        if (e.maxima.size() + e.minima.size() < 3) {
            throw EmdError("series must have at least 3 extrema");
        }
    }
    Imf imf;
    std::vector<double> h = series;
    for (int iter = 0; iter < config.max_sift_iterations; ++iter) {
        const ExtremaIndices e = find_extrema(h);
        if (e.maxima.empty() || e.minima.empty()) break;
        const auto upper =
            spline_envelope(knot_pairs(h, e.maxima), h.size(), config.boundary);
        const auto lower =
            spline_envelope(knot_pairs(h, e.minima), h.size(), config.boundary);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double m = 0.5 * ((*upper)[i] + (*lower)[i]);
            num += m * m;
            den += h[i] * h[i];
            h[i] -= m;
        }
        ++imf.sift_iterations;
        const double sd = den > 0.0 ? num / den : 0.0;
        const ExtremaIndices e2 = find_extrema(h);
        const long ext =
            static_cast<long>(e2.maxima.size() + e2.minima.size());
        if (sd < config.sd_threshold &&
            std::labs(ext - zero_crossings(h)) <= 1) {
            break;
        }
    }
    imf.values = std::move(h);
    return imf;
}

Decomposition decompose(const Signal& signal, const SiftConfig& config) {
    validate(signal);
    validate(config);
    Decomposition d;
    d.residual = signal.samples;
    double e0 = 0.0;
    for (double v : signal.samples) e0 += v * v;
    while (static_cast<int>(d.imfs.size()) < config.max_imfs) {
        if (d.residual.size() < 3) break;
        const ExtremaIndices e = find_extrema(d.residual);
        if (e.maxima.size() + e.minima.size() < 3 || is_monotone(d.residual)) {
            break;
        }
        double er = 0.0;
        for (double v : d.residual) er += v * v;
        if (er <= 0.0 ||
            10.0 * std::log10(e0 / er) > config.max_energy_ratio_db) {
            break;
        }
        Imf imf = extract_imf(d.residual, config);
        imf.index = static_cast<int>(d.imfs.size()) + 1;
        for (std::size_t i = 0; i < d.residual.size(); ++i) {
            d.residual[i] -= imf.values[i];
        }
        d.imfs.push_back(std::move(imf));
    }
    return d;
}

}  // namespace respir
