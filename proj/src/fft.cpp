#include "respir/fft.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>

namespace respir {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative Cooley-Tukey, n a power of two.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein's algorithm: express the length-n DFT as a convolution and run
// it over a power-of-two grid. Chirp exponents are reduced mod 2n to keep
// the angles small.
void fft_bluestein(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::uint64_t kk = (static_cast<std::uint64_t>(k) * k) % (2 * n);
        double ang = (inverse ? 1.0 : -1.0) * kPi * static_cast<double>(kk) /
                     static_cast<double>(n);
        chirp[k] = {std::cos(ang), std::sin(ang)};
    }

    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;

    std::vector<std::complex<double>> f(m), g(m);
    for (std::size_t k = 0; k < n; ++k) f[k] = a[k] * chirp[k];
    g[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        g[k] = std::conj(chirp[k]);
        g[m - k] = g[k];
    }

    fft_pow2(f, false);
    fft_pow2(g, false);
    for (std::size_t k = 0; k < m; ++k) f[k] *= g[k];
    fft_pow2(f, true);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = f[k] * scale * chirp[k];
}

}  // namespace

void fft(std::vector<std::complex<double>>& data, bool inverse) {
    const std::size_t n = data.size();
    if (n <= 1) return;
    if (is_pow2(n)) {
        fft_pow2(data, inverse);
    } else {
        fft_bluestein(data, inverse);
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : data) v *= scale;
    }
}

std::vector<std::complex<double>> fft_real(const std::vector<double>& series) {
    std::vector<std::complex<double>> data(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) data[i] = {series[i], 0.0};
    fft(data, false);
    return data;
}

}  // namespace respir
