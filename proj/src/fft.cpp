#include "ctf/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace ctf::detail {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

}  // namespace

void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) throw std::runtime_error("fft_pow2: length must be a power of two");
    // bit-reversal permutation
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
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

Dft::Dft(std::size_t n) : n_(n) {
    if (n == 0) throw std::runtime_error("Dft: length must be positive");
    pow2_ = is_pow2(n);
    if (pow2_) return;

    m_ = next_pow2(2 * n - 1);
    chirp_.resize(n);
    const auto two_n = static_cast<std::int64_t>(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument exact for large k.
        const std::int64_t q = (static_cast<std::int64_t>(k) * static_cast<std::int64_t>(k)) % two_n;
        const double ang = -kPi * static_cast<double>(q) / static_cast<double>(n);
        chirp_[k] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<std::complex<double>> kernel(m_, std::complex<double>(0.0, 0.0));
    kernel[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n; ++k) {
        kernel[k] = std::conj(chirp_[k]);
        kernel[m_ - k] = std::conj(chirp_[k]);
    }
    fft_pow2(kernel, false);
    kernel_fft_ = std::move(kernel);
}

void Dft::forward(const double* in, std::complex<double>* out) const {
    if (pow2_) {
        std::vector<std::complex<double>> a(n_);
        for (std::size_t i = 0; i < n_; ++i) a[i] = {in[i], 0.0};
        fft_pow2(a, false);
        for (std::size_t i = 0; i < n_; ++i) out[i] = a[i];
        return;
    }
    std::vector<std::complex<double>> a(m_, std::complex<double>(0.0, 0.0));
    for (std::size_t k = 0; k < n_; ++k) a[k] = in[k] * chirp_[k];
    fft_pow2(a, false);
    for (std::size_t k = 0; k < m_; ++k) a[k] *= kernel_fft_[k];
    fft_pow2(a, true);
    for (std::size_t k = 0; k < n_; ++k) out[k] = a[k] * chirp_[k];
}

}  // namespace ctf::detail
