#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ctf::detail {

// Forward DFT of arbitrary length: radix-2 when n is a power of two,
// Bluestein's chirp-z otherwise. Plans are immutable after construction,
// so one plan can serve concurrent callers; forward() keeps its scratch
// on the stack of the call.
class Dft {
public:
    explicit Dft(std::size_t n);

    std::size_t size() const { return n_; }

    // out must hold n coefficients; X_j = sum_t x_t exp(-2*pi*i*j*t/n).
    void forward(const double* in, std::complex<double>* out) const;

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;  // power-of-two convolution length (Bluestein only)
    bool pow2_ = false;
    std::vector<std::complex<double>> chirp_;      // w^(k^2), k = 0..n-1
    std::vector<std::complex<double>> kernel_fft_; // FFT of the conjugate-chirp kernel
};

// In-place radix-2 FFT; a.size() must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace ctf::detail
