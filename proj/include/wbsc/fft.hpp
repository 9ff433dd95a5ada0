#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace wbsc {

using cplx = std::complex<double>;

enum class FftDirection { kForward, kInverse };

// Radix-2 FFT with the unitary 1/sqrt(N) convention in both directions,
// so forward and inverse are exact adjoints and Parseval holds bin-exactly.
class Fft {
 public:
  explicit Fft(std::size_t n);  // n must be a power of two

  std::size_t size() const { return n_; }

  void forward(std::span<cplx> data) const { transform(data, false); }
  void inverse(std::span<cplx> data) const { transform(data, true); }

  std::vector<cplx> forward(std::vector<cplx> data) const;
  std::vector<cplx> inverse(std::vector<cplx> data) const;

  static bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
  }

 private:
  void transform(std::span<cplx> data, bool inverse) const;

  std::size_t n_;
  double scale_;
  std::vector<std::size_t> bit_reverse_;
  std::vector<cplx> twiddle_;  // exp(-i*2*pi*k/n), k < n/2
};

// Convenience wrapper over a process-wide plan cache keyed by length.
std::vector<cplx> dft(std::vector<cplx> x, FftDirection dir);

// Shared plan lookup (thread safe); plans are immutable once built.
const Fft& fft_plan(std::size_t n);

}  // namespace wbsc
