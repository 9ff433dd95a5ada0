#include "wbsc/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace wbsc {

Fft::Fft(std::size_t n) : n_(n) {
  if (!is_power_of_two(n)) {
    throw std::invalid_argument("Fft: length must be a power of two, got " +
                                std::to_string(n));
  }
  scale_ = 1.0 / std::sqrt(static_cast<double>(n));
  bit_reverse_.resize(n);
  std::size_t log2n = 0;
  while ((std::size_t{1} << log2n) < n) ++log2n;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < log2n; ++b) {
      r |= ((i >> b) & 1u) << (log2n - 1 - b);
    }
    bit_reverse_[i] = r;
  }
  twiddle_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) /
                       static_cast<double>(n);
    twiddle_[k] = cplx(std::cos(ang), std::sin(ang));
  }
}

void Fft::transform(std::span<cplx> data, bool inverse) const {
  if (data.size() != n_) {
    throw std::invalid_argument("Fft: data length does not match plan size");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j = bit_reverse_[i];
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        cplx w = twiddle_[k * step];
        if (inverse) w = std::conj(w);
        const cplx odd = data[start + k + half] * w;
        const cplx even = data[start + k];
        data[start + k] = even + odd;
        data[start + k + half] = even - odd;
      }
    }
  }
  for (auto& v : data) v *= scale_;
}

std::vector<cplx> Fft::forward(std::vector<cplx> data) const {
  forward(std::span<cplx>(data));
  return data;
}

std::vector<cplx> Fft::inverse(std::vector<cplx> data) const {
  inverse(std::span<cplx>(data));
  return data;
}

const Fft& fft_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<Fft>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::make_unique<Fft>(n)).first;
  }
  return *it->second;
}

std::vector<cplx> dft(std::vector<cplx> x, FftDirection dir) {
  const Fft& plan = fft_plan(x.size());
  if (dir == FftDirection::kForward) {
    plan.forward(std::span<cplx>(x));
  } else {
    plan.inverse(std::span<cplx>(x));
  }
  return x;
}

}  // namespace wbsc
