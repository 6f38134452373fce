#pragma once

// Thin RAII layer over FFTW. Plan creation is serialized through a global
// mutex; executing a plan on caller-owned aligned buffers is thread-safe.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

namespace excursion::detail {

std::mutex& fftw_planner_mutex();

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuffer alloc_real(std::size_t n) {
  return RealBuffer(fftw_alloc_real(n));
}
inline ComplexBuffer alloc_complex(std::size_t n) {
  return ComplexBuffer(fftw_alloc_complex(n));
}

// Forward r2c and backward c2r plans for a d-dimensional cube of side L.
class RealFftPlan {
 public:
  RealFftPlan(int dimension, int side);
  ~RealFftPlan();
  RealFftPlan(const RealFftPlan&) = delete;
  RealFftPlan& operator=(const RealFftPlan&) = delete;

  int dimension() const noexcept { return dimension_; }
  int side() const noexcept { return side_; }
  std::size_t real_size() const noexcept { return real_size_; }
  std::size_t complex_size() const noexcept { return complex_size_; }

  void forward(double* in, fftw_complex* out) const;
  // Unnormalized: the result is scaled by real_size().
  void backward(fftw_complex* in, double* out) const;

 private:
  int dimension_;
  int side_;
  std::size_t real_size_;
  std::size_t complex_size_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

// Smallest integer >= n whose only prime factors are 2, 3, 5 and 7.
int fft_friendly_size(int n);

}  // namespace excursion::detail
