#include "fft.hpp"

#include <array>

namespace excursion::detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

RealFftPlan::RealFftPlan(int dimension, int side)
    : dimension_(dimension), side_(side) {
  std::array<int, 3> dims{side, side, side};
  real_size_ = 1;
  for (int k = 0; k < dimension; ++k) real_size_ *= static_cast<std::size_t>(side);
  complex_size_ = real_size_ / static_cast<std::size_t>(side) *
                  static_cast<std::size_t>(side / 2 + 1);
  auto in = alloc_real(real_size_);
  auto out = alloc_complex(complex_size_);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  forward_ = fftw_plan_dft_r2c(dimension, dims.data(), in.get(), out.get(),
                               FFTW_ESTIMATE);
  backward_ = fftw_plan_dft_c2r(dimension, dims.data(), out.get(), in.get(),
                                FFTW_ESTIMATE);
}

RealFftPlan::~RealFftPlan() {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (backward_) fftw_destroy_plan(backward_);
}

void RealFftPlan::forward(double* in, fftw_complex* out) const {
  fftw_execute_dft_r2c(forward_, in, out);
}

void RealFftPlan::backward(fftw_complex* in, double* out) const {
  fftw_execute_dft_c2r(backward_, in, out);
}

int fft_friendly_size(int n) {
  for (int m = n < 1 ? 1 : n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace excursion::detail
