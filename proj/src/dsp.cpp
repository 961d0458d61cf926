#include "henvox/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace hv::dsp {

namespace {

// FFTW's planner is not re-entrant; plan creation and destruction are
// serialized, execution on distinct buffers is safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_complex(n / 2 + 1)) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::vector<double> power(std::span<const double> x) {
    const std::size_t m = std::min(x.size(), n_);
    std::copy_n(x.begin(), m, in_);
    std::fill(in_ + m, in_ + n_, 0.0);
    fftw_execute(plan_);
    std::vector<double> p(n_ / 2 + 1);
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
    return p;
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

RealFft& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> power_spectrum(std::span<const double> x, std::size_t nfft) {
  return plan_for(nfft).power(x);
}

double two_sided_sum(std::span<const double> half, std::size_t nfft) {
  double total = 0.0;
  for (std::size_t k = 0; k < half.size(); ++k) {
    const bool unpaired = k == 0 || (nfft % 2 == 0 && k == nfft / 2);
    total += unpaired ? half[k] : 2.0 * half[k];
  }
  return total;
}

}  // namespace hv::dsp
