#include "dpwdm/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace dpwdm {

namespace {

std::mutex plan_mutex;  // FFTW planning is not thread-safe

struct PlanCache {
  std::map<std::pair<std::size_t, int>, fftw_plan> plans;
  ~PlanCache() {
    std::lock_guard<std::mutex> g(plan_mutex);
    for (auto& [key, p] : plans) fftw_destroy_plan(p);
  }
  fftw_plan get(std::size_t n, int sign) {
    auto key = std::make_pair(n, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    std::lock_guard<std::mutex> g(plan_mutex);
    // Plan on a scratch buffer so caller data is untouched, then execute
    // with the new-array interface.
    std::vector<cplx> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf,
                                   sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans.emplace(key, p);
    return p;
  }
};

PlanCache& cache() {
  thread_local PlanCache c;
  return c;
}

}  // namespace

void fft_inplace(cplx* data, std::size_t n, int sign) {
  if (n == 0) return;
  fftw_plan p = cache().get(n, sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, buf, buf);
}

}  // namespace dpwdm
