// Shared aliases, constants, error type and a tiny parallel map helper.
#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dpwdm {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kPlanck = 6.62607015e-34;        // J s
constexpr double kLightSpeed = 2.99792458e8;      // m/s

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watt(double dbm) { return 1e-3 * db_to_linear(dbm); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

/// Runs fn(i) for i in [0, n) on up to `threads` worker threads.
/// Work is split into contiguous chunks; fn must be safe to call concurrently
/// for distinct i. threads==0 picks the hardware concurrency.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

namespace detail {
inline std::atomic<unsigned>& default_thread_override() {
  static std::atomic<unsigned> v{0};
  return v;
}
inline unsigned resolve_threads(unsigned threads) {
  if (threads != 0) return threads;
  unsigned o = detail::default_thread_override().load();
  if (o != 0) return o;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}
}  // namespace detail

/// Process-wide worker-count cap applied wherever a caller leaves the thread
/// count at 0 (auto); 0 restores the hardware default.
inline void set_default_threads(unsigned threads) {
  detail::default_thread_override().store(threads);
}

inline void parallel_for(std::size_t n,
                         const std::function<void(std::size_t)>& fn,
                         unsigned threads) {
  unsigned nt = detail::resolve_threads(threads);
  if (nt <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (nt > n) nt = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (unsigned t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      std::size_t lo = n * t / nt, hi = n * (t + 1) / nt;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace dpwdm
