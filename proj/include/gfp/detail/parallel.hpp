#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace gfp {

/// Process-wide cap on worker threads (0 = hardware concurrency).
inline std::atomic<unsigned>& max_threads_setting() {
  static std::atomic<unsigned> value{0};
  return value;
}

inline void set_max_threads(unsigned n) { max_threads_setting().store(n); }

inline unsigned effective_threads() {
  unsigned cap = max_threads_setting().load();
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cap == 0 ? hw : std::min(cap, hw);
}

namespace detail {

/// Fixed block size for parallel work over paths. Block boundaries do not
/// depend on the thread count, so results are identical for any cap.
inline constexpr std::size_t kPathBlock = 1024;

/// Runs fn(begin, end) over consecutive [begin,end) blocks of size
/// kPathBlock covering [0, count). Blocks are claimed atomically; the
/// callee must write only to disjoint per-index slots.
template <typename Fn>
void parallel_blocks(std::size_t count, Fn&& fn) {
  const std::size_t blocks = (count + kPathBlock - 1) / kPathBlock;
  unsigned workers = std::min<std::size_t>(effective_threads(), blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) {
      fn(b * kPathBlock, std::min(count, (b + 1) * kPathBlock));
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      fn(b * kPathBlock, std::min(count, (b + 1) * kPathBlock));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

/// Pairwise (cascade) summation; deterministic and accurate to
/// O(log n) rounding regardless of how the values were produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

/// Mean and standard error of the mean via pairwise sums.
struct MeanStderr {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
};

inline MeanStderr mean_stderr(std::span<const double> v) {
  MeanStderr out;
  const std::size_t m = v.size();
  if (m == 0) return out;
  out.mean = pairwise_sum(v) / static_cast<double>(m);
  if (m < 2) return out;
  std::vector<double> sq(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double d = v[i] - out.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(m - 1);
  out.stderr_of_mean = std::sqrt(var / static_cast<double>(m));
  return out;
}

}  // namespace detail
}  // namespace gfp
