#pragma once

#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace grafflp {

/// Dense row-major matrix of doubles. Plain storage; shape checks live in
/// the kernels that consume it.
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Tensor2: negative dimensions");
  }

  size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

  double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
};

inline void require_shape(const Tensor2& t, int rows, int cols, const char* what) {
  if (t.rows != rows || t.cols != cols) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", got " + std::to_string(t.rows) + "x" +
                                std::to_string(t.cols));
  }
}

/// Worker count for row-parallel kernels. Controlled by GRAFFLP_THREADS;
/// defaults to the hardware concurrency. Each output row is always
/// accumulated sequentially by one worker, so results do not depend on the
/// thread count.
inline int thread_count() {
  static const int n = [] {
    if (const char* env = std::getenv("GRAFFLP_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  }();
  return n;
}

/// Static block partition of [0, n) across workers. `fn(begin, end)` runs on
/// each block; blocks are disjoint so no synchronization is needed.
template <typename Fn>
void parallel_rows(int n, Fn&& fn) {
  const int workers = thread_count();
  if (workers <= 1 || n < 128) {
    fn(0, n);
    return;
  }
  const int blocks = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(blocks - 1);
  const int chunk = (n + blocks - 1) / blocks;
  for (int b = 1; b < blocks; ++b) {
    const int lo = b * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  fn(0, std::min(chunk, n));
  for (auto& t : pool) t.join();
}

}  // namespace grafflp
