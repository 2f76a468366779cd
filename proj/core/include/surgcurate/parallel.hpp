#pragma once

#include <cstddef>
#include <functional>

namespace surgcurate {

// Fixed-size chunk scheduling. Work is split into ceil(n / chunk_size) chunks
// whose boundaries depend only on (n, chunk_size); callers combine per-chunk
// results in chunk order, which keeps reductions independent of thread count.
class WorkerPool {
 public:
  // threads == 0 selects std::thread::hardware_concurrency().
  explicit WorkerPool(std::size_t threads = 0);

  std::size_t threads() const noexcept { return threads_; }

  static std::size_t chunk_count(std::size_t n, std::size_t chunk_size) noexcept {
    return chunk_size == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
  }

  // Calls fn(chunk_index, begin, end) once per chunk. Exceptions thrown by
  // fn are rethrown on the calling thread (first one wins).
  void for_each_chunk(std::size_t n, std::size_t chunk_size,
                      const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) const;

 private:
  std::size_t threads_;
};

}  // namespace surgcurate
