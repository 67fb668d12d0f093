#pragma once

// Deterministic parallel execution of independent replicates.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "episim/rng.hpp"

namespace episim {

/// Worker count: EPISIM_THREADS if set to a positive integer, otherwise the
/// machine's hardware concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("EPISIM_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs replicates 0..reps-1. `make_worker()` is called once per thread and
/// returns a callable `worker(stream&, index) -> Result`, so workers can own
/// reusable scratch space. Replicate i always receives stream(master_seed, i)
/// and its result lands in slot i, so the output is independent of `threads`.
template <class Result, class WorkerFactory>
std::vector<Result> run_replicates(std::size_t reps, std::uint64_t master_seed,
                                   WorkerFactory&& make_worker, unsigned threads = 0) {
  std::vector<Result> out(reps);
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(reps, 1)));

  constexpr std::size_t kChunk = 256;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto body = [&] {
    try {
      auto worker = make_worker();
      for (;;) {
        const std::size_t begin = next.fetch_add(kChunk);
        if (begin >= reps) break;
        const std::size_t end = std::min(reps, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) {
          stream rng(master_seed, i);
          out[i] = worker(rng, i);
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(reps);
    }
  };

  if (threads <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

} // namespace episim
