#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace atomweaver {

/// Worker count: the request (0 = hardware concurrency), capped by ATOMWEAVER_THREADS.
inline unsigned resolve_threads(unsigned requested = 0) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("ATOMWEAVER_THREADS")) {
    try {
      const long v = std::stol(cap);
      if (v >= 1) n = std::min(n, static_cast<unsigned>(v));
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, n);
}

/// Runs body(trial, acc) over [0, trials) on contiguous blocks, one accumulator per
/// worker, then folds the accumulators in block order. With integer accumulators the
/// result is independent of the worker count.
template <class Acc, class Body, class Merge>
Acc reduce_trials(std::size_t trials, unsigned threads, const Acc& init, Body body, Merge merge) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(resolve_threads(threads), trials));
  std::vector<Acc> partial(workers, init);
  std::vector<std::exception_ptr> errors(workers);
  auto run_block = [&](std::size_t w) {
    try {
      const std::size_t begin = trials * w / workers;
      const std::size_t end = trials * (w + 1) / workers;
      for (std::size_t t = begin; t < end; ++t) body(t, partial[w]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run_block(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back([&run_block, w] { run_block(w); });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  Acc total = init;
  for (auto& p : partial) merge(total, p);
  return total;
}

}  // namespace atomweaver
