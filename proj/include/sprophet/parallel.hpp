#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sprophet {

// Splits [0, count) into fixed blocks of `block` indices and evaluates
// fn(begin, end) for each, on up to `threads` workers. Block boundaries do
// not depend on the thread count and results come back in block order, so a
// sequential reduction over them is bit-identical for any `threads`.
template <class Fn>
auto parallel_blocks(std::size_t count, std::size_t block, std::size_t threads, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}, std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}, std::size_t{}));
  if (block == 0) block = 1;
  const std::size_t blocks = (count + block - 1) / block;
  std::vector<Result> results(blocks);
  threads = std::max<std::size_t>(1, std::min(threads, blocks));

  if (threads == 1) {
    for (std::size_t b = 0; b < blocks; ++b)
      results[b] = fn(b * block, std::min(count, (b + 1) * block));
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        results[b] = fn(b * block, std::min(count, (b + 1) * block));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace sprophet
