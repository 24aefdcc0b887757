#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace slcb {

template <typename R>
std::vector<R> run_batch(std::size_t count, int parallelism,
                         const std::function<R(std::size_t)>& job,
                         const std::function<std::string(std::size_t)>& describe) {
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        slots[k].emplace(job(k));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(parallelism, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t k = 0; k < count; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      throw BatchError(k, describe ? describe(k) : std::string("?"), e.what());
    } catch (...) {
      throw BatchError(k, describe ? describe(k) : std::string("?"), "unknown exception");
    }
  }

  std::vector<R> out;
  out.reserve(count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace slcb
