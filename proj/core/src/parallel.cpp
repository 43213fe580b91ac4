#include "effect_engine/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>

namespace effect_engine {

unsigned default_workers() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EFFECT_ENGINE_THREADS")) {
    unsigned cap = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), cap);
    if (ec == std::errc() && cap > 0) return cap;
  }
  return hw;
}

void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  if (workers == 0) workers = default_workers();
  const auto threads = static_cast<std::size_t>(std::min<std::size_t>(workers, count));
  std::vector<std::exception_ptr> errors(count);
  auto body = [&](std::size_t worker) {
    for (std::size_t i = worker; i < count; i += threads) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace effect_engine
