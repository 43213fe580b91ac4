#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace effect_engine {

/// Worker count from EFFECT_ENGINE_THREADS, else hardware concurrency.
unsigned default_workers();

/**
 * Calls fn(i) for i in [0, count). Work is striped across at most `workers`
 * threads; each index runs exactly once, so callers that write result[i]
 * get output independent of the worker count. The first exception by index
 * is rethrown after all workers join.
 */
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace effect_engine
