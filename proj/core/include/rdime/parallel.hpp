#pragma once

#include <cstddef>
#include <functional>

namespace rdime {

/// Name of the environment variable that caps worker threads.
inline constexpr const char* kThreadsEnv = "RDIME_THREADS";

/// RDIME_THREADS if set to a positive integer, otherwise the hardware concurrency (at least 1).
std::size_t default_threads();

/**
 * @brief Runs `fn(begin, end)` over contiguous blocks covering [0, n).
 *
 * Block boundaries depend only on `n` and `block`, never on the thread count,
 * so per-block results merged in block order are schedule-independent.
 * Exceptions thrown by `fn` are rethrown on the calling thread.
 */
void parallel_blocks(std::size_t n, std::size_t block, std::size_t threads,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}
