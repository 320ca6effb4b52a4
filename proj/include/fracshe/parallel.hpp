#pragma once

#include <cstddef>
#include <functional>

namespace fracshe {

/// Environment variable holding the worker count.
inline constexpr const char* kWorkersEnv = "FRACSHE_WORKERS";

/// Worker count from FRACSHE_WORKERS, else the hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n) across worker_count() threads. Each index
/// runs exactly once; results must be written to per-index slots so that the
/// outcome does not depend on scheduling. The exception thrown by the lowest
/// failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fracshe
