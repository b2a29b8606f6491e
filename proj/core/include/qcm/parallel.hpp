#pragma once

#include <cstddef>
#include <functional>

namespace qcm {

/// Worker count used by the data-parallel kernels. Defaults to the hardware
/// concurrency; results never depend on this value.
void set_num_threads(int n);
[[nodiscard]] int num_threads();

/// Runs fn(i) for i in [0, n). Work is handed out in index order; callers that
/// reduce must do so per index and combine afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace qcm
