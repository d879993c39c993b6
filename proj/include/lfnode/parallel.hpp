#pragma once

#include "lfnode/core.hpp"

#include <exception>
#include <mutex>

namespace lfnode {

// Runs body(i) for i in [0, count). Under Execution::parallel the iterations are
// spread over OpenMP threads; the first exception thrown by any iteration is
// rethrown on the calling thread once the loop has finished.
template <class Body>
void for_each_index(std::size_t count, Execution exec, Body&& body) {
  if (exec == Execution::serial || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lfnode
