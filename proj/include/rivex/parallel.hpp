#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace rivex {

/// Worker count used by library loops; 0 means hardware concurrency. Results never depend on it.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n) over the worker pool; exceptions are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise (tree) sum; fixed order, so the result does not depend on how terms were produced.
double pairwise_sum(std::span<const double> v);

/// Independent 64-bit seed for stream `index` of a master seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace rivex
