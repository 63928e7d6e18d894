#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace comeback {

// Runs body(i) for i in [0, n) on up to `threads` workers using static
// contiguous chunks. Callers write results by index, so output never depends
// on the worker count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

// SplitMix64 finalizer; used to derive independent stream seeds from a run
// seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace comeback
