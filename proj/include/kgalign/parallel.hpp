// Row-parallel loop used by the matrix builders.
#ifndef KGALIGN_PARALLEL_HPP_
#define KGALIGN_PARALLEL_HPP_

#include <cstdint>
#include <functional>

namespace kgalign {

/// Worker count for parallel_for. Defaults to $KGALIGN_THREADS, else 1.
int num_threads();
void set_num_threads(int n);

/// Runs body(i) for i in [0, n) on up to num_threads() threads. Each index is
/// visited exactly once; bodies must not share mutable state.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

}  // namespace kgalign

#endif  // KGALIGN_PARALLEL_HPP_
