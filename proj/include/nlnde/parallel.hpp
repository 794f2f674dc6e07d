#ifndef NLNDE_PARALLEL_HPP
#define NLNDE_PARALLEL_HPP

#include <functional>

namespace nlnde {

// Runs fn(0..n-1) on up to `jobs` threads (serial when jobs <= 1). Blocks
// until done; the first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace nlnde

#endif  // NLNDE_PARALLEL_HPP
