#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace dgame {

// Splits [0, n) into contiguous chunks, one per worker. body(begin, end) must
// only write state owned by its range; the result is then independent of the
// worker count.
template <typename Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  const std::size_t w = std::clamp<std::size_t>(workers < 1 ? 1 : workers, 1, std::max<std::size_t>(n, 1));
  if (w == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(w - 1);
  const std::size_t chunk = (n + w - 1) / w;
  for (std::size_t t = 1; t < w; ++t) {
    const std::size_t begin = std::min(n, t * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(std::size_t{0}, std::min(n, chunk));
}

}  // namespace dgame
