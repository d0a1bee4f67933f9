#ifndef TWISTCAR_PARALLEL_HPP
#define TWISTCAR_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <future>
#include <thread>
#include <type_traits>
#include <vector>

namespace twistcar {

/// Evaluates f(i) for i in [0, n) on up to hardware_concurrency threads and
/// returns the results in index order. Exceptions propagate from the first
/// failing index.
template <typename F>
auto parallel_map(std::size_t n, F&& f) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out;
  out.reserve(n);
  const std::size_t width = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (width == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(f(i));
    return out;
  }
  for (std::size_t start = 0; start < n; start += width) {
    const std::size_t stop = std::min(n, start + width);
    std::vector<std::future<R>> batch;
    for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, [&f, i] { return f(i); }));
    for (auto& fut : batch) out.push_back(fut.get());
  }
  return out;
}

}  // namespace twistcar

#endif  // TWISTCAR_PARALLEL_HPP
