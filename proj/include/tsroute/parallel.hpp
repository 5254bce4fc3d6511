#pragma once

// Data-parallel kernels. Each has a serial twin in `tsroute::serial` with the
// same contract; tests check the two agree exactly and bench/ times them.

#include <cstddef>
#include <exception>
#include <span>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tsroute {

using Point = std::vector<double>;

enum class Execution { serial, parallel };

int available_threads();

// Squared Euclidean distance.
double squared_distance(std::span<const double> a, std::span<const double> b);

// out[i] = index of the nearest centroid to points[i] (lowest index on ties);
// returns the total within-cluster sum of squares.
double assign_nearest(std::span<const Point> points, std::span<const Point> centroids,
                      std::span<std::size_t> out);

// Results of fn(i) for i in [0, n), in index order. The first exception
// thrown by any task is rethrown after the loop.
template <class Fn>
auto replicate(std::size_t n, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using T = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<T> results(n);
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      results[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

namespace serial {

double assign_nearest(std::span<const Point> points, std::span<const Point> centroids,
                      std::span<std::size_t> out);

template <class Fn>
auto replicate(std::size_t n, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  std::vector<std::invoke_result_t<Fn&, std::size_t>> results;
  results.reserve(n);
  for (std::size_t i = 0; i < n; ++i) results.push_back(fn(i));
  return results;
}

}  // namespace serial

template <class Fn>
auto replicate(Execution exec, std::size_t n, Fn&& fn) {
  return exec == Execution::parallel ? replicate(n, fn) : serial::replicate(n, fn);
}

}  // namespace tsroute
