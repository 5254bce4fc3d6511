#include "tsroute/parallel.hpp"

#include <limits>
#include <stdexcept>

namespace tsroute {

namespace {

std::size_t nearest(std::span<const double> p, std::span<const Point> centroids, double& best_d) {
  std::size_t best = 0;
  best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void check_sizes(std::span<const Point> points, std::span<const Point> centroids,
                 std::span<std::size_t> out) {
  if (centroids.empty()) throw std::invalid_argument("assign_nearest: no centroids");
  if (out.size() != points.size()) throw std::invalid_argument("assign_nearest: output size mismatch");
}

}  // namespace

int available_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("squared_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double assign_nearest(std::span<const Point> points, std::span<const Point> centroids,
                      std::span<std::size_t> out) {
  check_sizes(points, centroids, out);
  const auto n = static_cast<long long>(points.size());
  std::vector<double> dist(points.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = nearest(points[k], centroids, dist[k]);
  }
  // summed serially so the objective is bit-identical to the serial kernel
  double total = 0.0;
  for (double d : dist) total += d;
  return total;
}

namespace serial {

double assign_nearest(std::span<const Point> points, std::span<const Point> centroids,
                      std::span<std::size_t> out) {
  check_sizes(points, centroids, out);
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double d = 0.0;
    out[i] = nearest(points[i], centroids, d);
    total += d;
  }
  return total;
}

}  // namespace serial

}  // namespace tsroute
