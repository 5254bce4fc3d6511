#include "tsroute/kmeans.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

#include "tsroute/errors.hpp"

namespace tsroute {

std::size_t ClusterModel::assign(std::span<const double> x) const {
  std::size_t best = 0;
  double best_d = squared_distance(x, centroids.at(0));
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = squared_distance(x, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

nlohmann::json ClusterModel::to_json() const { return {{"centroids", centroids}}; }

ClusterModel ClusterModel::from_json(const nlohmann::json& j) {
  ClusterModel m;
  m.centroids = j.at("centroids").get<std::vector<Point>>();
  if (m.centroids.empty()) throw ParameterError("cluster model JSON has no centroids");
  return m;
}

ClusterModel lloyd(std::span<const Point> points, std::vector<Point> initial,
                   std::size_t max_iterations) {
  if (points.empty()) throw std::invalid_argument("k-means on an empty point set");
  if (initial.empty()) throw std::invalid_argument("k-means needs k >= 1");
  const std::size_t dim = points.front().size();

  ClusterModel m;
  m.centroids = std::move(initial);
  m.assignment.assign(points.size(), 0);
  const std::size_t k = m.centroids.size();

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    std::vector<std::size_t> previous = m.assignment;
    m.objective_history.push_back(assign_nearest(points, m.centroids, m.assignment));
    if (iter > 0 && previous == m.assignment) break;

    std::vector<Point> sums(k, Point(dim, 0.0));
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& s = sums[m.assignment[i]];
      for (std::size_t j = 0; j < dim; ++j) s[j] += points[i][j];
      ++sizes[m.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) m.centroids[c][j] = sums[c][j] / static_cast<double>(sizes[c]);
    }

    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = squared_distance(points[i], m.centroids[m.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      m.centroids[c] = points[far];
      --sizes[m.assignment[far]];
      m.assignment[far] = c;
      sizes[c] = 1;
      ++m.reseeds;
    }
  }
  return m;
}

ClusterModel cluster_features(std::span<const Point> points, std::size_t k, Rng& rng,
                              std::size_t max_iterations) {
  if (k == 0) throw std::invalid_argument("k-means needs k >= 1");
  const std::set<Point> distinct(points.begin(), points.end());
  if (k > distinct.size()) {
    throw std::invalid_argument("k-means: k=" + std::to_string(k) + " exceeds the " +
                                std::to_string(distinct.size()) + " distinct points");
  }

  // k-means++ seeding
  std::vector<Point> centroids;
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  centroids.push_back(points[pick(rng)]);
  std::vector<double> d2(points.size());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = squared_distance(points[i], centroids.front());
      for (std::size_t c = 1; c < centroids.size(); ++c) {
        best = std::min(best, squared_distance(points[i], centroids[c]));
      }
      d2[i] = best;
      total += best;
    }
    double target = uniform01(rng) * total;
    std::size_t chosen = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (d2[i] <= 0.0) continue;
      chosen = i;
      target -= d2[i];
      if (target < 0.0) break;
    }
    centroids.push_back(points[chosen]);
  }
  return lloyd(points, std::move(centroids), max_iterations);
}

}  // namespace tsroute
