#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "tsroute/parallel.hpp"
#include "tsroute/random.hpp"

namespace tsroute {

struct ClusterModel {
  std::vector<Point> centroids;
  std::vector<std::size_t> assignment;       // training point -> cluster
  std::vector<double> objective_history;     // WCSS after each assignment step
  std::size_t reseeds = 0;                   // empty clusters moved to the farthest point

  std::size_t k() const { return centroids.size(); }
  std::size_t assign(std::span<const double> x) const;

  // Centroids only; the training assignment is not persisted.
  nlohmann::json to_json() const;
  static ClusterModel from_json(const nlohmann::json& j);
};

// Lloyd iterations from the given initial centroids. An empty cluster is
// re-seeded at the point farthest from its current centroid.
ClusterModel lloyd(std::span<const Point> points, std::vector<Point> initial,
                   std::size_t max_iterations = 100);

// k-means++ seeding followed by Lloyd. Requires k <= number of distinct points.
ClusterModel cluster_features(std::span<const Point> points, std::size_t k, Rng& rng,
                              std::size_t max_iterations = 100);

}  // namespace tsroute
