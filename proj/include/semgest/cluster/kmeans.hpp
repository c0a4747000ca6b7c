#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace semgest::cluster {

using Point = std::vector<double>;
using LabeledPoint = std::pair<std::string, Point>;

struct ClusterModel {
  std::size_t k = 0;
  std::vector<Point> centroids;
  std::map<std::string, std::size_t> assignments;
  std::uint64_t seed = 0;
  // Within-cluster SSE after every assignment step; non-increasing.
  std::vector<double> sse_trace;

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

// k-means++ seeding followed by Lloyd iterations until the assignment is
// stable or `max_iterations` is reached. Ties go to the lowest centroid index.
// Each of `restarts` runs draws its own seeding; the lowest final SSE wins.
ClusterModel kmeans(const std::vector<LabeledPoint>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 300, std::size_t restarts = 10);

std::size_t nearest_centroid(const ClusterModel& model, std::span<const double> point);
double sse(const ClusterModel& model, const std::vector<LabeledPoint>& points);

// P[i][j] = 1 iff ids i and j share a cluster.
struct PositiveMatrix {
  std::vector<std::string> ids;
  std::vector<double> values;  // row-major B x B
  std::size_t negatives = 0;   // count of zero entries

  std::size_t size() const { return ids.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * ids.size() + j]; }
};

PositiveMatrix positive_matrix(const ClusterModel& model, const std::vector<std::string>& ids);
// Same rule from explicit cluster indices.
PositiveMatrix positive_matrix(const std::vector<std::size_t>& clusters);

// Fraction of items whose cluster's majority label equals their own label.
double purity(std::span<const std::size_t> clusters, std::span<const std::size_t> labels);

nlohmann::json cluster_to_json(const ClusterModel& model);
ClusterModel cluster_from_json(const nlohmann::json& doc);

}  // namespace semgest::cluster
