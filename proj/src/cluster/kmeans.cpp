#include "semgest/cluster/kmeans.hpp"

#include <cmath>
#include <limits>

#include "semgest/error.hpp"
#include "semgest/nd/rng.hpp"

namespace semgest::cluster {
namespace {

constexpr int kClusterFormatVersion = 1;

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t nearest(const std::vector<Point>& centroids, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_distance(centroids[c], x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<Point> plus_plus_seeds(const std::vector<LabeledPoint>& points, std::size_t k,
                                   nd::Rng& rng) {
  std::vector<Point> centroids{points[rng.below(points.size())].second};
  std::vector<double> d2(points.size());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = sq_distance(points[i].second, centroids[nearest(centroids, points[i].second)]);
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (d2[i] > 0.0 && target < d2[i]) {
          pick = i;
          break;
        }
        target -= d2[i];
      }
      while (d2[pick] == 0.0) --pick;  // rounding pushed past the last candidate
    } else {
      pick = rng.below(points.size());
    }
    centroids.push_back(points[pick].second);
  }
  return centroids;
}

std::vector<std::size_t> lloyd(const std::vector<LabeledPoint>& points, ClusterModel& model,
                               std::size_t max_iterations) {
  const std::size_t k = model.centroids.size();
  const std::size_t dim = points.front().second.size();
  std::vector<std::size_t> assign(points.size(), k);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t c = nearest(model.centroids, points[i].second);
      changed |= c != assign[i];
      assign[i] = c;
      total += sq_distance(points[i].second, model.centroids[c]);
    }
    model.sse_trace.push_back(total);
    if (!changed) break;
    std::vector<Point> sums(k, Point(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += points[i].second[d];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // an empty cluster keeps its centroid
      for (std::size_t d = 0; d < dim; ++d) {
        model.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
  }
  return assign;
}

}  // namespace

ClusterModel kmeans(const std::vector<LabeledPoint>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations, std::size_t restarts) {
  if (restarts == 0) throw ValidationError("kmeans: need at least one restart");
  if (k == 0) throw ValidationError("kmeans: k must be positive");
  if (points.size() < k) {
    throw ValidationError("kmeans: " + std::to_string(points.size()) +
                          " points cannot form " + std::to_string(k) + " clusters");
  }
  const std::size_t dim = points.front().second.size();
  for (const auto& [id, x] : points) {
    if (x.size() != dim) throw ValidationError("kmeans: point '" + id + "' has the wrong dimension");
    for (double v : x) {
      if (!std::isfinite(v)) throw ValidationError("kmeans: point '" + id + "' is not finite");
    }
  }

  ClusterModel model;
  std::vector<std::size_t> assign;
  for (std::size_t r = 0; r < restarts; ++r) {
    nd::Rng rng(nd::derive_seed(seed, "kmeans++#" + std::to_string(r)));
    ClusterModel run;
    run.centroids = plus_plus_seeds(points, k, rng);
    std::vector<std::size_t> run_assign = lloyd(points, run, max_iterations);
    if (r == 0 || run.sse_trace.back() < model.sse_trace.back()) {
      model = std::move(run);
      assign = std::move(run_assign);
    }
  }
  model.k = k;
  model.seed = seed;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!model.assignments.emplace(points[i].first, assign[i]).second) {
      throw ValidationError("kmeans: duplicate id '" + points[i].first + "'");
    }
  }
  return model;
}

std::size_t nearest_centroid(const ClusterModel& model, std::span<const double> point) {
  if (model.centroids.empty() || point.size() != model.centroids.front().size()) {
    throw ValidationError("nearest_centroid: dimension mismatch");
  }
  return nearest(model.centroids, point);
}

double sse(const ClusterModel& model, const std::vector<LabeledPoint>& points) {
  double total = 0.0;
  for (const auto& [id, x] : points) {
    auto it = model.assignments.find(id);
    if (it == model.assignments.end()) throw ValidationError("sse: unknown id '" + id + "'");
    total += sq_distance(x, model.centroids[it->second]);
  }
  return total;
}

PositiveMatrix positive_matrix(const std::vector<std::size_t>& clusters) {
  PositiveMatrix p;
  const std::size_t b = clusters.size();
  p.values.resize(b * b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const bool same = clusters[i] == clusters[j];
      p.values[i * b + j] = same ? 1.0 : 0.0;
      p.negatives += same ? 0 : 1;
    }
  }
  p.ids.resize(b);
  return p;
}

PositiveMatrix positive_matrix(const ClusterModel& model, const std::vector<std::string>& ids) {
  std::vector<std::size_t> clusters;
  clusters.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = model.assignments.find(id);
    if (it == model.assignments.end()) {
      throw ValidationError("positive_matrix: id '" + id + "' has no cluster assignment");
    }
    clusters.push_back(it->second);
  }
  PositiveMatrix p = positive_matrix(clusters);
  p.ids = ids;
  return p;
}

double purity(std::span<const std::size_t> clusters, std::span<const std::size_t> labels) {
  if (clusters.size() != labels.size() || clusters.empty()) {
    throw ValidationError("purity: need equally many non-zero clusters and labels");
  }
  std::map<std::size_t, std::map<std::size_t, std::size_t>> table;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][labels[i]];
  std::size_t majority = 0;
  for (const auto& [c, counts] : table) {
    std::size_t best = 0;
    for (const auto& [label, n] : counts) best = std::max(best, n);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(clusters.size());
}

nlohmann::json cluster_to_json(const ClusterModel& model) {
  return {{"format", "semgest-clusters"},
          {"version", kClusterFormatVersion},
          {"k", model.k},
          {"seed", model.seed},
          {"centroids", model.centroids},
          {"assignments", model.assignments},
          {"sse_trace", model.sse_trace}};
}

ClusterModel cluster_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "semgest-clusters" || doc.at("version") != kClusterFormatVersion) {
      throw ValidationError("cluster document: unexpected format or version");
    }
    ClusterModel m;
    m.k = doc.at("k").get<std::size_t>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.centroids = doc.at("centroids").get<std::vector<Point>>();
    m.assignments = doc.at("assignments").get<std::map<std::string, std::size_t>>();
    m.sse_trace = doc.at("sse_trace").get<std::vector<double>>();
    if (m.centroids.size() != m.k) throw ValidationError("cluster document: centroid count != k");
    for (const auto& [id, c] : m.assignments) {
      if (c >= m.k) throw ValidationError("cluster document: assignment of '" + id + "' out of range");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("cluster document: ") + e.what());
  }
}

}  // namespace semgest::cluster
