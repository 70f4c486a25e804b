#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xltm/common.hpp"

namespace xltm {

struct ClusterAssignment {
  std::vector<int> labels;
  std::size_t K = 0;
  Matrix centroids;  ///< K x r'
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  std::uint64_t seed = 0;
  /// Inertia after each assignment step.
  std::vector<double> inertia_history;
};

struct KMeansOptions {
  std::size_t max_iter = 300;
  /// Stop once (previous - current) / previous inertia falls below this.
  double rel_tol = 1e-4;
  /// Candidates tried per k-means++ step; 0 means 2 + floor(ln K).
  std::size_t local_trials = 0;
  /// Independent k-means++ restarts; the lowest final inertia is kept.
  std::size_t n_init = 10;
  /// Row visiting order for k-means++ sampling (e.g. rows sorted by document
  /// id). Defaults to row order.
  std::optional<std::vector<std::size_t>> seeding_order;
};

/// Greedy k-means++ seeding followed by Lloyd iterations, best of n_init
/// runs. Empty clusters take the point farthest from its centroid.
ClusterAssignment kmeans_fit(const Matrix& X, std::size_t K, std::uint64_t seed,
                             const KMeansOptions& options = {});

/// Chance-corrected pair-counting agreement of two labelings.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// Per cluster: entropy of its language mix divided by log 2.
std::vector<double> cluster_language_balance(const ClusterAssignment& assignment,
                                             const std::vector<std::string>& labels);

double mean(const std::vector<double>& values);

nlohmann::json to_json(const ClusterAssignment& assignment);

}  // namespace xltm
