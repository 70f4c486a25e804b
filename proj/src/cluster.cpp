#include "xltm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace xltm {
namespace {

constexpr std::string_view kModule = "cluster";

[[noreturn]] void fail(const std::string& message) { throw Error(kModule, message); }

double squared_distance(const Matrix& X, Eigen::Index i, const Matrix& C, Eigen::Index k) {
  return (X.row(i) - C.row(k)).squaredNorm();
}

// Distance of every row to its nearest seed chosen so far, updated in place.
void update_nearest(const Matrix& X, const Eigen::RowVectorXd& center, std::vector<double>& nearest) {
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    nearest[static_cast<std::size_t>(i)] =
        std::min(nearest[static_cast<std::size_t>(i)], (X.row(i) - center).squaredNorm());
}

std::size_t sample_d2(const std::vector<double>& weight, const std::vector<std::size_t>& order,
                      double total, Rng& rng) {
  if (!(total > 0.0)) {
    // All remaining points coincide with a seed; take the first in order.
    return order.front();
  }
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = order.front();
  for (std::size_t idx : order) {
    if (weight[idx] <= 0.0) continue;
    acc += weight[idx];
    last_positive = idx;
    if (acc > target) return idx;
  }
  return last_positive;
}

Matrix kmeanspp(const Matrix& X, std::size_t K, Rng& rng, const std::vector<std::size_t>& order,
                std::size_t trials) {
  const auto m = static_cast<std::size_t>(X.rows());
  Matrix centers(static_cast<Eigen::Index>(K), X.cols());

  const std::size_t first = order[rng.below(m)];
  centers.row(0) = X.row(static_cast<Eigen::Index>(first));
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  update_nearest(X, centers.row(0), nearest);

  std::vector<double> candidate(m);
  for (std::size_t c = 1; c < K; ++c) {
    double total = 0.0;
    for (std::size_t idx : order) total += nearest[idx];

    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best = order.front();
    std::vector<double> best_nearest;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t pick = sample_d2(nearest, order, total, rng);
      candidate = nearest;
      update_nearest(X, X.row(static_cast<Eigen::Index>(pick)), candidate);
      double cost = 0.0;
      for (std::size_t idx : order) cost += candidate[idx];
      if (cost < best_cost) {
        best_cost = cost;
        best = pick;
        best_nearest = candidate;
      }
    }
    centers.row(static_cast<Eigen::Index>(c)) = X.row(static_cast<Eigen::Index>(best));
    nearest = std::move(best_nearest);
  }
  return centers;
}

// Nearest centroid per row, ties to the lower index. Uses the expanded form
// for the search and returns exact squared distances for the winners.
void assign(const Matrix& X, const Matrix& C, const Vector& row_norms, std::vector<int>& labels,
            std::vector<double>& dist) {
  const Eigen::MatrixXd cross = X * C.transpose();
  const Vector center_norms = C.rowwise().squaredNorm();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < C.rows(); ++k) {
      const double d = row_norms(i) - 2.0 * cross(i, k) + center_norms(k);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    dist[static_cast<std::size_t>(i)] = squared_distance(X, i, C, best);
  }
}

// Moves the farthest point of a multi-member cluster into each empty one.
void repair_empty(const Matrix& X, Matrix& C, std::vector<int>& labels, std::vector<double>& dist) {
  const auto K = static_cast<std::size_t>(C.rows());
  std::vector<std::size_t> size(K, 0);
  for (int l : labels) ++size[static_cast<std::size_t>(l)];
  for (std::size_t k = 0; k < K; ++k) {
    if (size[k] > 0) continue;
    std::size_t far = labels.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (size[static_cast<std::size_t>(labels[i])] > 1 && dist[i] > far_d) {
        far_d = dist[i];
        far = i;
      }
    }
    if (far == labels.size()) fail("cannot repair empty cluster: too few distinct points");
    --size[static_cast<std::size_t>(labels[far])];
    labels[far] = static_cast<int>(k);
    ++size[k];
    dist[far] = 0.0;
    C.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(far));
  }
}

void update_centroids(const Matrix& X, const std::vector<int>& labels, Matrix& C) {
  Matrix sums = Matrix::Zero(C.rows(), C.cols());
  std::vector<std::size_t> count(static_cast<std::size_t>(C.rows()), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sums.row(labels[i]) += X.row(static_cast<Eigen::Index>(i));
    ++count[static_cast<std::size_t>(labels[i])];
  }
  for (Eigen::Index k = 0; k < C.rows(); ++k)
    if (count[static_cast<std::size_t>(k)] > 0)
      C.row(k) = sums.row(k) / static_cast<double>(count[static_cast<std::size_t>(k)]);
}

ClusterAssignment lloyd(const Matrix& X, std::size_t K, Rng& rng, const std::vector<std::size_t>& order,
                        std::size_t trials, const KMeansOptions& options) {
  const auto m = static_cast<std::size_t>(X.rows());
  ClusterAssignment out;
  out.K = K;
  out.centroids = kmeanspp(X, K, rng, order, trials);

  const Vector row_norms = X.rowwise().squaredNorm();
  std::vector<int> labels(m, 0);
  std::vector<int> previous;
  std::vector<double> dist(m, 0.0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    assign(X, out.centroids, row_norms, labels, dist);
    repair_empty(X, out.centroids, labels, dist);
    const double inertia = std::accumulate(dist.begin(), dist.end(), 0.0);
    out.inertia_history.push_back(inertia);
    out.iterations_run = it + 1;

    const bool stable = labels == previous;
    const bool small_gain =
        std::isfinite(prev_inertia) &&
        (prev_inertia <= 0.0 || (prev_inertia - inertia) / prev_inertia < options.rel_tol);
    update_centroids(X, labels, out.centroids);
    if (stable || small_gain) break;
    previous = labels;
    prev_inertia = inertia;
  }

  out.labels = std::move(labels);
  out.inertia = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    out.inertia += squared_distance(X, static_cast<Eigen::Index>(i), out.centroids, out.labels[i]);
  return out;
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

ClusterAssignment kmeans_fit(const Matrix& X, std::size_t K, std::uint64_t seed,
                             const KMeansOptions& options) {
  const auto m = static_cast<std::size_t>(X.rows());
  if (K < 1) fail("K must be >= 1");
  if (K > m) fail("K=" + std::to_string(K) + " exceeds the number of points (" + std::to_string(m) + ")");
  if (!X.allFinite()) fail("input has non-finite entries");

  std::vector<std::size_t> order;
  if (options.seeding_order) {
    order = *options.seeding_order;
    std::vector<std::size_t> check = order;
    std::sort(check.begin(), check.end());
    for (std::size_t i = 0; i < check.size(); ++i)
      if (check[i] != i || check.size() != m) fail("seeding_order is not a permutation of the rows");
  } else {
    order.resize(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  const std::size_t trials =
      options.local_trials > 0 ? options.local_trials
                               : 2 + static_cast<std::size_t>(std::floor(std::log(static_cast<double>(K))));

  Rng rng(seed);
  ClusterAssignment best;
  // Restarts draw from one continuing stream; the lowest inertia wins, the
  // earliest run on ties.
  for (std::size_t run = 0; run < std::max<std::size_t>(options.n_init, 1); ++run) {
    ClusterAssignment candidate = lloyd(X, K, rng, order, trials, options);
    if (run == 0 || candidate.inertia < best.inertia) best = std::move(candidate);
  }
  best.seed = seed;
  return best;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    fail("label length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.size() < 2) fail("ARI needs at least 2 labels");

  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, n] : table) index += comb2(n);
  for (const auto& [key, n] : rows) sum_a += comb2(n);
  for (const auto& [key, n] : cols) sum_b += comb2(n);
  const double expected = sum_a * sum_b / comb2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<double> cluster_language_balance(const ClusterAssignment& assignment,
                                             const std::vector<std::string>& labels) {
  if (labels.size() != assignment.labels.size())
    fail(std::to_string(labels.size()) + " language labels for " +
         std::to_string(assignment.labels.size()) + " assignments");
  const std::set<std::string> langs(labels.begin(), labels.end());
  if (langs.size() != 2) fail("language balance needs exactly 2 languages, found " + std::to_string(langs.size()));
  const std::string& first = *langs.begin();

  std::vector<double> n_first(assignment.K, 0.0), n_total(assignment.K, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = static_cast<std::size_t>(assignment.labels[i]);
    if (k >= assignment.K) fail("cluster index " + std::to_string(k) + " out of range");
    n_total[k] += 1.0;
    if (labels[i] == first) n_first[k] += 1.0;
  }
  std::vector<double> out(assignment.K);
  for (std::size_t k = 0; k < assignment.K; ++k) {
    if (n_total[k] == 0.0) fail("cluster " + std::to_string(k) + " is empty");
    double h = 0.0;
    for (double c : {n_first[k], n_total[k] - n_first[k]}) {
      if (c > 0.0) {
        const double p = c / n_total[k];
        h -= p * std::log(p);
      }
    }
    out[k] = h / std::log(2.0);
  }
  return out;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

nlohmann::json to_json(const ClusterAssignment& assignment) {
  return {{"K", assignment.K},
          {"seed", assignment.seed},
          {"labels", assignment.labels},
          {"inertia", assignment.inertia},
          {"iterations_run", assignment.iterations_run}};
}

}  // namespace xltm
