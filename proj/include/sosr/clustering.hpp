#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "sosr/rng.hpp"

namespace sosr {

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

inline double euclidean_distance(std::span<const double> a,
                                 std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

// Incremental k-means state: fixed cluster count after warm-up, one
// centroid and absorption count per cluster. Updates are per-instance
// running-mean steps, so behavior is order-deterministic.
struct ClusterState {
  std::vector<std::vector<double>> centroids;
  std::vector<std::uint64_t> counts;

  std::size_t size() const { return centroids.size(); }
  std::size_t dim() const { return centroids.empty() ? 0 : centroids[0].size(); }

  // Nearest centroid by Euclidean distance; ties break to the lowest index.
  std::size_t assign(std::span<const double> x) const {
    if (centroids.empty())
      throw std::logic_error("ClusterState::assign: no clusters");
    std::size_t best = 0;
    double best_d2 = squared_distance(x, centroids[0]);
    for (std::size_t m = 1; m < centroids.size(); ++m) {
      const double d2 = squared_distance(x, centroids[m]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = m;
      }
    }
    return best;
  }

  // Absorb one instance into its nearest cluster:
  // c_m <- c_m + (x - c_m) / counts[m].
  std::size_t update(std::span<const double> x) {
    const std::size_t m = assign(x);
    counts[m] += 1;
    const double inv = 1.0 / static_cast<double>(counts[m]);
    for (std::size_t i = 0; i < centroids[m].size(); ++i)
      centroids[m][i] += (x[i] - centroids[m][i]) * inv;
    return m;
  }

  // Seeds one cluster directly, e.g. at warm-up or when consolidation
  // promotes a new class. The count primes the running-mean step size.
  void add_cluster(std::vector<double> centroid, std::uint64_t count) {
    if (!centroids.empty() && centroid.size() != dim())
      throw std::invalid_argument("add_cluster: dimension mismatch");
    if (count == 0) throw std::invalid_argument("add_cluster: count must be >= 1");
    centroids.push_back(std::move(centroid));
    counts.push_back(count);
  }

  std::uint64_t total_count() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

// k-means++ seeding followed by Lloyd iterations until the largest centroid
// displacement drops below tol or max_iters is hit. Empty clusters are
// re-seeded at the point currently farthest from its assigned centroid.
inline ClusterState warmup_init(const std::vector<std::vector<double>>& points,
                                std::size_t k, Rng& rng, int max_iters = 100,
                                double tol = 1e-6) {
  if (k < 1) throw std::invalid_argument("warmup_init: k must be >= 1");
  if (points.size() < k)
    throw std::invalid_argument("warmup_init: fewer points than clusters");
  const std::size_t d = points[0].size();
  for (const auto& p : points)
    if (p.size() != d)
      throw std::invalid_argument("warmup_init: inconsistent dimensions");

  {
    std::set<std::vector<double>> distinct(points.begin(), points.end());
    if (distinct.size() < k)
      throw std::invalid_argument(
          "warmup_init: fewer distinct points than clusters");
  }

  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);

  // k-means++ seeding
  centroids.push_back(points[rng.uniform_int(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i)
    d2[i] = squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    const double r = rng.uniform() * total;
    double acc = 0.0;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc > r) {
        chosen = i;
        break;
      }
    }
    centroids.push_back(points[chosen]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
  }

  // Lloyd iterations
  std::vector<std::size_t> assignment(n);
  auto assign_all = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d2 = squared_distance(points[i], centroids[0]);
      for (std::size_t m = 1; m < k; ++m) {
        const double v = squared_distance(points[i], centroids[m]);
        if (v < best_d2) {
          best_d2 = v;
          best = m;
        }
      }
      assignment[i] = best;
    }
  };

  std::vector<std::uint64_t> counts(k);
  for (int iter = 0; iter < max_iters; ++iter) {
    assign_all();
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[assignment[i]] += 1;
      for (std::size_t j = 0; j < d; ++j) sums[assignment[i]][j] += points[i][j];
    }

    bool reseeded = false;
    for (std::size_t m = 0; m < k; ++m) {
      if (counts[m] > 0) continue;
      // farthest point from its current centroid takes over the empty cluster
      std::size_t far = 0;
      double far_d2 = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assignment[i]] <= 1) continue;  // do not empty another cluster
        const double v = squared_distance(points[i], centroids[assignment[i]]);
        if (v > far_d2) {
          far_d2 = v;
          far = i;
        }
      }
      counts[assignment[far]] -= 1;
      for (std::size_t j = 0; j < d; ++j) sums[assignment[far]][j] -= points[far][j];
      centroids[m] = points[far];
      assignment[far] = m;
      counts[m] = 1;
      for (std::size_t j = 0; j < d; ++j) sums[m][j] = points[far][j];
      reseeded = true;
    }

    double shift = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      std::vector<double> mean(d);
      const double inv = 1.0 / static_cast<double>(counts[m]);
      for (std::size_t j = 0; j < d; ++j) mean[j] = sums[m][j] * inv;
      shift = std::max(shift, euclidean_distance(mean, centroids[m]));
      centroids[m] = std::move(mean);
    }
    if (!reseeded && shift < tol) break;
  }

  assign_all();
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t i = 0; i < n; ++i) counts[assignment[i]] += 1;
  // A cluster can lose all members on the very last mean move; hand it the
  // farthest point so every cluster ends seeded.
  for (std::size_t m = 0; m < k; ++m) {
    if (counts[m] > 0) continue;
    std::size_t far = 0;
    double far_d2 = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[assignment[i]] <= 1) continue;
      const double v = squared_distance(points[i], centroids[assignment[i]]);
      if (v > far_d2) {
        far_d2 = v;
        far = i;
      }
    }
    counts[assignment[far]] -= 1;
    centroids[m] = points[far];
    assignment[far] = m;
    counts[m] = 1;
  }

  ClusterState state;
  state.centroids = std::move(centroids);
  state.counts = std::move(counts);
  return state;
}

struct DaviesBouldinResult {
  double value = 0.0;
  // clusters that received no instance under assign; excluded from the average
  std::size_t excluded_clusters = 0;
};

// DB = (1/M) sum_i max_{j != i} (S_i + S_j) / d(c_i, c_j), with S_i the mean
// member distance to centroid i. Lower is tighter clustering.
inline DaviesBouldinResult davies_bouldin(
    const ClusterState& state, const std::vector<std::vector<double>>& points) {
  const std::size_t k = state.size();
  if (k < 2)
    throw std::invalid_argument("davies_bouldin: undefined for fewer than 2 clusters");

  std::vector<double> spread(k, 0.0);
  std::vector<std::uint64_t> members(k, 0);
  for (const auto& p : points) {
    const std::size_t m = state.assign(p);
    members[m] += 1;
    spread[m] += euclidean_distance(p, state.centroids[m]);
  }

  std::vector<std::size_t> active;
  for (std::size_t m = 0; m < k; ++m) {
    if (members[m] == 0) continue;
    spread[m] /= static_cast<double>(members[m]);
    active.push_back(m);
  }

  DaviesBouldinResult result;
  result.excluded_clusters = k - active.size();
  if (active.size() < 2)
    throw std::invalid_argument(
        "davies_bouldin: fewer than 2 clusters received instances");

  double total = 0.0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    double worst = 0.0;
    for (std::size_t b = 0; b < active.size(); ++b) {
      if (a == b) continue;
      const std::size_t i = active[a], j = active[b];
      const double dist = euclidean_distance(state.centroids[i], state.centroids[j]);
      const double ratio = dist > 0.0 ? (spread[i] + spread[j]) / dist
                                      : std::numeric_limits<double>::infinity();
      worst = std::max(worst, ratio);
    }
    total += worst;
  }
  result.value = total / static_cast<double>(active.size());
  return result;
}

}  // namespace sosr
