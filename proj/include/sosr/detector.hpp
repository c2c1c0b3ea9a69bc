#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "sosr/clustering.hpp"

namespace sosr {

// Inverse-square-distance cluster membership weights, normalized over the
// clusters: p(m|x) = (1/d(x,c_m)^2) / sum_m' (1/d(x,c_m')^2).
// An instance closer than 1e-12 to a centroid takes the whole mass, split
// uniformly when several centroids coincide with it.
inline std::vector<double> pseudo_probabilities(std::span<const double> x,
                                                const ClusterState& state) {
  const std::size_t m = state.size();
  if (m == 0)
    throw std::invalid_argument("pseudo_probabilities: no clusters");

  constexpr double kCoincident2 = 1e-12 * 1e-12;
  std::vector<double> d2(m);
  std::size_t coincident = 0;
  for (std::size_t i = 0; i < m; ++i) {
    d2[i] = squared_distance(x, state.centroids[i]);
    if (d2[i] < kCoincident2) ++coincident;
  }

  std::vector<double> p(m, 0.0);
  if (coincident > 0) {
    const double share = 1.0 / static_cast<double>(coincident);
    for (std::size_t i = 0; i < m; ++i)
      if (d2[i] < kCoincident2) p[i] = share;
    return p;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    p[i] = 1.0 / d2[i];
    total += p[i];
  }
  if (total == 0.0) {  // all weights underflowed: x astronomically far
    const double share = 1.0 / static_cast<double>(m);
    for (double& v : p) v = share;
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

// Base-M Shannon entropy of the membership vector, normalized to [0,1];
// 0 * log 0 counts as 0. Base-1 is undefined, so M = 1 is rejected.
inline double entropy(std::span<const double> p) {
  const std::size_t m = p.size();
  if (m < 2)
    throw std::invalid_argument("entropy: needs at least 2 clusters");
  const double log_m = std::log(static_cast<double>(m));
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  h /= log_m;
  if (h < 0.0) h = 0.0;
  if (h > 1.0) h = 1.0;
  return h;
}

// H >= gamma_h flags the instance unknown; the boundary belongs to unknown.
inline bool is_unknown(double h, double gamma_h) { return h >= gamma_h; }

struct NoveltyScore {
  std::vector<double> pseudo_probs;
  double entropy = 0.0;
};

inline NoveltyScore score_novelty(std::span<const double> x,
                                  const ClusterState& state) {
  NoveltyScore score;
  score.pseudo_probs = pseudo_probabilities(x, state);
  score.entropy = entropy(score.pseudo_probs);
  return score;
}

}  // namespace sosr
