#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sosr/rng.hpp"

namespace sosr {

// Class label: either one of the known classes (a dense index into the
// classifier registry) or the single "unknown" sentinel that all held-out
// classes collapse into.
class Label {
 public:
  constexpr Label() = default;

  static constexpr Label known(int class_id) {
    Label l;
    l.id_ = class_id;
    return l;
  }
  static constexpr Label unknown() { return Label{}; }

  constexpr bool is_known() const { return id_ >= 0; }
  constexpr bool is_unknown() const { return id_ < 0; }

  constexpr int class_id() const {
    return id_;  // meaningful only when is_known()
  }

  friend constexpr auto operator<=>(const Label&, const Label&) = default;

 private:
  int id_ = -1;
};

inline std::string to_string(Label l) {
  return l.is_known() ? std::to_string(l.class_id()) : std::string("unknown");
}

inline Label label_from_string(const std::string& s) {
  if (s == "unknown") return Label::unknown();
  std::size_t pos = 0;
  int id = std::stoi(s, &pos);
  if (pos != s.size() || id < 0)
    throw std::invalid_argument("label_from_string: bad label '" + s + "'");
  return Label::known(id);
}

struct Instance {
  std::vector<double> features;
  Label label;
  std::size_t index = 0;  // arrival order t
};

struct Dataset {
  std::string name;
  std::size_t n_classes = 0;
  std::size_t d = 0;
  std::vector<Instance> instances;
};

inline void validate_dataset(const Dataset& ds) {
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const Instance& inst = ds.instances[i];
    if (inst.features.size() != ds.d)
      throw std::invalid_argument("dataset '" + ds.name + "': instance " +
                                  std::to_string(i) + " has dimension " +
                                  std::to_string(inst.features.size()) +
                                  ", expected " + std::to_string(ds.d));
    for (double v : inst.features)
      if (!std::isfinite(v))
        throw std::invalid_argument("dataset '" + ds.name + "': instance " +
                                    std::to_string(i) +
                                    " has a non-finite feature");
    if (inst.label.is_known() &&
        inst.label.class_id() >= static_cast<int>(ds.n_classes))
      throw std::invalid_argument("dataset '" + ds.name + "': instance " +
                                  std::to_string(i) + " has label " +
                                  std::to_string(inst.label.class_id()) +
                                  " >= n_classes");
  }
}

enum class Baseline { Static, Incremental, Sosr };

inline std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::Static: return "static";
    case Baseline::Incremental: return "incremental";
    case Baseline::Sosr: return "sosr";
  }
  throw std::logic_error("to_string: bad Baseline");
}

inline Baseline baseline_from_string(const std::string& s) {
  if (s == "static") return Baseline::Static;
  if (s == "incremental") return Baseline::Incremental;
  if (s == "sosr") return Baseline::Sosr;
  throw std::invalid_argument("unknown baseline '" + s + "'");
}

struct ExperimentConfig {
  double beta = 0.2;          // missing-class ratio |UC| / (|KC| + |UC|)
  std::uint64_t seed = 0;
  Baseline baseline = Baseline::Sosr;
  double learning_rate = 0.01;
  int warmup_epochs = 1;
  std::optional<double> gamma_h;  // absent: post-hoc Youden threshold
};

inline void validate_config(const ExperimentConfig& cfg) {
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0))
    throw std::invalid_argument("config: beta must lie in (0,1)");
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("config: learning_rate must be positive");
  if (cfg.warmup_epochs < 1)
    throw std::invalid_argument("config: warmup_epochs must be >= 1");
  if (cfg.gamma_h && !(*cfg.gamma_h > 0.0 && *cfg.gamma_h <= 1.0))
    throw std::invalid_argument("config: gamma_h must lie in (0,1]");
}

struct LabelSpacePartition {
  std::vector<int> kc_ids;  // sorted ascending
  std::vector<int> uc_ids;  // sorted ascending
};

// Splits the class ids {0, ..., n_classes-1} into known and unknown sets.
// |uc| = max(1, half-up-round(beta * n_classes)); the unknown ids are drawn
// uniformly without replacement. Rejects splits that leave fewer than two
// known classes.
inline LabelSpacePartition label_space_partition(std::size_t n_classes,
                                                 double beta, Rng& rng) {
  if (n_classes < 3)
    throw std::invalid_argument("label_space_partition: need >= 3 classes");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("label_space_partition: beta must lie in (0,1)");
  // +1e-9 absorbs representation error in beta * n (e.g. 0.3 * 5 -> 1.4999...).
  const auto n_uc = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::floor(beta * static_cast<double>(n_classes) + 0.5 + 1e-9)));
  if (n_classes < n_uc + 2)
    throw std::invalid_argument(
        "label_space_partition: beta " + std::to_string(beta) + " leaves " +
        std::to_string(n_classes - std::min(n_classes, n_uc)) +
        " known classes; need >= 2");

  std::vector<int> ids(n_classes);
  for (std::size_t i = 0; i < n_classes; ++i) ids[i] = static_cast<int>(i);
  rng.shuffle(ids);

  LabelSpacePartition part;
  part.uc_ids.assign(ids.begin(), ids.begin() + static_cast<long>(n_uc));
  part.kc_ids.assign(ids.begin() + static_cast<long>(n_uc), ids.end());
  std::sort(part.uc_ids.begin(), part.uc_ids.end());
  std::sort(part.kc_ids.begin(), part.kc_ids.end());
  return part;
}

// Dense re-indexing of the known classes: the i-th smallest original id
// maps to i. The map is a bijection on the KC set.
inline std::vector<std::pair<int, int>> kc_relabel_map(
    const std::vector<int>& kc_ids) {
  std::vector<int> sorted = kc_ids;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<int, int>> map;
  map.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    map.emplace_back(sorted[i], static_cast<int>(i));
  return map;
}

}  // namespace sosr
