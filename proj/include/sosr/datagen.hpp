#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sosr/classifier.hpp"  // detail::format_double / parse_double
#include "sosr/core.hpp"
#include "sosr/rng.hpp"

namespace sosr {

struct GeneratorParams {
  std::string name;
  std::size_t n_instances = 0;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  double std_dev = 1.0;    // isoGauss intra-cluster standard deviation
  double class_sep = 1.0;  // hyperCube: factor multiplying the hypercube size
  std::uint64_t seed = 0;
};

inline void validate_generator_params(const GeneratorParams& p) {
  if (p.n_classes < 2)
    throw std::invalid_argument("generator: need at least 2 classes");
  if (p.n_features < 1)
    throw std::invalid_argument("generator: need at least 1 feature");
  if (p.n_instances < 10 * p.n_classes)
    throw std::invalid_argument("generator: need >= 10 instances per class");
  if (!(p.std_dev > 0.0))
    throw std::invalid_argument("generator: std_dev must be positive");
  if (!(p.class_sep > 0.0))
    throw std::invalid_argument("generator: class_sep must be positive");
}

namespace detail {

// n_instances spread as evenly as possible: the first n % k classes get one
// extra instance.
inline std::vector<std::size_t> even_class_split(std::size_t n, std::size_t k) {
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t c = 0; c < n % k; ++c) sizes[c] += 1;
  return sizes;
}

inline Dataset from_centers(const GeneratorParams& p,
                            const std::vector<std::vector<double>>& centers,
                            double noise_std, Rng& rng) {
  Dataset ds;
  ds.name = p.name;
  ds.n_classes = p.n_classes;
  ds.d = p.n_features;
  ds.instances.reserve(p.n_instances);
  const auto sizes = even_class_split(p.n_instances, p.n_classes);
  std::size_t t = 0;
  for (std::size_t c = 0; c < p.n_classes; ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      Instance inst;
      inst.index = t++;
      inst.label = Label::known(static_cast<int>(c));
      inst.features.resize(p.n_features);
      for (std::size_t j = 0; j < p.n_features; ++j)
        inst.features[j] = centers[c][j] + noise_std * rng.normal();
      ds.instances.push_back(std::move(inst));
    }
  }
  return ds;
}

}  // namespace detail

// Isotropic Gaussian point clouds: class centers drawn uniformly in
// [-10, 10]^d, per-coordinate noise std = std_dev.
inline Dataset gen_iso_gauss(const GeneratorParams& p) {
  validate_generator_params(p);
  Rng rng(p.seed);
  std::vector<std::vector<double>> centers(p.n_classes,
                                           std::vector<double>(p.n_features));
  for (auto& c : centers)
    for (double& v : c) v = rng.uniform(-10.0, 10.0);
  return detail::from_centers(p, centers, p.std_dev, rng);
}

// Hypercube-vertex classes: centers are distinct vertices of {-1,+1}^m scaled
// by class_sep, with m the smallest cube dimension holding n_classes vertices;
// features past m are zero-centered. Instances carry unit Gaussian noise, so
// low class_sep buries the vertices in the noise.
inline Dataset gen_hypercube(const GeneratorParams& p) {
  validate_generator_params(p);
  if (p.n_features < 63 &&
      (std::uint64_t{1} << p.n_features) < p.n_classes)
    throw std::invalid_argument(
        "gen_hypercube: 2^n_features < n_classes, not enough vertices");
  Rng rng(p.seed);

  // Informative subspace: the smallest cube with enough vertices for the
  // requested class count. Coordinates past it carry noise only.
  std::size_t n_info = 0;
  while ((std::uint64_t{1} << n_info) < p.n_classes) ++n_info;
  if (n_info == 0) n_info = 1;

  std::vector<std::uint64_t> vertex_masks;
  if (n_info <= 20) {
    std::vector<std::uint64_t> all(std::size_t{1} << n_info);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    // partial Fisher-Yates: the first n_classes entries are a uniform sample
    for (std::size_t i = 0; i < p.n_classes; ++i) {
      const std::size_t j = i + rng.uniform_int(all.size() - i);
      std::swap(all[i], all[j]);
      vertex_masks.push_back(all[i]);
    }
  } else {
    std::set<std::uint64_t> seen;
    while (seen.size() < p.n_classes) {
      std::uint64_t m = rng.next_u64();
      if (n_info < 64) m &= (std::uint64_t{1} << n_info) - 1;
      if (seen.insert(m).second) vertex_masks.push_back(m);
    }
  }

  std::vector<std::vector<double>> centers(
      p.n_classes, std::vector<double>(p.n_features, 0.0));
  for (std::size_t c = 0; c < p.n_classes; ++c)
    for (std::size_t j = 0; j < n_info; ++j)
      centers[c][j] =
          ((vertex_masks[c] >> j) & 1 ? 1.0 : -1.0) * p.class_sep;
  return detail::from_centers(p, centers, 1.0, rng);
}

// Dataset CSV: header f0,...,f{d-1},label; features carry 17 significant
// digits, so a load recovers the exact doubles and the bytes are stable for
// a fixed dataset.
inline void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  for (std::size_t j = 0; j < ds.d; ++j) out << 'f' << j << ',';
  out << "label\n";
  for (const Instance& inst : ds.instances) {
    for (double v : inst.features) out << detail::format_double(v) << ',';
    out << to_string(inst.label) << '\n';
  }
}

inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_dataset_csv(ds, out);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace detail

// Loads a labeled CSV: header row, numeric feature columns, string class
// label in the last column. Labels map to dense ids in first-appearance
// order. Parse failures report the 1-based file row.
inline Dataset load_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(name + ": empty file, expected a header row");
  const std::size_t n_cols = detail::split_csv_line(line).size();
  if (n_cols < 2)
    throw std::runtime_error(name + ": header must name >= 1 feature and a label");

  Dataset ds;
  ds.name = name;
  ds.d = n_cols - 1;
  std::map<std::string, int> label_ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    // a blank CRLF line arrives as a lone carriage return
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != n_cols)
      throw std::runtime_error(name + ": row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(n_cols));
    Instance inst;
    inst.index = ds.instances.size();
    inst.features.resize(ds.d);
    for (std::size_t j = 0; j < ds.d; ++j) {
      double v;
      try {
        v = detail::parse_double(cells[j]);
      } catch (const std::exception&) {
        throw std::runtime_error(name + ": row " + std::to_string(row) +
                                 ": non-numeric feature '" + cells[j] + "'");
      }
      if (!std::isfinite(v))
        throw std::runtime_error(name + ": row " + std::to_string(row) +
                                 ": non-finite feature '" + cells[j] + "'");
      inst.features[j] = v;
    }
    const std::string& tag = cells.back();
    auto it = label_ids.find(tag);
    if (it == label_ids.end())
      it = label_ids.emplace(tag, static_cast<int>(label_ids.size())).first;
    inst.label = Label::known(it->second);
    ds.instances.push_back(std::move(inst));
  }
  ds.n_classes = label_ids.size();
  if (ds.n_classes < 2)
    throw std::runtime_error(name + ": needs >= 2 classes, found " +
                             std::to_string(ds.n_classes));
  return ds;
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_csv(in, path);
}

struct StreamSplit {
  std::vector<Instance> train;   // KC 80%, dense KC labels
  std::vector<Instance> stream;  // KC 20% + 10% of each UC class, shuffled
};

// Benchmark protocol split: per KC class a seeded stratified 80/20 cut, the
// 20% interleaved at random with a 10% seeded sample of each UC class
// (relabeled to the unknown sentinel). Dense KC re-indexing applies to both
// partitions.
inline StreamSplit assemble_stream(const Dataset& ds,
                                   const std::vector<int>& kc_ids,
                                   const std::vector<int>& uc_ids,
                                   std::uint64_t seed) {
  Rng rng(seed);
  const auto relabel = kc_relabel_map(kc_ids);
  auto dense_id = [&](int orig) {
    for (auto [from, to] : relabel)
      if (from == orig) return to;
    throw std::logic_error("assemble_stream: id not in KC set");
  };

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const Label l = ds.instances[i].label;
    if (!l.is_known())
      throw std::invalid_argument("assemble_stream: dataset already has unknowns");
    by_class[l.class_id()].push_back(i);
  }

  auto round_half_up = [](double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
  };

  StreamSplit split;
  std::vector<Instance> pool;  // stream candidates before the final shuffle

  for (int kc : kc_ids) {
    auto it = by_class.find(kc);
    const std::size_t n_c = it == by_class.end() ? 0 : it->second.size();
    if (n_c < 5)
      throw std::invalid_argument("assemble_stream: KC class " +
                                  std::to_string(kc) + " has " +
                                  std::to_string(n_c) +
                                  " instances; need >= 5 for an 80/20 split");
    std::vector<std::size_t>& idx = it->second;
    rng.shuffle(idx);
    const std::size_t n_train = round_half_up(0.8 * static_cast<double>(n_c));
    const int dense = dense_id(kc);
    for (std::size_t i = 0; i < n_c; ++i) {
      Instance inst = ds.instances[idx[i]];
      inst.label = Label::known(dense);
      if (i < n_train)
        split.train.push_back(std::move(inst));
      else
        pool.push_back(std::move(inst));
    }
  }

  for (int uc : uc_ids) {
    auto it = by_class.find(uc);
    if (it == by_class.end()) continue;
    std::vector<std::size_t>& idx = it->second;
    rng.shuffle(idx);
    const std::size_t take = round_half_up(0.1 * static_cast<double>(idx.size()));
    for (std::size_t i = 0; i < take; ++i) {
      Instance inst = ds.instances[idx[i]];
      inst.label = Label::unknown();
      pool.push_back(std::move(inst));
    }
  }

  rng.shuffle(pool);
  split.stream = std::move(pool);
  for (std::size_t i = 0; i < split.train.size(); ++i) split.train[i].index = i;
  for (std::size_t i = 0; i < split.stream.size(); ++i) split.stream[i].index = i;
  return split;
}

}  // namespace sosr
