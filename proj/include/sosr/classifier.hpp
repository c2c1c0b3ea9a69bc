#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sosr/core.hpp"

namespace sosr {

namespace detail {

inline std::string format_double(double v, int precision = 17) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw std::invalid_argument("bad numeric token '" + tok + "'");
  return v;
}

}  // namespace detail

// Incremental multinomial softmax classifier. One weight row per registered
// class, no intercept term: logits are plain dot products over the d
// features. Single SGD step per verified instance on the cross-entropy loss.
// Classes can be appended at runtime, which is how the incremental baseline
// absorbs the unknown label.
struct ClassifierState {
  std::vector<std::vector<double>> weights;  // |registry| rows, d columns
  std::vector<Label> class_registry;
  double learning_rate = 0.01;

  std::size_t dim() const { return weights.empty() ? 0 : weights[0].size(); }
  std::size_t n_classes() const { return class_registry.size(); }

  std::optional<std::size_t> registry_index(Label l) const {
    for (std::size_t i = 0; i < class_registry.size(); ++i)
      if (class_registry[i] == l) return i;
    return std::nullopt;
  }

  std::vector<double> logits(std::span<const double> x) const {
    std::vector<double> z(weights.size());
    for (std::size_t c = 0; c < weights.size(); ++c) {
      const auto& w = weights[c];
      double acc = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * x[j];
      z[c] = acc;
    }
    return z;
  }

  // Softmax over the registry, max-logit subtraction for stability.
  std::vector<double> predict_proba(std::span<const double> x) const {
    std::vector<double> z = logits(x);
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
      v = std::exp(v - zmax);
      total += v;
    }
    for (double& v : z) v /= total;
    return z;
  }

  // argmax class; ties break to the lowest registry index.
  Label predict(std::span<const double> x) const {
    const std::vector<double> z = logits(x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.size(); ++c)
      if (z[c] > z[best]) best = c;
    return class_registry[best];
  }

  // One SGD step: w_c <- w_c - lr * (p_c - [c == y]) * x.
  void learn(std::span<const double> x, Label y) {
    const auto yi = registry_index(y);
    if (!yi)
      throw std::invalid_argument("learn: label " + to_string(y) +
                                  " is not registered");
    const std::vector<double> p = predict_proba(x);
    for (std::size_t c = 0; c < weights.size(); ++c) {
      const double coef =
          learning_rate * (p[c] - (c == *yi ? 1.0 : 0.0));
      auto& w = weights[c];
      for (std::size_t j = 0; j < x.size(); ++j) w[j] -= coef * x[j];
    }
  }

  // Registers a new class with a zero weight row; existing rows untouched.
  void add_class(Label l) {
    if (registry_index(l))
      throw std::invalid_argument("add_class: label " + to_string(l) +
                                  " already registered");
    class_registry.push_back(l);
    weights.emplace_back(dim(), 0.0);
  }
};

inline ClassifierState make_classifier(std::size_t d,
                                       const std::vector<Label>& classes,
                                       double learning_rate) {
  ClassifierState state;
  state.learning_rate = learning_rate;
  state.class_registry = classes;
  state.weights.assign(classes.size(), std::vector<double>(d, 0.0));
  return state;
}

// Flat text model dump; round-trips value-exact at 17 significant digits.
inline void dump_classifier(const ClassifierState& state, std::ostream& out) {
  out << "classes " << state.n_classes() << " features " << state.dim()
      << " lr " << detail::format_double(state.learning_rate) << "\n";
  for (std::size_t c = 0; c < state.n_classes(); ++c) {
    out << to_string(state.class_registry[c]);
    for (double w : state.weights[c]) out << ' ' << detail::format_double(w);
    out << "\n";
  }
}

inline ClassifierState load_classifier(std::istream& in) {
  std::string tok;
  std::size_t n_classes = 0, d = 0;
  double lr = 0.0;
  if (!(in >> tok) || tok != "classes" || !(in >> n_classes) || !(in >> tok) ||
      tok != "features" || !(in >> d) || !(in >> tok) || tok != "lr" ||
      !(in >> tok))
    throw std::invalid_argument("load_classifier: malformed header");
  lr = detail::parse_double(tok);

  ClassifierState state;
  state.learning_rate = lr;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (!(in >> tok))
      throw std::invalid_argument("load_classifier: missing class row");
    state.class_registry.push_back(label_from_string(tok));
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) {
      if (!(in >> tok))
        throw std::invalid_argument("load_classifier: truncated weight row");
      row[j] = detail::parse_double(tok);
    }
    state.weights.push_back(std::move(row));
  }
  return state;
}

}  // namespace sosr
