#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "sosr/classifier.hpp"
#include "sosr/clustering.hpp"
#include "sosr/core.hpp"
#include "sosr/detector.hpp"

namespace sosr {

// Running per-feature standardization (Welford mean/variance). Predictions
// transform with the statistics accumulated so far; update() is called on
// the learn path only, so a frozen model also freezes its view of the
// feature space.
struct OnlineScaler {
  std::vector<double> mean;
  std::vector<double> m2;  // sum of squared deviations
  std::uint64_t n = 0;

  void update(std::span<const double> x) {
    if (mean.empty()) {
      mean.assign(x.size(), 0.0);
      m2.assign(x.size(), 0.0);
    }
    if (x.size() != mean.size())
      throw std::invalid_argument("OnlineScaler::update: dimension mismatch");
    n += 1;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double delta = x[j] - mean[j];
      mean[j] += delta / static_cast<double>(n);
      m2[j] += delta * (x[j] - mean[j]);
    }
  }

  // (x - mean) / sd with the population variance; zero-variance coordinates
  // are centered only. Identity before the first update.
  std::vector<double> transform(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (n == 0) return out;
    if (x.size() != mean.size())
      throw std::invalid_argument(
          "OnlineScaler::transform: dimension mismatch");
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double sd = std::sqrt(m2[j] / static_cast<double>(n));
      out[j] = sd > 0.0 ? (x[j] - mean[j]) / sd : x[j] - mean[j];
    }
    return out;
  }
};

struct RunRow {
  std::size_t t = 0;
  Label true_label;
  Label closed_pred;               // classifier argmax at prediction time
  std::optional<double> entropy;   // present iff baseline == sosr
};

// Per-instance log of a stream run. Enough to resolve open-set predictions
// post hoc for any candidate threshold, which is what licenses the ROC
// sweep over a single pass.
struct RunRecord {
  std::vector<RunRow> rows;
  std::optional<ClusterState> final_clusters;  // sosr only
  std::optional<OnlineScaler> final_scaler;    // sosr only
  ExperimentConfig config;
};

struct ConsolidationPolicy {
  enum class Kind { Disabled, BufferThreshold };
  Kind kind = Kind::Disabled;
  std::size_t capacity = 100;   // unknown-instance buffer size
  std::size_t min_count = 50;   // consolidate once this many accumulate

  static ConsolidationPolicy disabled() { return {}; }
  static ConsolidationPolicy buffer_threshold(std::size_t capacity = 100,
                                              std::size_t min_count = 50) {
    ConsolidationPolicy p;
    p.kind = Kind::BufferThreshold;
    p.capacity = capacity;
    p.min_count = min_count;
    return p;
  }
  bool enabled() const { return kind != Kind::Disabled; }
};

// FIFO buffer of instances the detector flagged unknown.
class UnknownBuffer {
 public:
  explicit UnknownBuffer(std::size_t capacity = 100) : capacity_(capacity) {}

  void push(std::span<const double> x) {
    if (buf_.size() == capacity_) buf_.pop_front();
    buf_.emplace_back(x.begin(), x.end());
  }
  std::size_t size() const { return buf_.size(); }
  void clear() { buf_.clear(); }

  std::vector<double> mean() const {
    if (buf_.empty()) throw std::logic_error("UnknownBuffer::mean: empty");
    std::vector<double> m(buf_.front().size(), 0.0);
    for (const auto& x : buf_)
      for (std::size_t j = 0; j < m.size(); ++j) m[j] += x[j];
    for (double& v : m) v /= static_cast<double>(buf_.size());
    return m;
  }

 private:
  std::size_t capacity_;
  std::deque<std::vector<double>> buf_;
};

// All models share one standardized view of the stream: the scaler feeds
// both the classifier and the clustering, and is advanced only when a model
// learns.
struct Models {
  ClassifierState classifier;
  ClusterState clusters;
  OnlineScaler scaler;
};

namespace detail {

inline std::size_t count_kc_classes(const std::vector<Instance>& train) {
  if (train.empty()) throw std::invalid_argument("warm_up: empty training set");
  int max_id = -1;
  for (const auto& inst : train) {
    if (!inst.label.is_known())
      throw std::invalid_argument("warm_up: training set contains unknown labels");
    max_id = std::max(max_id, inst.label.class_id());
  }
  const std::size_t n_kc = static_cast<std::size_t>(max_id) + 1;
  std::vector<bool> seen(n_kc, false);
  for (const auto& inst : train) seen[inst.label.class_id()] = true;
  for (std::size_t c = 0; c < n_kc; ++c)
    if (!seen[c])
      throw std::invalid_argument("warm_up: class " + std::to_string(c) +
                                  " absent from training set");
  return n_kc;
}

}  // namespace detail

// Single streaming pass over the training partition in shuffled order: the
// scaler and the k = |KC| clusters (centroids seeded at standard-normal
// positions, count 1) absorb each instance once, and the classifier takes
// one SGD step per instance. Additional warmup_epochs re-train only the
// classifier, on the now-frozen scaler. The training set must contain every
// dense KC id.
inline Models warm_up(const std::vector<Instance>& train,
                      const ExperimentConfig& config, Rng& rng) {
  const std::size_t n_kc = detail::count_kc_classes(train);
  if (train.size() < n_kc)
    throw std::invalid_argument("warm_up: fewer instances than classes");
  const std::size_t d = train[0].features.size();

  Models models;
  std::vector<Label> classes;
  classes.reserve(n_kc);
  for (std::size_t c = 0; c < n_kc; ++c)
    classes.push_back(Label::known(static_cast<int>(c)));
  models.classifier = make_classifier(d, classes, config.learning_rate);
  for (std::size_t c = 0; c < n_kc; ++c) {
    std::vector<double> centroid(d);
    for (double& v : centroid) v = rng.normal();
    models.clusters.add_cluster(std::move(centroid), 1);
  }

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < config.warmup_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      if (epoch == 0) models.scaler.update(train[i].features);
      const std::vector<double> xs =
          models.scaler.transform(train[i].features);
      if (epoch == 0) models.clusters.update(xs);
      models.classifier.learn(xs, train[i].label);
    }
  }
  return models;
}

struct SosrStep {
  Label predicted;      // resolved label in online mode; closed-set argmax in
                        // post-hoc mode (final call is the threshold's)
  Label closed_pred;    // classifier argmax, always recorded
  double entropy = 0.0;
};

// One detector+classifier step of the streaming loop over the raw instance;
// the scaler (not advanced here) maps it into model space. With gamma_h
// supplied the prediction is resolved online (consolidation policy consulted
// on the unknown branch); without it the caller resolves later from
// (closed_pred, H).
inline SosrStep process_instance_sosr(
    Models& models, std::span<const double> x,
    std::optional<double> gamma_h,
    const ConsolidationPolicy& policy = ConsolidationPolicy::disabled(),
    UnknownBuffer* buffer = nullptr) {
  SosrStep step;
  const std::vector<double> xs = models.scaler.transform(x);
  const NoveltyScore score = score_novelty(xs, models.clusters);
  step.entropy = score.entropy;
  step.closed_pred = models.classifier.predict(xs);
  step.predicted = step.closed_pred;

  if (gamma_h && is_unknown(score.entropy, *gamma_h)) {
    step.predicted = Label::unknown();
    if (policy.enabled()) {
      if (!buffer)
        throw std::invalid_argument(
            "process_instance_sosr: consolidation policy needs a buffer");
      buffer->push(xs);
      if (buffer->size() >= policy.min_count) {
        const Label fresh =
            Label::known(static_cast<int>(models.classifier.n_classes()));
        models.classifier.add_class(fresh);
        models.classifier.learn(xs, fresh);
        models.clusters.add_cluster(buffer->mean(), buffer->size());
        buffer->clear();
        step.predicted = fresh;
      }
    }
  }
  return step;
}

// Test-then-train update once the true label arrives. Updates are driven by
// the verified label alone, so for sosr one pass yields entropy scores that
// stay valid for every candidate threshold. The scaler advances exactly when
// a model learns from the instance.
inline void verify_and_update(Models& models, std::span<const double> x,
                              Label true_label, Baseline baseline) {
  switch (baseline) {
    case Baseline::Static:
      break;
    case Baseline::Incremental: {
      if (true_label.is_unknown() &&
          !models.classifier.registry_index(Label::unknown()))
        models.classifier.add_class(Label::unknown());
      models.scaler.update(x);
      models.classifier.learn(models.scaler.transform(x), true_label);
      break;
    }
    case Baseline::Sosr:
      if (true_label.is_known()) {
        models.scaler.update(x);
        const std::vector<double> xs = models.scaler.transform(x);
        models.classifier.learn(xs, true_label);
        models.clusters.update(xs);
      }
      break;
  }
}

// Full test-then-train run: warm-up, then predict / log / update per stream
// instance in arrival order. Deterministic given config.seed.
inline RunRecord run_stream(const std::vector<Instance>& train,
                            const std::vector<Instance>& stream,
                            const ExperimentConfig& config) {
  validate_config(config);
  if (stream.empty()) throw std::invalid_argument("run_stream: empty stream");

  Rng rng(derive_seed(config.seed, 1));
  Models models = warm_up(train, config, rng);

  RunRecord record;
  record.config = config;
  record.rows.reserve(stream.size());

  for (std::size_t t = 0; t < stream.size(); ++t) {
    const Instance& inst = stream[t];
    RunRow row;
    row.t = t;
    row.true_label = inst.label;
    if (config.baseline == Baseline::Sosr) {
      const SosrStep step =
          process_instance_sosr(models, inst.features, config.gamma_h);
      row.closed_pred = step.closed_pred;
      row.entropy = step.entropy;
    } else {
      row.closed_pred =
          models.classifier.predict(models.scaler.transform(inst.features));
    }
    record.rows.push_back(row);
    verify_and_update(models, inst.features, inst.label, config.baseline);
  }

  if (config.baseline == Baseline::Sosr) {
    record.final_clusters = std::move(models.clusters);
    record.final_scaler = std::move(models.scaler);
  }
  return record;
}

// CSV: t,true_label,closed_pred,entropy (entropy empty for non-sosr runs).
inline void write_run_record_csv(const RunRecord& record, std::ostream& out) {
  out << "t,true_label,closed_pred,entropy\n";
  for (const RunRow& row : record.rows) {
    out << row.t << ',' << to_string(row.true_label) << ','
        << to_string(row.closed_pred) << ',';
    if (row.entropy) out << detail::format_double(*row.entropy);
    out << '\n';
  }
}

}  // namespace sosr
