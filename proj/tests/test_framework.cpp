#include "sosr/framework.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "sosr/core.hpp"
#include "sosr/detector.hpp"
#include "sosr/rng.hpp"

namespace {

using sosr::Baseline;
using sosr::ExperimentConfig;
using sosr::Instance;
using sosr::Label;
using sosr::Models;
using sosr::OnlineScaler;
using sosr::Rng;
using sosr::RunRecord;
using sosr::UnknownBuffer;

TEST(OnlineScaler, IdentityBeforeFirstUpdate) {
  const OnlineScaler scaler;
  const std::vector<double> x = {3.0, -7.5};
  EXPECT_EQ(scaler.transform(x), x);
}

TEST(OnlineScaler, MatchesTwoPassMeanAndVariance) {
  Rng rng(3);
  OnlineScaler scaler;
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x = {rng.normal() * 3.0 + 5.0,
                             rng.normal() * 0.01 - 2.0, rng.uniform()};
    scaler.update(x);
    data.push_back(std::move(x));
  }
  ASSERT_EQ(scaler.n, 500u);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (const auto& x : data) mean += x[j];
    mean /= static_cast<double>(data.size());
    double ss = 0.0;
    for (const auto& x : data) ss += (x[j] - mean) * (x[j] - mean);
    EXPECT_NEAR(scaler.mean[j], mean, 1e-12);
    EXPECT_NEAR(scaler.m2[j], ss, 1e-9);
  }
}

TEST(OnlineScaler, TransformStandardizes) {
  OnlineScaler scaler;
  scaler.update(std::vector<double>{0.0, 1.0});
  scaler.update(std::vector<double>{10.0, 1.0});
  // mean (5, 1), population sd (5, 0); the flat coordinate only centers
  const auto z = scaler.transform(std::vector<double>{10.0, 3.0});
  EXPECT_DOUBLE_EQ(z[0], 1.0);
  EXPECT_DOUBLE_EQ(z[1], 2.0);
  const auto at_mean = scaler.transform(std::vector<double>{5.0, 1.0});
  EXPECT_DOUBLE_EQ(at_mean[0], 0.0);
  EXPECT_DOUBLE_EQ(at_mean[1], 0.0);
}

TEST(OnlineScaler, TransformDoesNotAdvanceState) {
  OnlineScaler scaler;
  scaler.update(std::vector<double>{1.0});
  scaler.transform(std::vector<double>{100.0});
  EXPECT_EQ(scaler.n, 1u);
  EXPECT_DOUBLE_EQ(scaler.mean[0], 1.0);
}

TEST(OnlineScaler, DimensionMismatchThrows) {
  OnlineScaler scaler;
  scaler.update(std::vector<double>{1.0, 2.0});
  EXPECT_THROW(scaler.update(std::vector<double>{1.0}),
               std::invalid_argument);
  EXPECT_THROW(scaler.transform(std::vector<double>{1.0, 2.0, 3.0}),
               std::invalid_argument);
}

TEST(UnknownBuffer, FifoEvictionAtCapacity) {
  UnknownBuffer buf(2);
  buf.push(std::vector<double>{1.0});
  buf.push(std::vector<double>{2.0});
  buf.push(std::vector<double>{5.0});  // evicts 1.0
  EXPECT_EQ(buf.size(), 2u);
  EXPECT_DOUBLE_EQ(buf.mean()[0], 3.5);
  buf.clear();
  EXPECT_EQ(buf.size(), 0u);
  EXPECT_THROW(buf.mean(), std::logic_error);
}

std::vector<Instance> two_class_train() {
  // class 0 near x = -4, class 1 near x = +4, second coordinate is noise
  std::vector<Instance> train;
  Rng rng(11);
  for (int i = 0; i < 40; ++i) {
    Instance inst;
    const int c = i % 2;
    inst.label = Label::known(c);
    inst.features = {(c == 0 ? -4.0 : 4.0) + 0.3 * rng.normal(),
                     rng.normal()};
    inst.index = static_cast<std::size_t>(i);
    train.push_back(std::move(inst));
  }
  return train;
}

ExperimentConfig sosr_config(std::uint64_t seed = 7) {
  ExperimentConfig cfg;
  cfg.beta = 0.25;  // unused by warm_up / direct model calls
  cfg.seed = seed;
  cfg.baseline = Baseline::Sosr;
  return cfg;
}

TEST(WarmUp, BuildsDenseRegistryAndOneClusterPerClass) {
  const auto train = two_class_train();
  Rng rng(1);
  const Models models = sosr::warm_up(train, sosr_config(), rng);

  ASSERT_EQ(models.classifier.n_classes(), 2u);
  EXPECT_EQ(models.classifier.class_registry[0], Label::known(0));
  EXPECT_EQ(models.classifier.class_registry[1], Label::known(1));
  EXPECT_EQ(models.classifier.dim(), 2u);

  ASSERT_EQ(models.clusters.size(), 2u);
  // each seed counts 1, every training instance absorbed exactly once
  EXPECT_EQ(models.clusters.total_count(), 2u + train.size());
  EXPECT_EQ(models.scaler.n, train.size());
}

TEST(WarmUp, ExtraEpochsRetrainOnlyTheClassifier) {
  const auto train = two_class_train();
  ExperimentConfig one = sosr_config();
  ExperimentConfig two = sosr_config();
  two.warmup_epochs = 2;
  Rng ra(5), rb(5);
  const Models ma = sosr::warm_up(train, one, ra);
  const Models mb = sosr::warm_up(train, two, rb);
  EXPECT_EQ(ma.clusters.centroids, mb.clusters.centroids);
  EXPECT_EQ(ma.clusters.counts, mb.clusters.counts);
  EXPECT_EQ(ma.scaler.mean, mb.scaler.mean);
  EXPECT_EQ(ma.scaler.n, mb.scaler.n);
  EXPECT_NE(ma.classifier.weights, mb.classifier.weights);
}

TEST(WarmUp, Deterministic) {
  const auto train = two_class_train();
  Rng ra(9), rb(9);
  const Models ma = sosr::warm_up(train, sosr_config(), ra);
  const Models mb = sosr::warm_up(train, sosr_config(), rb);
  EXPECT_EQ(ma.classifier.weights, mb.classifier.weights);
  EXPECT_EQ(ma.clusters.centroids, mb.clusters.centroids);
}

TEST(WarmUp, LearnsTheTrainingClasses) {
  const auto train = two_class_train();
  Rng rng(2);
  const Models models = sosr::warm_up(train, sosr_config(), rng);
  int correct = 0;
  for (const Instance& inst : train)
    if (models.classifier.predict(models.scaler.transform(inst.features)) ==
        inst.label)
      correct += 1;
  EXPECT_GT(correct, 36);  // 90% on its own linearly separable training set
}

TEST(WarmUp, Rejections) {
  Rng rng(3);
  EXPECT_THROW(sosr::warm_up({}, sosr_config(), rng), std::invalid_argument);

  std::vector<Instance> with_unknown = two_class_train();
  with_unknown[0].label = Label::unknown();
  EXPECT_THROW(sosr::warm_up(with_unknown, sosr_config(), rng),
               std::invalid_argument);

  // labels 0 and 2 leave a hole at 1, so the ids are not dense
  std::vector<Instance> gappy = two_class_train();
  for (auto& inst : gappy)
    if (inst.label == Label::known(1)) inst.label = Label::known(2);
  EXPECT_THROW(sosr::warm_up(gappy, sosr_config(), rng),
               std::invalid_argument);
}

// models with an identity scaler and pinned geometry for scripted stepping
Models scripted_models() {
  Models models;
  models.classifier =
      sosr::make_classifier(1, {Label::known(0), Label::known(1)}, 0.01);
  models.classifier.weights = {{1.0}, {-1.0}};
  models.clusters.add_cluster({-2.0}, 1);
  models.clusters.add_cluster({2.0}, 1);
  return models;
}

TEST(ProcessInstanceSosr, RecordsEntropyAndClosedPrediction) {
  Models models = scripted_models();
  const std::vector<double> x = {1.9};
  const auto step = sosr::process_instance_sosr(models, x, std::nullopt);
  EXPECT_EQ(step.closed_pred, Label::known(0));  // w = (1, -1), x > 0
  EXPECT_EQ(step.predicted, step.closed_pred);   // no threshold given
  const auto score = sosr::score_novelty(x, models.clusters);
  EXPECT_DOUBLE_EQ(step.entropy, score.entropy);
}

TEST(ProcessInstanceSosr, ThresholdFlagsUnknownOnline) {
  Models models = scripted_models();
  // x = 0 is equidistant, so H = 1 >= any gamma
  const auto step =
      sosr::process_instance_sosr(models, std::vector<double>{0.0}, 0.9);
  EXPECT_EQ(step.predicted, Label::unknown());
  EXPECT_EQ(step.closed_pred, Label::known(0));
  // a clearly resolved instance stays at the closed-set prediction
  const auto resolved =
      sosr::process_instance_sosr(models, std::vector<double>{-2.01}, 0.9);
  EXPECT_EQ(resolved.predicted, resolved.closed_pred);
}

TEST(ProcessInstanceSosr, AppliesTheScalerBeforeScoring) {
  Models models = scripted_models();
  // shift the feature view by +100: raw 100 lands between the centroids
  for (int i = 0; i < 2; ++i)
    models.scaler.update(std::vector<double>{100.0});
  const auto step = sosr::process_instance_sosr(
      models, std::vector<double>{100.0}, std::nullopt);
  EXPECT_DOUBLE_EQ(step.entropy, 1.0);  // transformed to 0, equidistant
}

TEST(ProcessInstanceSosr, ConsolidationPromotesABufferedClass) {
  Models models = scripted_models();
  const auto policy = sosr::ConsolidationPolicy::buffer_threshold(10, 2);
  UnknownBuffer buffer(10);

  const auto first = sosr::process_instance_sosr(
      models, std::vector<double>{0.1}, 0.9, policy, &buffer);
  EXPECT_EQ(first.predicted, Label::unknown());
  EXPECT_EQ(buffer.size(), 1u);
  EXPECT_EQ(models.classifier.n_classes(), 2u);

  const auto second = sosr::process_instance_sosr(
      models, std::vector<double>{-0.1}, 0.9, policy, &buffer);
  EXPECT_EQ(second.predicted, Label::known(2));  // freshly registered class
  EXPECT_EQ(buffer.size(), 0u);
  ASSERT_EQ(models.classifier.n_classes(), 3u);
  EXPECT_EQ(models.classifier.class_registry[2], Label::known(2));
  ASSERT_EQ(models.clusters.size(), 3u);
  EXPECT_DOUBLE_EQ(models.clusters.centroids[2][0], 0.0);  // buffer mean
  EXPECT_EQ(models.clusters.counts[2], 2u);
}

TEST(ProcessInstanceSosr, PolicyWithoutBufferThrows) {
  Models models = scripted_models();
  const auto policy = sosr::ConsolidationPolicy::buffer_threshold();
  EXPECT_THROW(sosr::process_instance_sosr(models, std::vector<double>{0.0},
                                           0.5, policy, nullptr),
               std::invalid_argument);
}

TEST(VerifyAndUpdate, StaticTouchesNothing) {
  Models models = scripted_models();
  const Models before = models;
  sosr::verify_and_update(models, std::vector<double>{0.5}, Label::known(0),
                          Baseline::Static);
  sosr::verify_and_update(models, std::vector<double>{0.5}, Label::unknown(),
                          Baseline::Static);
  EXPECT_EQ(models.classifier.weights, before.classifier.weights);
  EXPECT_EQ(models.classifier.n_classes(), before.classifier.n_classes());
  EXPECT_EQ(models.clusters.centroids, before.clusters.centroids);
  EXPECT_EQ(models.scaler.n, 0u);
}

TEST(VerifyAndUpdate, IncrementalRegistersTheUnknownSentinelOnce) {
  Models models = scripted_models();
  sosr::verify_and_update(models, std::vector<double>{0.5}, Label::unknown(),
                          Baseline::Incremental);
  EXPECT_EQ(models.classifier.n_classes(), 3u);
  EXPECT_TRUE(models.classifier.registry_index(Label::unknown()).has_value());
  EXPECT_EQ(models.scaler.n, 1u);
  sosr::verify_and_update(models, std::vector<double>{0.7}, Label::unknown(),
                          Baseline::Incremental);
  EXPECT_EQ(models.classifier.n_classes(), 3u);  // no duplicate registration
  EXPECT_EQ(models.scaler.n, 2u);
  // clusters stay untouched for the single-classifier baseline
  EXPECT_EQ(models.clusters.total_count(), 2u);
}

TEST(VerifyAndUpdate, IncrementalLearnsVerifiedKnownLabels) {
  Models models = scripted_models();
  // a cold scaler would center its first update exactly on the instance,
  // making the transformed features zero and the gradient step a no-op
  models.scaler.update(std::vector<double>{0.0});
  models.scaler.update(std::vector<double>{2.0});
  const auto before = models.classifier.weights;
  sosr::verify_and_update(models, std::vector<double>{0.5}, Label::known(1),
                          Baseline::Incremental);
  EXPECT_NE(models.classifier.weights, before);
  EXPECT_EQ(models.classifier.n_classes(), 2u);
}

TEST(VerifyAndUpdate, SosrLearnsOnKnownSkipsUnknown) {
  Models models = scripted_models();
  // a cold scaler would center its first update exactly on the instance,
  // making the transformed features zero and the gradient step a no-op
  models.scaler.update(std::vector<double>{0.0});
  models.scaler.update(std::vector<double>{2.0});
  const auto weights_before = models.classifier.weights;

  sosr::verify_and_update(models, std::vector<double>{0.5}, Label::unknown(),
                          Baseline::Sosr);
  EXPECT_EQ(models.classifier.weights, weights_before);
  EXPECT_EQ(models.clusters.total_count(), 2u);
  EXPECT_EQ(models.scaler.n, 2u);  // unknown-true instances touch nothing

  sosr::verify_and_update(models, std::vector<double>{1.5}, Label::known(0),
                          Baseline::Sosr);
  EXPECT_NE(models.classifier.weights, weights_before);
  EXPECT_EQ(models.clusters.total_count(), 3u);
  EXPECT_EQ(models.scaler.n, 3u);
}

std::vector<Instance> scripted_stream() {
  std::vector<Instance> stream;
  Rng rng(13);
  for (int i = 0; i < 60; ++i) {
    Instance inst;
    inst.index = static_cast<std::size_t>(i);
    switch (i % 3) {
      case 0:
        inst.label = Label::known(0);
        inst.features = {-4.0 + 0.3 * rng.normal(), rng.normal()};
        break;
      case 1:
        inst.label = Label::known(1);
        inst.features = {4.0 + 0.3 * rng.normal(), rng.normal()};
        break;
      default:
        inst.label = Label::unknown();
        inst.features = {0.3 * rng.normal(), 12.0 + 0.3 * rng.normal()};
    }
    stream.push_back(std::move(inst));
  }
  return stream;
}

TEST(RunStream, ShapeAndBaselineSpecificFields) {
  const auto train = two_class_train();
  const auto stream = scripted_stream();
  for (Baseline b :
       {Baseline::Static, Baseline::Incremental, Baseline::Sosr}) {
    ExperimentConfig cfg = sosr_config();
    cfg.baseline = b;
    const RunRecord record = sosr::run_stream(train, stream, cfg);
    ASSERT_EQ(record.rows.size(), stream.size());
    for (std::size_t t = 0; t < record.rows.size(); ++t) {
      EXPECT_EQ(record.rows[t].t, t);
      EXPECT_EQ(record.rows[t].true_label, stream[t].label);
      EXPECT_EQ(record.rows[t].entropy.has_value(), b == Baseline::Sosr);
    }
    EXPECT_EQ(record.final_clusters.has_value(), b == Baseline::Sosr);
    EXPECT_EQ(record.final_scaler.has_value(), b == Baseline::Sosr);
  }
}

TEST(RunStream, DeterministicForAFixedSeed) {
  const auto train = two_class_train();
  const auto stream = scripted_stream();
  const RunRecord a = sosr::run_stream(train, stream, sosr_config(21));
  const RunRecord b = sosr::run_stream(train, stream, sosr_config(21));
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t t = 0; t < a.rows.size(); ++t) {
    EXPECT_EQ(a.rows[t].closed_pred, b.rows[t].closed_pred);
    EXPECT_EQ(*a.rows[t].entropy, *b.rows[t].entropy);  // bit-identical
  }
  EXPECT_EQ(a.final_clusters->centroids, b.final_clusters->centroids);
}

TEST(RunStream, RecordedScoresAreThresholdIndependent) {
  // gamma only drives the online decision, never the logged scores, so one
  // pass supports the whole ROC sweep
  const auto train = two_class_train();
  const auto stream = scripted_stream();
  ExperimentConfig with_gamma = sosr_config(22);
  with_gamma.gamma_h = 0.5;
  const RunRecord a = sosr::run_stream(train, stream, sosr_config(22));
  const RunRecord b = sosr::run_stream(train, stream, with_gamma);
  for (std::size_t t = 0; t < a.rows.size(); ++t) {
    EXPECT_EQ(a.rows[t].closed_pred, b.rows[t].closed_pred);
    EXPECT_EQ(*a.rows[t].entropy, *b.rows[t].entropy);
  }
}

TEST(RunStream, SosrClusterCountsAccountForEveryAbsorbedInstance) {
  const auto train = two_class_train();
  const auto stream = scripted_stream();
  const RunRecord record = sosr::run_stream(train, stream, sosr_config(23));
  std::size_t kc_rows = 0;
  for (const Instance& inst : stream)
    if (inst.label.is_known()) kc_rows += 1;
  // seeds (one per class) + warm-up absorptions + verified-known stream rows
  EXPECT_EQ(record.final_clusters->total_count(),
            2u + train.size() + kc_rows);
  EXPECT_EQ(record.final_scaler->n, train.size() + kc_rows);
}

TEST(RunStream, IncrementalEventuallyPredictsTheUnknownSentinel) {
  const auto train = two_class_train();
  const auto stream = scripted_stream();
  ExperimentConfig cfg = sosr_config(24);
  cfg.baseline = Baseline::Incremental;
  const RunRecord record = sosr::run_stream(train, stream, cfg);
  std::size_t late_unknown_hits = 0, late_unknowns = 0;
  for (std::size_t t = 30; t < record.rows.size(); ++t) {
    if (!record.rows[t].true_label.is_unknown()) continue;
    late_unknowns += 1;
    if (record.rows[t].closed_pred.is_unknown()) late_unknown_hits += 1;
  }
  ASSERT_GT(late_unknowns, 0u);
  // the sentinel is learnable here: the unknown cloud sits far off-axis
  EXPECT_GT(late_unknown_hits, late_unknowns / 2);
}

TEST(RunStream, StaticNeverPredictsUnknown) {
  const auto train = two_class_train();
  const auto stream = scripted_stream();
  ExperimentConfig cfg = sosr_config(25);
  cfg.baseline = Baseline::Static;
  const RunRecord record = sosr::run_stream(train, stream, cfg);
  for (const auto& row : record.rows)
    EXPECT_TRUE(row.closed_pred.is_known());
}

TEST(RunStream, Rejections) {
  const auto train = two_class_train();
  EXPECT_THROW(sosr::run_stream(train, {}, sosr_config()),
               std::invalid_argument);
  ExperimentConfig bad = sosr_config();
  bad.beta = 0.0;
  EXPECT_THROW(sosr::run_stream(train, scripted_stream(), bad),
               std::invalid_argument);
}

TEST(WriteRunRecordCsv, GoldenLayout) {
  RunRecord record;
  record.rows.push_back({0, Label::known(1), Label::known(0), 0.5});
  record.rows.push_back({1, Label::unknown(), Label::known(1), std::nullopt});
  std::ostringstream out;
  sosr::write_run_record_csv(record, out);
  EXPECT_EQ(out.str(),
            "t,true_label,closed_pred,entropy\n"
            "0,1,0,0.5\n"
            "1,unknown,1,\n");
}

}  // namespace
