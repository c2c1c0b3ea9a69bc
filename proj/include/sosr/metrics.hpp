#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "sosr/core.hpp"
#include "sosr/framework.hpp"

namespace sosr {

struct LabelPair {
  Label truth;
  Label pred;
};

// Applies the open-set decision rule to a logged run. Rows carrying an
// entropy are predicted unknown iff H >= threshold, otherwise the logged
// closed-set prediction stands.
inline std::vector<LabelPair> resolve_predictions(
    const RunRecord& record, std::optional<double> threshold) {
  const bool has_entropy =
      !record.rows.empty() && record.rows.front().entropy.has_value();
  if (threshold && !has_entropy)
    throw std::invalid_argument(
        "resolve_predictions: threshold given for a record with no entropies");
  if (!threshold && has_entropy)
    throw std::invalid_argument(
        "resolve_predictions: record has entropies but no threshold given");

  std::vector<LabelPair> pairs;
  pairs.reserve(record.rows.size());
  for (const RunRow& row : record.rows) {
    LabelPair p;
    p.truth = row.true_label;
    p.pred = (row.entropy && *row.entropy >= *threshold) ? Label::unknown()
                                                         : row.closed_pred;
    pairs.push_back(p);
  }
  return pairs;
}

struct AccuracyScores {
  std::optional<double> kc_acc;  // absent when no true-KC rows
  std::optional<double> uc_acc;  // absent when no true-unknown rows
  std::size_t n_kc = 0;
  std::size_t n_uc = 0;
};

inline AccuracyScores kc_uc_accuracy(const std::vector<LabelPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("kc_uc_accuracy: no pairs");
  std::size_t kc_ok = 0, uc_ok = 0;
  AccuracyScores s;
  for (const LabelPair& p : pairs) {
    if (p.truth.is_known()) {
      s.n_kc += 1;
      if (p.pred == p.truth) kc_ok += 1;
    } else {
      s.n_uc += 1;
      if (p.pred.is_unknown()) uc_ok += 1;
    }
  }
  if (s.n_kc > 0) s.kc_acc = static_cast<double>(kc_ok) / static_cast<double>(s.n_kc);
  if (s.n_uc > 0) s.uc_acc = static_cast<double>(uc_ok) / static_cast<double>(s.n_uc);
  return s;
}

// Macro F1 over the known classes only. Unknown-labeled rows count toward
// FP/FN of the known classes but never contribute true positives, and the
// unknown label itself is excluded from the macro average.
inline double open_macro_f1(const std::vector<LabelPair>& pairs,
                            const std::vector<int>& kc_classes) {
  if (pairs.empty()) throw std::invalid_argument("open_macro_f1: no pairs");
  if (kc_classes.empty())
    throw std::invalid_argument("open_macro_f1: no known classes");
  double total = 0.0;
  for (int k : kc_classes) {
    const Label lk = Label::known(k);
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (const LabelPair& p : pairs) {
      const bool truth_k = p.truth == lk;
      const bool pred_k = p.pred == lk;
      if (truth_k && pred_k) ++tp;
      else if (!truth_k && pred_k) ++fp;
      else if (truth_k && !pred_k) ++fn;
    }
    const std::uint64_t denom = 2 * tp + fp + fn;
    total += denom == 0 ? 0.0
                        : 2.0 * static_cast<double>(tp) /
                              static_cast<double>(denom);
  }
  return total / static_cast<double>(kc_classes.size());
}

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  double auroc = 0.0;
  double best_threshold = 0.0;  // Youden-optimal; ties go to the lower one
  std::vector<RocPoint> curve;  // ascending thresholds, (1,1) down to (0,0)
};

// ROC over novelty scores, positives = true-unknown rows. AUROC is computed
// by exact concordant/tied pair counting (ties get half credit), which the
// trapezoidal rule over the tie-grouped curve equals algebraically. The
// candidate thresholds are midpoints between consecutive distinct scores
// plus one sentinel below the minimum and one above the maximum.
inline RocResult roc_auc_youden(
    const std::vector<std::pair<double, bool>>& scores) {
  std::uint64_t n_pos = 0, n_neg = 0;
  for (const auto& [h, unk] : scores) (unk ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument(
        "roc_auc_youden: needs at least one unknown and one known score");

  std::vector<std::pair<double, bool>> sorted = scores;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  struct Group {
    double value;
    std::uint64_t pos = 0, neg = 0;
  };
  std::vector<Group> groups;
  for (const auto& [h, unk] : sorted) {
    if (groups.empty() || groups.back().value != h)
      groups.push_back({h, 0, 0});
    (unk ? groups.back().pos : groups.back().neg) += 1;
  }

  std::uint64_t concordant = 0, tied = 0, neg_below = 0;
  for (const Group& g : groups) {
    concordant += g.pos * neg_below;
    tied += g.pos * g.neg;
    neg_below += g.neg;
  }

  RocResult result;
  result.auroc = (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
                 static_cast<double>(n_pos * n_neg);

  std::vector<double> thresholds;
  thresholds.push_back(groups.front().value - 1.0);
  for (std::size_t i = 1; i < groups.size(); ++i)
    thresholds.push_back(0.5 * (groups[i - 1].value + groups[i].value));
  thresholds.push_back(groups.back().value + 1.0);

  // scores >= threshold are flagged unknown; walk thresholds ascending and
  // keep suffix counts. Youden J = tpr - fpr compared on the exact integer
  // numerator tp * n_neg - fp * n_pos.
  std::int64_t best_j = std::numeric_limits<std::int64_t>::min();
  std::uint64_t pos_ge = n_pos, neg_ge = n_neg;
  std::size_t group_idx = 0;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (i > 0) {  // groups below thresholds[i] drop out of the suffix
      pos_ge -= groups[group_idx].pos;
      neg_ge -= groups[group_idx].neg;
      ++group_idx;
    }
    RocPoint pt;
    pt.threshold = thresholds[i];
    pt.tpr = static_cast<double>(pos_ge) / static_cast<double>(n_pos);
    pt.fpr = static_cast<double>(neg_ge) / static_cast<double>(n_neg);
    result.curve.push_back(pt);
    const std::int64_t j =
        static_cast<std::int64_t>(pos_ge * n_neg) -
        static_cast<std::int64_t>(neg_ge * n_pos);
    if (j > best_j) {
      best_j = j;
      result.best_threshold = pt.threshold;
    }
  }
  return result;
}

struct WilcoxonResult {
  double p_value = 1.0;
  bool significant = false;
  double w_plus = 0.0;  // sum of ranks of positive differences
  std::size_t n = 0;    // pairs remaining after dropping zero differences
};

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
// are dropped, tied absolute differences receive average ranks. The null
// distribution is exact for n <= 20 (integer DP over doubled ranks, which
// covers half-ranks from ties); larger n uses the normal approximation with
// tie and continuity corrections.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b,
                                           double alpha = 0.05) {
  if (a.size() != b.size())
    throw std::invalid_argument("wilcoxon_signed_rank: length mismatch");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult result;
  result.n = diffs.size();
  if (diffs.empty()) return result;  // p = 1, not significant

  const std::size_t n = diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(diffs[i]) < std::abs(diffs[j]);
  });

  // doubled average ranks stay integral under ties
  std::vector<std::uint64_t> rank2(n);
  std::vector<std::uint64_t> tie_sizes;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n &&
           std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]]))
      ++j;
    const std::uint64_t doubled = i + j + 2;  // 2 * average 1-based rank
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = doubled;
    tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }

  std::uint64_t w2_plus = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (diffs[i] > 0.0) w2_plus += rank2[i];
  result.w_plus = static_cast<double>(w2_plus) / 2.0;

  if (n <= 20) {
    const std::uint64_t s2 = n * (n + 1);  // total doubled rank sum
    std::vector<std::uint64_t> counts(s2 + 1, 0);
    counts[0] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t r = rank2[i];
      for (std::uint64_t w = s2; w >= r; --w) counts[w] += counts[w - r];
    }
    std::uint64_t cnt_le = 0, cnt_ge = 0;
    for (std::uint64_t w = 0; w <= s2; ++w) {
      if (w <= w2_plus) cnt_le += counts[w];
      if (w >= w2_plus) cnt_ge += counts[w];
    }
    const double total = std::ldexp(1.0, static_cast<int>(n));  // 2^n
    result.p_value =
        std::min(1.0, 2.0 * static_cast<double>(std::min(cnt_le, cnt_ge)) / total);
  } else {
    const double dn = static_cast<double>(n);
    const double mu = dn * (dn + 1.0) / 4.0;
    double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0;
    for (std::uint64_t t : tie_sizes) {
      const double dt = static_cast<double>(t);
      var -= (dt * dt * dt - dt) / 48.0;
    }
    double num = result.w_plus - mu;
    if (num > 0.0) num -= 0.5;       // continuity correction toward the mean
    else if (num < 0.0) num += 0.5;
    const double z = num / std::sqrt(var);
    result.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
  }
  result.significant = result.p_value < alpha;
  return result;
}

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = static_cast<double>(i + j + 2) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Spearman rank correlation (average ranks on ties).
inline double spearman(const std::vector<double>& a,
                       const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman: needs two equal-length samples");
  const auto ra = detail::average_ranks(a);
  const auto rb = detail::average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0)
    throw std::invalid_argument("spearman: constant sample");
  return cov / std::sqrt(va * vb);
}

struct MetricsReport {
  std::optional<double> kc_acc;
  std::optional<double> uc_acc;
  double open_f1 = 0.0;
  std::optional<double> auroc;             // sosr only
  std::optional<double> chosen_threshold;  // sosr only
  std::optional<double> db_index;          // sosr only
  std::size_t db_excluded_clusters = 0;
  std::size_t n_kc = 0;
  std::size_t n_uc = 0;
};

// Scores one run record. For sosr the threshold is config.gamma_h when set,
// otherwise the Youden-optimal one from this run's own scores (AUROC is
// reported in either mode). The D-B index is attached by the caller, which
// holds the stream features.
inline MetricsReport evaluate_run(const RunRecord& record,
                                  std::size_t kc_count) {
  if (record.rows.empty())
    throw std::invalid_argument("evaluate_run: empty record");
  const bool has_entropy = record.rows.front().entropy.has_value();

  MetricsReport report;
  std::optional<double> threshold;
  if (has_entropy) {
    std::vector<std::pair<double, bool>> scores;
    scores.reserve(record.rows.size());
    bool any_pos = false, any_neg = false;
    for (const RunRow& row : record.rows) {
      scores.emplace_back(*row.entropy, row.true_label.is_unknown());
      (row.true_label.is_unknown() ? any_pos : any_neg) = true;
    }
    if (any_pos && any_neg) {
      const RocResult roc = roc_auc_youden(scores);
      report.auroc = roc.auroc;
      threshold = record.config.gamma_h ? *record.config.gamma_h
                                        : roc.best_threshold;
    } else if (record.config.gamma_h) {
      threshold = *record.config.gamma_h;
    }
    report.chosen_threshold = threshold;
  }

  std::vector<LabelPair> pairs;
  if (has_entropy && !threshold) {
    // degenerate single-class stream with no explicit gamma: fall back to
    // the closed-set predictions
    pairs.reserve(record.rows.size());
    for (const RunRow& row : record.rows)
      pairs.push_back({row.true_label, row.closed_pred});
  } else {
    pairs = resolve_predictions(record, threshold);
  }

  const AccuracyScores acc = kc_uc_accuracy(pairs);
  report.kc_acc = acc.kc_acc;
  report.uc_acc = acc.uc_acc;
  report.n_kc = acc.n_kc;
  report.n_uc = acc.n_uc;

  std::vector<int> kc_classes(kc_count);
  std::iota(kc_classes.begin(), kc_classes.end(), 0);
  report.open_f1 = open_macro_f1(pairs, kc_classes);
  return report;
}

struct ResultRow {
  std::string generator;
  std::string dataset;
  double beta = 0.0;
  Baseline baseline = Baseline::Static;
  std::uint64_t seed = 0;
  std::optional<MetricsReport> report;  // absent when the run failed
  std::string error;                    // failure description, else empty
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population std across the group
  std::size_t n = 0;
};

struct SummaryRow {
  std::string generator;
  double beta = 0.0;
  Baseline baseline = Baseline::Static;
  std::size_t n_runs = 0;
  std::optional<MeanStd> kc_acc, uc_acc, open_f1, auroc, db_index;
  // Wilcoxon flags vs the sosr group at the same (generator, beta); absent
  // on sosr rows and when no counterpart exists.
  std::optional<bool> sig_kc_acc, sig_uc_acc, sig_open_f1;
};

namespace detail {

inline std::optional<MeanStd> mean_std(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  MeanStd ms;
  ms.n = v.size();
  for (double x : v) ms.mean += x;
  ms.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - ms.mean) * (x - ms.mean);
  ms.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  return ms;
}

inline int baseline_order(Baseline b) {
  switch (b) {
    case Baseline::Static: return 0;
    case Baseline::Incremental: return 1;
    case Baseline::Sosr: return 2;
  }
  return 3;
}

}  // namespace detail

// Mean +/- population std per (generator, beta, baseline) group, plus
// paired two-sided Wilcoxon flags of each single-classifier baseline against
// sosr on the same runs. Pairing key is (dataset, seed), which covers both
// the across-datasets synthetic aggregation and the across-seeds real one.
inline std::vector<SummaryRow> aggregate(const std::vector<ResultRow>& rows,
                                         double alpha = 0.05) {
  using GroupKey = std::tuple<std::string, double, int>;
  using PairKey = std::pair<std::string, std::uint64_t>;
  std::map<GroupKey, std::vector<const ResultRow*>> groups;
  for (const ResultRow& row : rows) {
    if (!row.report) continue;
    groups[{row.generator, row.beta, detail::baseline_order(row.baseline)}]
        .push_back(&row);
  }

  auto paired_scores =
      [](const std::vector<const ResultRow*>& lhs,
         const std::vector<const ResultRow*>& rhs,
         auto&& get) -> std::pair<std::vector<double>, std::vector<double>> {
    std::map<PairKey, double> l, r;
    for (const ResultRow* row : lhs)
      if (auto v = get(*row->report)) l[{row->dataset, row->seed}] = *v;
    for (const ResultRow* row : rhs)
      if (auto v = get(*row->report)) r[{row->dataset, row->seed}] = *v;
    std::pair<std::vector<double>, std::vector<double>> out;
    for (const auto& [key, lv] : l) {
      auto it = r.find(key);
      if (it == r.end()) continue;
      out.first.push_back(lv);
      out.second.push_back(it->second);
    }
    return out;
  };

  std::vector<SummaryRow> summary;
  for (const auto& [key, members] : groups) {
    SummaryRow row;
    row.generator = std::get<0>(key);
    row.beta = std::get<1>(key);
    row.baseline = static_cast<Baseline>(std::get<2>(key));
    row.n_runs = members.size();

    auto collect = [&](auto&& get) {
      std::vector<double> vals;
      for (const ResultRow* r : members)
        if (auto v = get(*r->report)) vals.push_back(*v);
      return detail::mean_std(vals);
    };
    auto kc = [](const MetricsReport& r) { return r.kc_acc; };
    auto uc = [](const MetricsReport& r) { return r.uc_acc; };
    auto f1 = [](const MetricsReport& r) {
      return std::optional<double>(r.open_f1);
    };
    auto auc = [](const MetricsReport& r) { return r.auroc; };
    auto db = [](const MetricsReport& r) { return r.db_index; };
    row.kc_acc = collect(kc);
    row.uc_acc = collect(uc);
    row.open_f1 = collect(f1);
    row.auroc = collect(auc);
    row.db_index = collect(db);

    if (row.baseline != Baseline::Sosr) {
      auto sosr_it = groups.find({row.generator, row.beta,
                                  detail::baseline_order(Baseline::Sosr)});
      if (sosr_it != groups.end()) {
        auto flag = [&](auto&& get) -> std::optional<bool> {
          auto [a, b] = paired_scores(members, sosr_it->second, get);
          if (a.empty()) return std::nullopt;
          return wilcoxon_signed_rank(a, b, alpha).significant;
        };
        row.sig_kc_acc = flag(kc);
        row.sig_uc_acc = flag(uc);
        row.sig_open_f1 = flag(f1);
      }
    }
    summary.push_back(std::move(row));
  }
  return summary;
}

}  // namespace sosr
