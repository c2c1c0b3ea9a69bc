#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "sosr/classifier.hpp"
#include "sosr/clustering.hpp"
#include "sosr/core.hpp"
#include "sosr/datagen.hpp"
#include "sosr/framework.hpp"
#include "sosr/metrics.hpp"
#include "sosr/rng.hpp"

namespace sosr {

// One row of the built-in synthetic suite table. Dataset ids run D<first>
// through D<last> inclusive; every id in the range shares the same shape
// parameters. iso_std applies to the Gaussian family, cube_sep to the
// vertex family.
struct SuiteGroup {
  int first_id;
  int last_id;
  std::size_t n_instances;
  std::size_t n_classes;
  std::size_t n_features;
  double iso_std;
  double cube_sep;
};

inline const std::vector<SuiteGroup>& synthetic_suite_groups() {
  static const std::vector<SuiteGroup> groups = {
      {1, 4, 1000, 5, 3, 0.75, 1.4},    {5, 8, 2000, 8, 4, 1.0, 1.2},
      {9, 11, 3000, 10, 6, 1.25, 1.0},  {12, 14, 5000, 12, 8, 1.5, 0.8},
      {15, 17, 7500, 15, 10, 1.75, 0.6}, {18, 20, 10000, 20, 12, 2.0, 0.4},
  };
  return groups;
}

inline constexpr int kSuiteDatasetCount = 20;
inline constexpr const char* kIsoGaussFamily = "isoGauss";
inline constexpr const char* kHyperCubeFamily = "hyperCube";

// Parameters for suite dataset D<id> of the given family. The per-dataset
// seed is derived from the master seed and the family-qualified name, so
// regenerating any single dataset does not depend on the others.
inline GeneratorParams suite_params(const std::string& family, int dataset_id,
                                    std::uint64_t master_seed) {
  if (family != kIsoGaussFamily && family != kHyperCubeFamily)
    throw std::invalid_argument("suite_params: unknown family " + family);
  for (const SuiteGroup& g : synthetic_suite_groups()) {
    if (dataset_id < g.first_id || dataset_id > g.last_id) continue;
    GeneratorParams p;
    p.name = "D" + std::to_string(dataset_id);
    p.n_instances = g.n_instances;
    p.n_classes = g.n_classes;
    p.n_features = g.n_features;
    p.std_dev = family == kIsoGaussFamily ? g.iso_std : 1.0;
    p.class_sep = family == kHyperCubeFamily ? g.cube_sep : 1.0;
    p.seed = derive_seed(master_seed, fnv1a64(family + "/" + p.name));
    return p;
  }
  throw std::invalid_argument("suite_params: dataset id out of range: " +
                              std::to_string(dataset_id));
}

inline Dataset make_suite_dataset(const std::string& family, int dataset_id,
                                  std::uint64_t master_seed) {
  const GeneratorParams p = suite_params(family, dataset_id, master_seed);
  return family == kIsoGaussFamily ? gen_iso_gauss(p) : gen_hypercube(p);
}

struct DatasetSpec {
  std::string name;       // results "dataset" column, also seeds the runs
  std::string generator;  // results "generator" column, groups the summary
  std::string path;       // CSV file location
  bool real = false;      // real datasets use the real-data beta grid + seeds
};

inline std::vector<double> default_betas(bool real) {
  if (real) return {0.1, 0.25, 0.5, 0.7};
  return {0.1, 0.25, 0.4, 0.6, 0.75};
}

struct BenchmarkSpec {
  std::uint64_t master_seed = 0;
  std::vector<double> betas;  // empty selects the per-dataset default grid
  std::vector<Baseline> baselines = {Baseline::Static, Baseline::Incremental,
                                     Baseline::Sosr};
  std::vector<DatasetSpec> datasets;
  std::size_t seeds_per_real = 5;  // repeated runs for real datasets
  std::string out_dir = ".";
  std::size_t jobs = 1;
  std::optional<double> gamma_h;  // fixed threshold; absent = Youden mode
};

// Dataset specs for the generated synthetic suite under data_dir, both
// families, in suite order.
inline std::vector<DatasetSpec> synthetic_suite_specs(
    const std::string& data_dir) {
  std::vector<DatasetSpec> specs;
  for (const char* family : {kIsoGaussFamily, kHyperCubeFamily}) {
    for (int id = 1; id <= kSuiteDatasetCount; ++id) {
      DatasetSpec ds;
      ds.name = "D" + std::to_string(id);
      ds.generator = family;
      ds.path = (std::filesystem::path(data_dir) /
                 (std::string(family) + "_" + ds.name + ".csv"))
                    .string();
      specs.push_back(std::move(ds));
    }
  }
  return specs;
}

// Seed for one benchmark run. The chain folds in the dataset identity, the
// beta value, and the repeat index; the baseline is deliberately absent so
// all baselines of a run share the partition and stream, which keeps the
// per-group Wilcoxon comparisons paired.
inline std::uint64_t run_seed(std::uint64_t master_seed,
                              const std::string& generator,
                              const std::string& dataset, double beta,
                              std::uint64_t seed_index) {
  std::uint64_t s =
      derive_seed(master_seed, fnv1a64(generator + "/" + dataset));
  s = derive_seed(s, std::bit_cast<std::uint64_t>(beta));
  return derive_seed(s, seed_index);
}

struct ExperimentOutput {
  LabelSpacePartition partition;
  StreamSplit split;
  RunRecord record;
  MetricsReport report;
};

// Full pipeline for one configured run: partition the label space, assemble
// the stream, replay it under the configured baseline, and score the record.
// The D-B index is computed against the final clustering when the baseline
// maintains one, over the stream features mapped through the final scaler
// (the clustering's own coordinate space); it stays absent when fewer than
// two clusters are active over the stream.
inline ExperimentOutput run_experiment(const Dataset& dataset,
                                       const ExperimentConfig& config) {
  validate_config(config);
  ExperimentOutput out;
  Rng partition_rng(derive_seed(config.seed, 0));
  out.partition =
      label_space_partition(dataset.n_classes, config.beta, partition_rng);
  out.split = assemble_stream(dataset, out.partition.kc_ids,
                              out.partition.uc_ids,
                              derive_seed(config.seed, 2));
  out.record = run_stream(out.split.train, out.split.stream, config);
  out.report = evaluate_run(out.record, out.partition.kc_ids.size());
  if (out.record.final_clusters && out.record.final_scaler) {
    std::vector<std::vector<double>> points;
    points.reserve(out.split.stream.size());
    for (const Instance& inst : out.split.stream)
      points.push_back(out.record.final_scaler->transform(inst.features));
    try {
      const DaviesBouldinResult db =
          davies_bouldin(*out.record.final_clusters, points);
      out.report.db_index = db.value;
      out.report.db_excluded_clusters = db.excluded_clusters;
    } catch (const std::invalid_argument&) {
      // fewer than two clusters active over this stream
    }
  }
  return out;
}

inline nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json j;
  if (r.kc_acc) j["kc_acc"] = *r.kc_acc;
  if (r.uc_acc) j["uc_acc"] = *r.uc_acc;
  j["open_f1"] = r.open_f1;
  if (r.auroc) j["auroc"] = *r.auroc;
  if (r.chosen_threshold) j["threshold"] = *r.chosen_threshold;
  if (r.db_index) {
    j["db_index"] = *r.db_index;
    j["db_excluded_clusters"] = r.db_excluded_clusters;
  }
  j["n_kc"] = r.n_kc;
  j["n_uc"] = r.n_uc;
  return j;
}

struct BenchResult {
  std::vector<ResultRow> rows;      // canonical order
  std::vector<SummaryRow> summary;  // canonical order
  std::size_t n_failed = 0;
};

namespace detail {

inline std::string sanitize_csv_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

inline std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline std::string opt_flag(const std::optional<bool>& v) {
  return v ? (*v ? "1" : "0") : std::string();
}

}  // namespace detail

inline void write_results_csv(const std::vector<ResultRow>& rows,
                              std::ostream& out) {
  out << "generator,dataset,beta,baseline,seed,kc_acc,uc_acc,open_f1,auroc,"
         "threshold,db_index,error\n";
  for (const ResultRow& row : rows) {
    out << detail::sanitize_csv_field(row.generator) << ','
        << detail::sanitize_csv_field(row.dataset) << ','
        << detail::format_double(row.beta) << ',' << to_string(row.baseline)
        << ',' << row.seed << ',';
    if (row.report) {
      const MetricsReport& r = *row.report;
      out << detail::opt_field(r.kc_acc) << ',' << detail::opt_field(r.uc_acc)
          << ',' << detail::format_double(r.open_f1) << ','
          << detail::opt_field(r.auroc) << ','
          << detail::opt_field(r.chosen_threshold) << ','
          << detail::opt_field(r.db_index) << ',';
    } else {
      out << ",,,,,,";
    }
    out << detail::sanitize_csv_field(row.error) << '\n';
  }
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows,
                              std::ostream& out) {
  out << "generator,beta,baseline,n_runs,kc_acc_mean,kc_acc_std,uc_acc_mean,"
         "uc_acc_std,open_f1_mean,open_f1_std,auroc_mean,auroc_std,"
         "db_index_mean,db_index_std,sig_kc_acc,sig_uc_acc,sig_open_f1\n";
  auto stat = [](const std::optional<MeanStd>& ms) {
    if (!ms) return std::string(",");
    return detail::format_double(ms->mean) + "," +
           detail::format_double(ms->stddev);
  };
  for (const SummaryRow& row : rows) {
    out << detail::sanitize_csv_field(row.generator) << ','
        << detail::format_double(row.beta) << ',' << to_string(row.baseline)
        << ',' << row.n_runs << ',' << stat(row.kc_acc) << ','
        << stat(row.uc_acc) << ',' << stat(row.open_f1) << ','
        << stat(row.auroc) << ',' << stat(row.db_index) << ','
        << detail::opt_flag(row.sig_kc_acc) << ','
        << detail::opt_flag(row.sig_uc_acc) << ','
        << detail::opt_flag(row.sig_open_f1) << '\n';
  }
}

namespace detail {

struct BenchTask {
  std::size_t dataset_idx;
  double beta;
  Baseline baseline;
  std::uint64_t seed_index;
};

}  // namespace detail

// Runs the full (dataset x beta x baseline x repeat) matrix. Per-run
// failures become rows with an error message and the sweep continues. Rows
// and summary come back in canonical order regardless of the job count.
inline BenchResult bench_run(const BenchmarkSpec& spec) {
  if (spec.datasets.empty())
    throw std::invalid_argument("bench_run: no datasets in spec");
  if (spec.baselines.empty())
    throw std::invalid_argument("bench_run: no baselines in spec");
  for (double beta : spec.betas)
    if (!(beta > 0.0 && beta < 1.0))
      throw std::invalid_argument("bench_run: beta outside (0, 1)");

  // load every dataset once; a failed load marks all its runs
  std::vector<std::optional<Dataset>> datasets(spec.datasets.size());
  std::vector<std::string> load_errors(spec.datasets.size());
  for (std::size_t i = 0; i < spec.datasets.size(); ++i) {
    try {
      datasets[i] = load_csv(spec.datasets[i].path);
      datasets[i]->name = spec.datasets[i].name;
    } catch (const std::exception& e) {
      load_errors[i] = e.what();
    }
  }

  std::vector<detail::BenchTask> tasks;
  for (std::size_t i = 0; i < spec.datasets.size(); ++i) {
    const bool real = spec.datasets[i].real;
    const std::vector<double> betas =
        spec.betas.empty() ? default_betas(real) : spec.betas;
    const std::size_t n_seeds = real ? spec.seeds_per_real : 1;
    for (double beta : betas)
      for (Baseline baseline : spec.baselines)
        for (std::uint64_t s = 0; s < n_seeds; ++s)
          tasks.push_back({i, beta, baseline, s});
  }

  std::vector<ResultRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const detail::BenchTask& task = tasks[t];
      const DatasetSpec& ds = spec.datasets[task.dataset_idx];
      ResultRow row;
      row.generator = ds.generator;
      row.dataset = ds.name;
      row.beta = task.beta;
      row.baseline = task.baseline;
      row.seed = run_seed(spec.master_seed, ds.generator, ds.name, task.beta,
                          task.seed_index);
      if (!load_errors[task.dataset_idx].empty()) {
        row.error = load_errors[task.dataset_idx];
      } else {
        ExperimentConfig config;
        config.beta = task.beta;
        config.seed = row.seed;
        config.baseline = task.baseline;
        config.gamma_h = spec.gamma_h;
        try {
          row.report =
              run_experiment(*datasets[task.dataset_idx], config).report;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      }
      rows[t] = std::move(row);
    }
  };

  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min(spec.jobs, tasks.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  std::sort(rows.begin(), rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              return std::tuple(a.generator, a.dataset, a.beta,
                                detail::baseline_order(a.baseline), a.seed) <
                     std::tuple(b.generator, b.dataset, b.beta,
                                detail::baseline_order(b.baseline), b.seed);
            });

  BenchResult result;
  result.rows = std::move(rows);
  for (const ResultRow& row : result.rows)
    if (!row.error.empty()) result.n_failed += 1;
  result.summary = aggregate(result.rows);
  return result;
}

// Writes results.csv and summary.csv under spec.out_dir and returns the
// in-memory result as well.
inline BenchResult bench_run_to_dir(const BenchmarkSpec& spec) {
  const std::filesystem::path dir(spec.out_dir);
  std::filesystem::create_directories(dir);
  BenchResult result = bench_run(spec);
  {
    std::ofstream out(dir / "results.csv", std::ios::binary);
    if (!out)
      throw std::runtime_error("bench: cannot write " +
                               (dir / "results.csv").string());
    write_results_csv(result.rows, out);
  }
  {
    std::ofstream out(dir / "summary.csv", std::ios::binary);
    if (!out)
      throw std::runtime_error("bench: cannot write " +
                               (dir / "summary.csv").string());
    write_summary_csv(result.summary, out);
  }
  return result;
}

inline BenchmarkSpec parse_benchmark_spec(const nlohmann::json& j) {
  BenchmarkSpec spec;
  if (!j.is_object())
    throw std::invalid_argument("benchmark spec: top level must be an object");
  if (!j.contains("master_seed") || !j["master_seed"].is_number_unsigned())
    throw std::invalid_argument(
        "benchmark spec: master_seed (unsigned) is required");
  spec.master_seed = j["master_seed"].get<std::uint64_t>();

  if (j.contains("betas")) {
    for (const auto& b : j["betas"]) {
      if (!b.is_number())
        throw std::invalid_argument("benchmark spec: betas must be numbers");
      spec.betas.push_back(b.get<double>());
    }
  }
  if (j.contains("baselines")) {
    spec.baselines.clear();
    for (const auto& b : j["baselines"])
      spec.baselines.push_back(baseline_from_string(b.get<std::string>()));
  }
  if (j.contains("seeds_per_real"))
    spec.seeds_per_real = j["seeds_per_real"].get<std::size_t>();
  if (j.contains("out_dir")) spec.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("jobs")) spec.jobs = j["jobs"].get<std::size_t>();
  if (j.contains("gamma_h")) spec.gamma_h = j["gamma_h"].get<double>();

  if (!j.contains("datasets") || !j["datasets"].is_array() ||
      j["datasets"].empty())
    throw std::invalid_argument(
        "benchmark spec: datasets must be a non-empty array");
  for (const auto& d : j["datasets"]) {
    DatasetSpec ds;
    if (!d.contains("name") || !d.contains("path"))
      throw std::invalid_argument(
          "benchmark spec: each dataset needs name and path");
    ds.name = d["name"].get<std::string>();
    ds.path = d["path"].get<std::string>();
    ds.generator = d.contains("generator") ? d["generator"].get<std::string>()
                                           : std::string("real");
    ds.real = d.contains("real") ? d["real"].get<bool>()
                                 : ds.generator == "real";
    spec.datasets.push_back(std::move(ds));
  }
  return spec;
}

inline BenchmarkSpec load_benchmark_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("benchmark spec: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return parse_benchmark_spec(j);
}

}  // namespace sosr
