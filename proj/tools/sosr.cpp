// Command-line front end: dataset generation, single experiment runs, and
// the full benchmark matrix. Exit codes: 0 success, 1 usage error, 2 data
// error, 3 benchmark finished with failed runs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sosr/bench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

struct IdRange {
  int first = 1;
  int last = sosr::kSuiteDatasetCount;
};

// "D5-D8", "5-8", or a single id like "D7"
IdRange parse_id_range(const std::string& text) {
  auto parse_id = [&](std::string s) {
    if (!s.empty() && (s.front() == 'D' || s.front() == 'd')) s.erase(0, 1);
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(s, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != s.size() || s.empty())
      throw std::invalid_argument("invalid dataset id in range: " + text);
    return v;
  };
  IdRange r;
  const std::size_t dash = text.find('-');
  if (dash == std::string::npos) {
    r.first = r.last = parse_id(text);
  } else {
    r.first = parse_id(text.substr(0, dash));
    r.last = parse_id(text.substr(dash + 1));
  }
  if (r.first < 1 || r.last > sosr::kSuiteDatasetCount || r.first > r.last)
    throw std::invalid_argument("dataset range outside D1-D" +
                                std::to_string(sosr::kSuiteDatasetCount) +
                                ": " + text);
  return r;
}

json params_to_json(const sosr::GeneratorParams& p, const std::string& family,
                    const std::string& file) {
  return json{{"name", p.name},          {"generator", family},
              {"file", file},            {"seed", p.seed},
              {"instances", p.n_instances}, {"classes", p.n_classes},
              {"features", p.n_features},   {"std", p.std_dev},
              {"sep", p.class_sep}};
}

struct GenerateArgs {
  std::string out_dir;
  std::uint64_t master_seed = 1;
  std::string family = "both";
  std::string groups;
  // explicit single-dataset mode, active when name is set
  std::string name;
  std::string generator;
  std::uint64_t instances = 0;
  std::uint64_t classes = 0;
  std::uint64_t features = 0;
  double std_dev = 1.0;
  double class_sep = 1.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int run_generate(const GenerateArgs& args) {
  const fs::path dir(args.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << dir << ": "
              << ec.message() << "\n";
    return kExitData;
  }

  json manifest = json::array();
  auto emit = [&](const sosr::Dataset& ds, const sosr::GeneratorParams& p,
                  const std::string& family) {
    const fs::path file = dir / (family + "_" + p.name + ".csv");
    sosr::write_dataset_csv(ds, file.string());
    manifest.push_back(params_to_json(p, family, file.string()));
  };

  if (!args.name.empty()) {
    if (args.generator.empty() || args.instances == 0 || args.classes == 0 ||
        args.features == 0 || !args.seed_given) {
      std::cerr << "error: explicit mode needs --generator, --instances, "
                   "--classes, --features, and --seed\n";
      return kExitUsage;
    }
    sosr::GeneratorParams p;
    p.name = args.name;
    p.n_instances = args.instances;
    p.n_classes = args.classes;
    p.n_features = args.features;
    p.std_dev = args.std_dev;
    p.class_sep = args.class_sep;
    p.seed = args.seed;
    const sosr::Dataset ds = args.generator == sosr::kIsoGaussFamily
                                 ? sosr::gen_iso_gauss(p)
                                 : sosr::gen_hypercube(p);
    emit(ds, p, args.generator);
  } else {
    const IdRange range =
        args.groups.empty() ? IdRange{} : parse_id_range(args.groups);
    std::vector<std::string> families;
    if (args.family == "both")
      families = {sosr::kIsoGaussFamily, sosr::kHyperCubeFamily};
    else
      families = {args.family};
    for (const std::string& family : families)
      for (int id = range.first; id <= range.last; ++id) {
        const sosr::GeneratorParams p =
            sosr::suite_params(family, id, args.master_seed);
        const sosr::Dataset ds = family == sosr::kIsoGaussFamily
                                     ? sosr::gen_iso_gauss(p)
                                     : sosr::gen_hypercube(p);
        emit(ds, p, family);
      }
  }

  std::ofstream mf(dir / "manifest.json", std::ios::binary);
  if (!mf) {
    std::cerr << "error: cannot write " << (dir / "manifest.json") << "\n";
    return kExitData;
  }
  mf << manifest.dump(2) << '\n';
  std::cout << manifest.dump(2) << std::endl;
  return kExitOk;
}

struct RunArgs {
  std::string dataset;
  double beta = 0.0;
  std::string baseline;
  std::uint64_t seed = 0;
  std::optional<double> gamma_h;
  double learning_rate = 0.01;
  std::uint64_t warmup_epochs = 1;
  std::string record_out;
  std::string report_out;
};

int run_single(const RunArgs& args) {
  const sosr::Dataset dataset = sosr::load_csv(args.dataset);

  sosr::ExperimentConfig config;
  config.beta = args.beta;
  config.seed = args.seed;
  config.baseline = sosr::baseline_from_string(args.baseline);
  config.gamma_h = args.gamma_h;
  config.learning_rate = args.learning_rate;
  config.warmup_epochs = args.warmup_epochs;

  const sosr::ExperimentOutput out = sosr::run_experiment(dataset, config);

  if (!args.record_out.empty()) {
    std::ofstream rec(args.record_out, std::ios::binary);
    if (!rec)
      throw std::runtime_error("cannot write " + args.record_out);
    sosr::write_run_record_csv(out.record, rec);
  }
  const json report = sosr::report_to_json(out.report);
  if (!args.report_out.empty()) {
    std::ofstream rep(args.report_out, std::ios::binary);
    if (!rep)
      throw std::runtime_error("cannot write " + args.report_out);
    rep << report.dump(2) << '\n';
  } else {
    std::cout << report.dump(2) << std::endl;
  }
  return kExitOk;
}

struct BenchArgs {
  std::string spec_file;
  std::string suite;
  std::string data_dir;
  std::uint64_t master_seed = 1;
  bool master_seed_given = false;
  std::string out_dir;
  std::uint64_t jobs = 0;
  std::uint64_t seeds_per_real = 0;
  std::vector<double> betas;
  std::vector<std::string> baselines;
  std::optional<double> gamma_h;
};

int run_bench(const BenchArgs& args) {
  sosr::BenchmarkSpec spec;
  if (!args.spec_file.empty()) {
    spec = sosr::load_benchmark_spec(args.spec_file);
  } else if (args.suite == "synthetic") {
    if (args.data_dir.empty()) {
      std::cerr << "error: --suite synthetic needs --data-dir\n";
      return kExitUsage;
    }
    spec.datasets = sosr::synthetic_suite_specs(args.data_dir);
  } else {
    std::cerr << "error: bench needs either --spec or --suite synthetic\n";
    return kExitUsage;
  }

  if (args.master_seed_given || args.spec_file.empty())
    spec.master_seed = args.master_seed;
  if (!args.out_dir.empty()) spec.out_dir = args.out_dir;
  if (args.jobs > 0) spec.jobs = args.jobs;
  if (args.seeds_per_real > 0) spec.seeds_per_real = args.seeds_per_real;
  if (!args.betas.empty()) spec.betas = args.betas;
  if (args.gamma_h) spec.gamma_h = args.gamma_h;
  if (!args.baselines.empty()) {
    spec.baselines.clear();
    for (const std::string& b : args.baselines)
      spec.baselines.push_back(sosr::baseline_from_string(b));
  }

  const sosr::BenchResult result = sosr::bench_run_to_dir(spec);
  const fs::path dir(spec.out_dir);
  std::cout << "wrote " << (dir / "results.csv").string() << " ("
            << result.rows.size() << " rows, " << result.n_failed
            << " failed) and " << (dir / "summary.csv").string() << " ("
            << result.summary.size() << " groups)\n";
  return result.n_failed > 0 ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming open-set recognition benchmark toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen_args;
  CLI::App* gen = app.add_subcommand(
      "generate", "Write synthetic benchmark datasets as CSV files");
  gen->add_option("--out-dir", gen_args.out_dir, "Output directory")
      ->required();
  gen->add_option("--master-seed", gen_args.master_seed,
                  "Master seed; per-dataset seeds are derived from it");
  gen->add_option("--family", gen_args.family, "Generator family")
      ->check(CLI::IsMember({"isoGauss", "hyperCube", "both"}));
  gen->add_option("--groups", gen_args.groups,
                  "Dataset id range, e.g. D1-D4 or D7 (default all)");
  gen->add_option("--name", gen_args.name,
                  "Explicit mode: dataset name (skips the suite table)");
  gen->add_option("--generator", gen_args.generator,
                  "Explicit mode: generator family")
      ->check(CLI::IsMember({"isoGauss", "hyperCube"}));
  gen->add_option("--instances", gen_args.instances,
                  "Explicit mode: instance count");
  gen->add_option("--classes", gen_args.classes, "Explicit mode: class count");
  gen->add_option("--features", gen_args.features,
                  "Explicit mode: feature count");
  gen->add_option("--std", gen_args.std_dev,
                  "Explicit mode: per-class noise std");
  gen->add_option("--sep", gen_args.class_sep,
                  "Explicit mode: class separation scale");
  CLI::Option* seed_opt =
      gen->add_option("--seed", gen_args.seed, "Explicit mode: dataset seed");

  RunArgs run_args;
  CLI::App* run = app.add_subcommand(
      "run", "Run one stream experiment and report its metrics");
  run->add_option("--dataset", run_args.dataset, "Dataset CSV path")
      ->required();
  run->add_option("--beta", run_args.beta,
                  "Fraction of classes withheld as unknown, in (0,1)")
      ->required();
  run->add_option("--baseline", run_args.baseline, "Baseline to run")
      ->required()
      ->check(CLI::IsMember({"static", "incremental", "sosr"}));
  run->add_option("--seed", run_args.seed, "Run seed")->required();
  double gamma_h_run = 0.0;
  CLI::Option* gamma_opt = run->add_option(
      "--gamma-h", gamma_h_run,
      "Fixed entropy threshold; omit to pick it by Youden index");
  run->add_option("--lr", run_args.learning_rate, "Classifier learning rate");
  run->add_option("--epochs", run_args.warmup_epochs,
                  "Warm-up passes over the training split");
  run->add_option("--record-out", run_args.record_out,
                  "Write the per-instance run record CSV here");
  run->add_option("--report-out", run_args.report_out,
                  "Write the metrics report JSON here instead of stdout");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand(
      "bench", "Run the benchmark matrix and write results + summary CSVs");
  bench->add_option("--spec", bench_args.spec_file,
                    "Benchmark spec JSON file");
  bench->add_option("--suite", bench_args.suite,
                    "Built-in dataset selection (synthetic)")
      ->check(CLI::IsMember({"synthetic"}));
  bench->add_option("--data-dir", bench_args.data_dir,
                    "Directory holding the generated suite CSVs");
  CLI::Option* ms_opt = bench->add_option(
      "--master-seed", bench_args.master_seed, "Master seed for all runs");
  bench->add_option("--out-dir", bench_args.out_dir, "Output directory");
  bench->add_option("--jobs", bench_args.jobs, "Parallel run workers");
  bench->add_option("--seeds-per-real", bench_args.seeds_per_real,
                    "Repeated runs per real dataset");
  bench->add_option("--beta", bench_args.betas,
                    "Override the beta grid (repeatable)");
  bench->add_option("--baseline", bench_args.baselines,
                    "Restrict baselines (repeatable)")
      ->check(CLI::IsMember({"static", "incremental", "sosr"}));
  double gamma_h_bench = 0.0;
  CLI::Option* gamma_bench_opt = bench->add_option(
      "--gamma-h", gamma_h_bench,
      "Fixed entropy threshold; omit to pick it by Youden index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  gen_args.seed_given = seed_opt->count() > 0;
  if (gamma_opt->count() > 0) run_args.gamma_h = gamma_h_run;
  if (gamma_bench_opt->count() > 0) bench_args.gamma_h = gamma_h_bench;
  bench_args.master_seed_given = ms_opt->count() > 0;

  try {
    if (gen->parsed()) return run_generate(gen_args);
    if (run->parsed()) return run_single(run_args);
    if (bench->parsed()) return run_bench(bench_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
