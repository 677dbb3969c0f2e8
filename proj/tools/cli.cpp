#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "fmgraph/fmgraph.hpp"

namespace fmgraph::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// ---------------------------------------------------------------------------
// Shared option groups

struct FitOptions {
  double mu = 1e-5;
  double learning_rate = 1e-3;
  std::string optimizer = "adaptive";
  long max_iters = 20000;
  long eval_every = 100;
  long patience = 20;
  double val_fraction = 0.05;
  std::string use_pq = "auto";
  std::uint64_t seed = 0;

  void add_to(CLI::App& app) {
    app.add_option("--mu", mu, "weight of the Laplacian commutativity term (0 selects the ours_fm ablation)")
        ->capture_default_str();
    app.add_option("--learning_rate", learning_rate, "step size")->capture_default_str();
    app.add_option("--optimizer", optimizer, "adaptive | plain_gd")
        ->check(CLI::IsMember({"adaptive", "plain_gd"}))
        ->capture_default_str();
    app.add_option("--max_iters", max_iters, "iteration cap")->capture_default_str();
    app.add_option("--eval_every", eval_every, "iterations between validation checks")->capture_default_str();
    app.add_option("--patience", patience, "validation checks without improvement before stopping")
        ->capture_default_str();
    app.add_option("--val_fraction", val_fraction, "share of observed entries held out for early stopping")
        ->capture_default_str();
    app.add_option("--use_pq", use_pq, "optimize P and Q as well: auto (= mu > 0) | true | false")
        ->check(CLI::IsMember({"auto", "true", "false"}))
        ->capture_default_str();
    app.add_option("--seed", seed, "random seed")->capture_default_str();
  }

  FitConfig to_config() const {
    FitConfig c;
    c.mu = mu;
    c.learning_rate = learning_rate;
    c.optimizer = optimizer == "plain_gd" ? Optimizer::plain_gd : Optimizer::adaptive;
    c.max_iters = max_iters;
    c.eval_every = eval_every;
    c.patience = patience;
    c.val_fraction = val_fraction;
    c.use_pq = use_pq == "auto" ? mu > 0.0 : use_pq == "true";
    c.seed = seed;
    c.validate();
    return c;
  }
};

struct SynthOptions {
  SyntheticSpec spec;

  void add_to(CLI::App& app) {
    app.add_option("--m", spec.m, "rows of the synthetic matrix")->capture_default_str();
    app.add_option("--n", spec.n, "columns of the synthetic matrix")->capture_default_str();
    app.add_option("--rank", spec.rank, "rank of the ground truth")->capture_default_str();
    app.add_option("--communities_rows", spec.communities_rows, "blocks in the row graph")->capture_default_str();
    app.add_option("--communities_cols", spec.communities_cols, "blocks in the column graph")->capture_default_str();
    app.add_option("--p_in", spec.p_in, "within-block edge probability")->capture_default_str();
    app.add_option("--p_out", spec.p_out, "cross-block edge probability")->capture_default_str();
    app.add_option("--density", spec.density, "fraction of entries observed")->capture_default_str();
    app.add_option("--noise_level", spec.noise_level, "graph noise, percent of the mean edge weight")
        ->capture_default_str();
    app.add_option("--matrix_noise", spec.matrix_noise, "std of full-rank noise added to the ground truth")
        ->capture_default_str();
  }
};

void record_fit_config(ExperimentReport& r, const FitConfig& c) {
  r.config["mu"] = format_double(c.mu);
  r.config["learning_rate"] = format_double(c.learning_rate);
  r.config["optimizer"] = to_string(c.optimizer);
  r.config["max_iters"] = std::to_string(c.max_iters);
  r.config["eval_every"] = std::to_string(c.eval_every);
  r.config["patience"] = std::to_string(c.patience);
  r.config["val_fraction"] = format_double(c.val_fraction);
  r.config["use_pq"] = c.use_pq ? "true" : "false";
  r.config["seed"] = std::to_string(c.seed);
}

void record_synth_config(ExperimentReport& r, const SyntheticSpec& s) {
  r.config["m"] = std::to_string(s.m);
  r.config["n"] = std::to_string(s.n);
  r.config["rank"] = std::to_string(s.rank);
  r.config["communities_rows"] = std::to_string(s.communities_rows);
  r.config["communities_cols"] = std::to_string(s.communities_cols);
  r.config["p_in"] = format_double(s.p_in);
  r.config["p_out"] = format_double(s.p_out);
  r.config["density"] = format_double(s.density);
  r.config["noise_level"] = format_double(s.noise_level);
  r.config["matrix_noise"] = format_double(s.matrix_noise);
}

SpectralBasis basis_of(const WeightedGraph& g, Index k) { return smallest_eigenpairs(laplacian(g), k); }

// ---------------------------------------------------------------------------
// complete

struct CompleteOptions {
  std::string dataset = "synthetic";
  std::string data_dir;
  std::string split = "u1";
  std::string row_graph;
  std::string col_graph;
  Index knn_k = 10;
  Index k = 30;
  std::string output = "report.txt";
  std::string dump_dir;
  FitOptions fit;
  SynthOptions synth;
};

int cmd_complete(const CompleteOptions& o, std::ostream& out) {
  const auto t0 = Clock::now();
  const FitConfig cfg = o.fit.to_config();
  if (o.k < 1) throw InvalidArgument("k must be positive");

  SpectralBasis row_basis, col_basis;
  WeightedGraph row_g, col_g;
  MaskedMatrix train;
  Matrix truth, test_mask;

  if (o.dataset == "synthetic") {
    SyntheticSpec spec = o.synth.spec;
    spec.k = o.k;
    spec.seed = o.fit.seed;
    spec.validate();
    const SyntheticInstance inst = make_instance(spec);
    row_g = inst.row_graph;
    col_g = inst.col_graph;
    row_basis = inst.row_basis;
    col_basis = inst.col_basis;
    train = inst.observed();
    truth = inst.ground_truth;
    test_mask = inst.test_mask;
  } else {
    if (o.data_dir.empty()) throw InvalidArgument("dataset = movielens needs data_dir");
    auto [tr, te] = load_movielens_100k(o.data_dir, o.split);
    if (o.row_graph.empty() || o.col_graph.empty()) std::tie(row_g, col_g) = build_rating_graphs(tr, o.knn_k);
    train = tr.masked;
    truth = te.masked.values;
    test_mask = te.masked.mask;
  }
  if (!o.row_graph.empty()) row_g = load_graph(o.row_graph);
  if (!o.col_graph.empty()) col_g = load_graph(o.col_graph);
  if (row_g.size() != train.rows() || col_g.size() != train.cols()) {
    throw DimensionMismatch("graphs have " + std::to_string(row_g.size()) + " and " + std::to_string(col_g.size()) +
                            " nodes, data is " + std::to_string(train.rows()) + "x" + std::to_string(train.cols()));
  }
  if (o.dataset != "synthetic" || !o.row_graph.empty()) row_basis = basis_of(row_g, o.k);
  if (o.dataset != "synthetic" || !o.col_graph.empty()) col_basis = basis_of(col_g, o.k);

  FitResult res = fit(train, row_basis, col_basis, cfg);
  const Matrix X = reconstruct(res.map);
  ExperimentReport& report = res.report;
  report.config["command"] = "complete";
  report.config["method"] = to_string(cfg.mu == 0.0 ? Method::ours_fm : Method::ours);
  report.config["dataset"] = o.dataset;
  report.config["k"] = std::to_string(o.k);
  report.config["row_graph"] = o.row_graph;
  report.config["col_graph"] = o.col_graph;
  if (o.dataset == "synthetic") {
    record_synth_config(report, o.synth.spec);
  } else {
    report.config["data_dir"] = o.data_dir;
    report.config["split"] = o.split;
    report.config["knn_k"] = std::to_string(o.knn_k);
  }
  report.metrics["test_rmse"] = rmse_masked(X, truth, test_mask);
  report.metrics["test_entries"] = test_mask.sum();

  if (!o.dump_dir.empty()) {
    std::filesystem::create_directories(o.dump_dir);
    const std::filesystem::path d(o.dump_dir);
    save_matrix((d / "reconstruction.bin").string(), X, MatrixFormat::binary);
    save_matrix((d / "ground_truth.bin").string(), truth, MatrixFormat::binary);
    save_matrix((d / "train_mask.bin").string(), train.mask, MatrixFormat::binary);
    save_matrix((d / "test_mask.bin").string(), test_mask, MatrixFormat::binary);
    save_graph((d / "row_graph.txt").string(), row_g);
    save_graph((d / "col_graph.txt").string(), col_g);
    save_basis((d / "row_basis.bin").string(), row_basis, MatrixFormat::binary);
    save_basis((d / "col_basis.bin").string(), col_basis, MatrixFormat::binary);
  }

  report.timestamp = utc_timestamp();
  report.wall_seconds = seconds_since(t0);
  save_report(o.output, report);
  out << report.config["method"] << " test_rmse " << format_double(report.metrics["test_rmse"]) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// reduce

struct ReduceOptions {
  std::string data;
  std::string labels;
  bool has_header = false;
  std::string delimiter = ",";
  Index k_rows = 10;
  Index k_cols = 10;
  Index knn_k = 10;
  Index feature_knn_k = 10;
  int clusters = 0;
  int restarts = 10;
  int classify_k = 5;
  double train_fraction = 0.3;
  int repeats = 5;
  std::string output = "report.txt";
  std::string representation;
  FitOptions fit;
};

double repeated_knn_accuracy(const Matrix& X, const std::vector<int>& y, int K, double train_fraction, int repeats,
                             std::uint64_t seed) {
  const std::size_t n = y.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train < static_cast<std::size_t>(K) || n_train >= n) {
    throw InvalidArgument("train_fraction leaves " + std::to_string(n_train) + " training samples of " +
                          std::to_string(n) + " (need at least classify_k and a nonempty test set)");
  }
  double total = 0.0;
  for (int r = 0; r < repeats; ++r) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(r)));
    std::shuffle(order.begin(), order.end(), rng);
    Matrix tr(static_cast<Index>(n_train), X.cols());
    Matrix te(static_cast<Index>(n - n_train), X.cols());
    std::vector<int> ytr, yte;
    for (std::size_t t = 0; t < n; ++t) {
      const auto i = static_cast<Index>(order[t]);
      if (t < n_train) {
        tr.row(static_cast<Index>(t)) = X.row(i);
        ytr.push_back(y[order[t]]);
      } else {
        te.row(static_cast<Index>(t - n_train)) = X.row(i);
        yte.push_back(y[order[t]]);
      }
    }
    total += knn_classify(tr, ytr, te, K, &yte).accuracy;
  }
  return total / repeats;
}

int cmd_reduce(const ReduceOptions& o, std::ostream& out) {
  const auto t0 = Clock::now();
  const FitConfig cfg = o.fit.to_config();
  if (o.delimiter.size() != 1) throw InvalidArgument("delimiter must be a single character");
  if (o.restarts < 1 || o.repeats < 1 || o.classify_k < 1) {
    throw InvalidArgument("restarts, repeats and classify_k must be positive");
  }
  if (o.data.empty() || o.labels.empty()) throw InvalidArgument("reduce needs data and labels");

  const Matrix raw = load_dense_csv(o.data, o.has_header, o.delimiter[0]);
  const std::vector<int> y = load_labels(o.labels);
  if (static_cast<Index>(y.size()) != raw.rows()) {
    throw InvalidArgument("labels file has " + std::to_string(y.size()) + " entries but data has " +
                          std::to_string(raw.rows()) + " rows");
  }
  const int clusters = o.clusters > 0 ? o.clusters : static_cast<int>(std::set<int>(y.begin(), y.end()).size());

  const Matrix Z = standardize_features(raw);
  const WeightedGraph sample_graph = knn_graph(Z, o.knn_k);
  const WeightedGraph feature_graph = knn_graph(Z.transpose(), o.feature_knn_k);
  const ReductionResult red =
      reduce_dimension(Z, basis_of(sample_graph, o.k_rows), basis_of(feature_graph, o.k_cols), cfg);

  ExperimentReport report = red.report;
  report.config["command"] = "reduce";
  report.config["data"] = o.data;
  report.config["labels"] = o.labels;
  report.config["k_rows"] = std::to_string(o.k_rows);
  report.config["k_cols"] = std::to_string(o.k_cols);
  report.config["knn_k"] = std::to_string(o.knn_k);
  report.config["feature_knn_k"] = std::to_string(o.feature_knn_k);
  report.config["clusters"] = std::to_string(clusters);
  report.config["restarts"] = std::to_string(o.restarts);
  report.config["classify_k"] = std::to_string(o.classify_k);
  report.config["train_fraction"] = format_double(o.train_fraction);
  report.config["repeats"] = std::to_string(o.repeats);

  const PurityStats before = purity_protocol(Z, y, clusters, o.fit.seed, o.restarts);
  const PurityStats after = purity_protocol(red.representation, y, clusters, o.fit.seed, o.restarts);
  report.metrics["purity_raw_max"] = before.max;
  report.metrics["purity_raw_mean"] = before.mean;
  report.metrics["purity_max"] = after.max;
  report.metrics["purity_mean"] = after.mean;
  report.metrics["knn_accuracy_raw"] =
      repeated_knn_accuracy(Z, y, o.classify_k, o.train_fraction, o.repeats, o.fit.seed);
  report.metrics["knn_accuracy"] =
      repeated_knn_accuracy(red.representation, y, o.classify_k, o.train_fraction, o.repeats, o.fit.seed);

  if (!o.representation.empty()) save_matrix(o.representation, red.representation, MatrixFormat::binary);
  report.timestamp = utc_timestamp();
  report.wall_seconds = seconds_since(t0);
  save_report(o.output, report);
  out << "purity_max " << format_double(after.max) << " (raw " << format_double(before.max) << "), knn_accuracy "
      << format_double(report.metrics["knn_accuracy"]) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// bench-synth

struct BenchOptions {
  std::string axis;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds{0};
  Index k = 30;
  int jobs = 1;
  bool record_timing = true;
  std::string output = "sweep.csv";
  FitOptions fit;
  SynthOptions synth;
};

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  Method method = Method::ours;
  double mu = 0.0;
  double train_rmse = 0.0;
  double val_rmse = 0.0;
  double test_rmse = 0.0;
  long iters = 0;
  double wall_seconds = 0.0;
};

std::vector<double> default_axis_values(const std::string& axis) {
  if (axis == "density") return {0.01, 0.05, 0.1, 0.2};
  if (axis == "rank") return {5, 10, 12, 15};
  return {5, 10, 20};
}

SyntheticSpec apply_axis(SyntheticSpec spec, const std::string& axis, double v) {
  if (axis == "density") {
    spec.density = v;
  } else if (axis == "rank") {
    if (v != std::floor(v) || v < 1) throw InvalidArgument("rank values must be positive integers");
    spec.rank = static_cast<Index>(v);
  } else {
    spec.noise_level = v;
  }
  return spec;
}

int cmd_bench_synth(const BenchOptions& o, std::ostream& out) {
  const FitConfig base = o.fit.to_config();
  if (o.jobs < 1) throw InvalidArgument("jobs must be positive");
  if (o.seeds.empty()) throw InvalidArgument("seeds must not be empty");
  const std::vector<double> values = o.values.empty() ? default_axis_values(o.axis) : o.values;

  struct Task {
    double value;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (double v : values) {
    SyntheticSpec probe = apply_axis(o.synth.spec, o.axis, v);
    probe.k = o.k;
    probe.validate();
    for (std::uint64_t s : o.seeds) tasks.push_back({v, s});
  }

  std::vector<std::array<SweepRow, 2>> rows(tasks.size());
  std::vector<std::exception_ptr> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      try {
        SyntheticSpec spec = apply_axis(o.synth.spec, o.axis, tasks[t].value);
        spec.k = o.k;
        spec.seed = tasks[t].seed;
        const SyntheticInstance inst = make_instance(spec);
        const Method methods[2] = {Method::ours, Method::ours_fm};
        for (int mi = 0; mi < 2; ++mi) {
          FitConfig cfg = method_config(methods[mi], base);
          cfg.seed = tasks[t].seed;
          const auto t0 = Clock::now();
          const CompletionOutcome res = run_completion(inst, cfg);
          SweepRow& row = rows[t][static_cast<std::size_t>(mi)];
          row.value = tasks[t].value;
          row.seed = tasks[t].seed;
          row.method = methods[mi];
          row.mu = cfg.mu;
          row.train_rmse = res.fit.report.metrics.at("train_rmse");
          row.val_rmse = res.fit.report.metrics.at("val_rmse");
          row.test_rmse = res.test_rmse;
          row.iters = static_cast<long>(res.fit.report.metrics.at("iterations"));
          row.wall_seconds = o.record_timing ? seconds_since(t0) : 0.0;
        }
      } catch (...) {
        failures[t] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(o.jobs, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::ofstream csv(o.output);
  if (!csv) throw DataError("cannot write " + o.output);
  csv << "axis,value,seed,method,k,mu,train_rmse,val_rmse,test_rmse,iters,wall_seconds\n";
  for (const auto& pair : rows) {
    for (const auto& r : pair) {
      csv << o.axis << ',' << format_double(r.value) << ',' << r.seed << ',' << to_string(r.method) << ',' << o.k
          << ',' << format_double(r.mu) << ',' << format_double(r.train_rmse) << ',' << format_double(r.val_rmse)
          << ',' << format_double(r.test_rmse) << ',' << r.iters << ',' << format_double(r.wall_seconds) << '\n';
    }
  }
  if (!csv) throw DataError("failed writing " + o.output);
  out << "wrote " << rows.size() * 2 << " rows to " << o.output << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string reconstruction;
  std::string ground_truth;
  std::string mask;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const Matrix X = load_matrix(o.reconstruction);
  const Matrix M = load_matrix(o.ground_truth);
  const Matrix S = load_matrix(o.mask);
  out << format_double(rmse_masked(X, M, S)) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// Config-file handling

/// Splits `args` (subcommand first) into config path and the rest, then
/// returns the argument list with config entries inserted for every key not
/// given on the command line.
std::vector<std::string> merge_config(const CLI::App& sub, const std::vector<std::string>& args) {
  std::string config_path;
  std::set<std::string> given;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const std::string name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(name);
    if (name == "config") {
      if (eq != std::string::npos) {
        config_path = a.substr(eq + 1);
      } else if (i + 1 < args.size()) {
        config_path = args[i + 1];
      }
    }
  }
  if (config_path.empty()) return args;

  std::vector<std::string> merged{args.front()};
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (key == "config" || key == "help" || sub.get_option_no_throw("--" + key) == nullptr) {
      throw InvalidArgument(config_path + ": unknown key '" + key + "' for " + sub.get_name());
    }
    if (given.count(key)) continue;
    merged.push_back("--" + key);
    merged.push_back(value);
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path);
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trimmed(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trimmed(t.substr(0, eq));
    std::string value = trimmed(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw InvalidArgument(path + ":" + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": key '" + key + "' repeated");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank matrix recovery on graphs with functional maps"};
  app.name("fmgraph");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  CompleteOptions co;
  auto* complete = app.add_subcommand("complete", "matrix completion on a synthetic or MovieLens-100K dataset");
  complete->add_option("--dataset", co.dataset, "synthetic | movielens")
      ->check(CLI::IsMember({"synthetic", "movielens"}))
      ->capture_default_str();
  complete->add_option("--data_dir", co.data_dir, "MovieLens-100K directory (ml-100k)")->capture_default_str();
  complete->add_option("--split", co.split, "MovieLens split prefix (u1..u5, ua, ub)")->capture_default_str();
  complete->add_option("--row_graph", co.row_graph, "edge list replacing the row graph")->capture_default_str();
  complete->add_option("--col_graph", co.col_graph, "edge list replacing the column graph")->capture_default_str();
  complete->add_option("--knn_k", co.knn_k, "neighbors per node for MovieLens KNN graphs")->capture_default_str();
  complete->add_option("--k", co.k, "eigenvectors per basis")->capture_default_str();
  complete->add_option("--output", co.output, "report path")->capture_default_str();
  complete->add_option("--dump_dir", co.dump_dir, "directory for the reconstruction, truth, masks, graphs and bases")
      ->capture_default_str();
  co.fit.add_to(*complete);
  co.synth.add_to(*complete);

  ReduceOptions ro;
  ro.fit.mu = 0.0;
  ro.fit.val_fraction = 0.0;
  auto* reduce = app.add_subcommand("reduce", "graph-regularized dimensionality reduction with clustering and KNN scores");
  reduce->add_option("--data", ro.data, "CSV, one sample per row")->capture_default_str();
  reduce->add_option("--labels", ro.labels, "one integer label per line")->capture_default_str();
  reduce->add_option("--has_header", ro.has_header, "skip the first CSV line")->capture_default_str();
  reduce->add_option("--delimiter", ro.delimiter, "CSV field separator")->capture_default_str();
  reduce->add_option("--k_rows", ro.k_rows, "sample-graph eigenvectors")->capture_default_str();
  reduce->add_option("--k_cols", ro.k_cols, "feature-graph eigenvectors")->capture_default_str();
  reduce->add_option("--knn_k", ro.knn_k, "neighbors in the sample graph")->capture_default_str();
  reduce->add_option("--feature_knn_k", ro.feature_knn_k, "neighbors in the feature graph")->capture_default_str();
  reduce->add_option("--clusters", ro.clusters, "k-means clusters (0: number of distinct labels)")
      ->capture_default_str();
  reduce->add_option("--restarts", ro.restarts, "k-means restarts")->capture_default_str();
  reduce->add_option("--classify_k", ro.classify_k, "neighbors for KNN classification")->capture_default_str();
  reduce->add_option("--train_fraction", ro.train_fraction, "labeled share for KNN classification")
      ->capture_default_str();
  reduce->add_option("--repeats", ro.repeats, "KNN classification repeats")->capture_default_str();
  reduce->add_option("--output", ro.output, "report path")->capture_default_str();
  reduce->add_option("--representation", ro.representation, "optional path for the reduced matrix")
      ->capture_default_str();
  ro.fit.add_to(*reduce);

  BenchOptions bo;
  auto* bench = app.add_subcommand("bench-synth", "synthetic sweep over density, rank or graph noise");
  bench->add_option("--axis", bo.axis, "density | rank | noise")
      ->check(CLI::IsMember({"density", "rank", "noise"}))
      ->required();
  bench->add_option("--values", bo.values, "comma-separated settings (default: 0.01,0.05,0.1,0.2 | 5,10,12,15 | 5,10,20)")
      ->delimiter(',');
  bench->add_option("--seeds", bo.seeds, "comma-separated seeds")->delimiter(',')->capture_default_str();
  bench->add_option("--k", bo.k, "eigenvectors per basis")->capture_default_str();
  bench->add_option("--jobs", bo.jobs, "parallel (setting, seed) jobs")->capture_default_str();
  bench->add_option("--record_timing", bo.record_timing, "fill wall_seconds (false writes 0)")->capture_default_str();
  bench->add_option("--output", bo.output, "CSV path")->capture_default_str();
  bo.fit.add_to(*bench);
  bo.synth.add_to(*bench);

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "masked RMSE of a saved reconstruction");
  eval->add_option("--reconstruction", eo.reconstruction, "matrix file")->required();
  eval->add_option("--ground_truth", eo.ground_truth, "matrix file")->required();
  eval->add_option("--mask", eo.mask, "binary mask file (the test mask)")->required();

  for (auto* sub : {complete, reduce, bench, eval}) {
    sub->add_option("--config", "file of 'key = value' lines; command-line flags take precedence");
  }

  try {
    std::vector<std::string> argv = args;
    if (!argv.empty()) {
      if (CLI::App* sub = app.get_subcommand_no_throw(argv.front())) argv = merge_config(*sub, argv);
    }
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::data ? kDataError : kConfigError;
  }

  try {
    if (complete->parsed()) return cmd_complete(co, out);
    if (reduce->parsed()) return cmd_reduce(ro, out);
    if (bench->parsed()) return cmd_bench_synth(bo, out);
    return cmd_eval(eo, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::invalid_argument:
        return kConfigError;
      case ErrorKind::data:
        return kDataError;
      case ErrorKind::convergence:
        return kConvergenceError;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kDataError;
}

}  // namespace fmgraph::cli
