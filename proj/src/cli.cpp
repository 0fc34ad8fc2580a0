#include "sasa/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "sasa/oracle.hpp"

namespace sasa::cli {

namespace {

using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(to_json(v(k)));
  return out;
}

json to_json(const MatrixXd& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(to_json(VectorXd(m.row(r).transpose())));
  return out;
}

json to_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(to_json(x));
  return out;
}

json assignment_json(const Partition& p) {
  json out = json::array();
  for (int l : p.labels()) out.push_back(l + 1);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Run manifest. The timestamp lives only in the sidecar file so that the
// primary outputs stay byte-identical across reruns.
struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest

  void add_input(const std::string& path) {
    if (!path.empty()) inputs.emplace_back(path, "fnv1a64:" + fnv1a64(read_file(path)));
  }

  json body() const {
    json j{{"command", command}, {"args", args}, {"version", kVersion},
           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION)}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    json in = json::array();
    for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"digest", digest}});
    j["inputs"] = in;
    return j;
  }

  // Writes <out>.manifest.json next to an output file and returns its path.
  std::string write_sidecar(const std::string& out) const {
    const std::string path = out + ".manifest.json";
    json j = body();
    j["created_utc"] = utc_now();
    std::ofstream f(path);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << j.dump(2) << '\n';
    return path;
  }
};

void emit_json(json j, const std::string& out_path, const Manifest& manifest, std::ostream& out) {
  j["manifest"] = manifest.body();
  if (out_path.empty()) {
    out << j.dump(2) << '\n';
    return;
  }
  j["manifest"]["sidecar"] = manifest.write_sidecar(out_path);
  std::ofstream f(out_path);
  if (!f) throw InputError("cannot write '" + out_path + "'");
  f << j.dump(2) << '\n';
}

std::pair<int, int> parse_grid(const std::string& spec) {
  const auto x = spec.find_first_of("xX");
  int r = 0, c = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument("no separator");
    std::size_t used = 0;
    r = std::stoi(spec.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("trailing characters");
    c = std::stoi(spec.substr(x + 1), &used);
    if (used != spec.size() - x - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw InputError("grid must look like RxC, e.g. 7x7 (got '" + spec + "')");
  }
  if (r < 1 || c < 1) throw InputError("grid dimensions must be at least 1");
  return {r, c};
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError("invalid number '" + item + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw InputError("empty list");
  return out;
}

std::uint64_t seed_or_env(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  if (const char* env = std::getenv("SASA_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw InputError("SASA_SEED must be an unsigned integer");
    }
  }
  return 1;
}

// Options shared by commands that fit on a dataset.
struct DataOptions {
  std::string data;
  std::string adj;
  std::string grid;
  std::string contiguity = "rook";
  std::string weights = "equal";
  double psi = 1.0;
  SolverConfig config;
  std::string out;

  void add_data(CLI::App* cmd) {
    cmd->add_option("--data", data, "long-format CSV dataset")->required();
    cmd->add_option("--out", out, "output file (stdout when omitted)");
  }
  void add_spatial(CLI::App* cmd) {
    cmd->add_option("--adj", adj, "edge-list CSV (id_a,id_b)");
    cmd->add_option("--grid", grid, "regular lattice RxC in row-major location order");
    cmd->add_option("--contiguity", contiguity, "rook|queen for --grid");
    cmd->add_option("--weights", weights, "equal|reg_sp|reg|sp");
  }
  void add_solver(CLI::App* cmd) {
    cmd->add_option("--gamma", config.gamma, "SCAD constant");
    cmd->add_option("--vartheta", config.vartheta, "ADMM penalty parameter");
    cmd->add_option("--tol", config.tol, "primal residual tolerance");
    cmd->add_option("--max-iter", config.max_iter, "ADMM iteration cap");
    cmd->add_option("--group-tol", config.group_tol, "threshold on ||delta_ij|| for fusing locations");
  }

  // Neighbor orders from --adj or --grid; an isolated graph when neither
  // is given (only valid for schemes that ignore orders).
  NeighborOrders orders(const Dataset& dataset, Manifest& manifest) const {
    if (!adj.empty() && !grid.empty()) throw InputError("give either --adj or --grid, not both");
    if (!adj.empty()) {
      manifest.add_input(adj);
      return neighbor_orders(load_adjacency(adj, dataset.location_ids()));
    }
    if (!grid.empty()) {
      const auto [r, c] = parse_grid(grid);
      if (r * c != dataset.n())
        throw InputError("grid " + grid + " has " + std::to_string(r * c) + " cells but the dataset has " +
                         std::to_string(dataset.n()) + " locations");
      return neighbor_orders(build_grid_adjacency(r, c, parse_contiguity(contiguity)));
    }
    if (WeightSpec{parse_weight_kind(weights), psi}.requires_orders())
      throw InputError("weights '" + weights + "' need spatial structure: pass --adj or --grid");
    return neighbor_orders(AdjacencyGraph(static_cast<int>(dataset.n()), {}));
  }
};

json fit_json(const SasaFit& fit, const Dataset& dataset) {
  json j;
  j["lambda"] = to_json(fit.lambda);
  j["eta"] = to_json(fit.state.eta);
  j["beta"] = to_json(fit.state.beta);
  j["alpha"] = to_json(fit.alpha);
  j["assignment"] = assignment_json(fit.partition);
  j["location_ids"] = dataset.location_ids();
  j["K"] = fit.K();
  j["converged"] = fit.converged;
  j["iters"] = fit.state.iter;
  j["objective"] = to_json(fit.objective);
  j["primal_residuals"] = to_json(fit.state.primal_residual);
  j["dual_residuals"] = to_json(fit.state.dual_residual);
  return j;
}

Partition load_partition(const std::string& path, const Dataset& dataset) {
  const auto text = read_file(path);
  std::unordered_map<std::string, int> label_of;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(path, row, "", "expected 'location_id,group'");
    const auto id = line.substr(0, comma);
    const auto group = line.substr(comma + 1);
    if (id == "location_id") continue;
    try {
      label_of[id] = std::stoi(group);
    } catch (const std::exception&) {
      throw ParseError(path, row, "group", "non-integer group label '" + group + "'");
    }
  }
  std::vector<int> labels;
  for (const auto& id : dataset.location_ids()) {
    const auto it = label_of.find(id);
    if (it == label_of.end()) throw InputError("partition file has no group for location '" + id + "'");
    labels.push_back(it->second);
  }
  return Partition(std::move(labels));
}

// ---------------------------------------------------------------- bench

struct BenchRow {
  PublishedCell published;
  ReplicateAggregate reproduced;
};

std::string verdict(double published, double reproduced, double tol) {
  if (std::isnan(published)) return "n/a";
  if (std::isnan(reproduced)) return "missing";
  return std::abs(published - reproduced) <= tol ? "within" : "outside";
}

}  // namespace

std::vector<PublishedCell> published_cells(int table) {
  using S = Setting;
  const double na = kNaN;
  // table, setting, rows, cols, ni, column, K mean, K se, per, ARI, ARI se
  static const std::vector<PublishedCell> all = {
      {1, S::s1, 7, 7, 10, "equal", 3.34, 0.054, 0.69, 0.80, 0.011},
      {1, S::s1, 7, 7, 10, "reg_sp", 3.15, 0.039, 0.86, 0.92, 0.008},
      {1, S::s1, 7, 7, 10, "reg", 3.33, 0.051, 0.69, 0.82, 0.01},
      {1, S::s1, 7, 7, 10, "sp", 3.13, 0.034, 0.87, 0.92, 0.007},
      {1, S::s1, 7, 7, 10, "cv", 3.82, 0.13, 0.56, 0.95, 0.007},
      {1, S::s1, 7, 7, 30, "equal", 3.00, 0.0, 1.00, 0.998, 0.001},
      {1, S::s1, 7, 7, 30, "reg_sp", 3.00, 0.0, 1.00, 0.999, 0.0006},
      {1, S::s1, 7, 7, 30, "reg", 3.00, 0.0, 1.00, 0.998, 0.001},
      {1, S::s1, 7, 7, 30, "sp", 3.00, 0.0, 1.00, 0.999, 0.0006},
      {3, S::s1, 10, 10, 10, "equal", 3.59, 0.073, 0.53, 0.70, 0.009},
      {3, S::s1, 10, 10, 10, "sp", 3.37, 0.065, 0.71, 0.97, 0.003},
      {3, S::s1, 10, 10, 30, "equal", 3.0, 0.0, 1.00, 0.996, 0.001},
      {3, S::s1, 10, 10, 30, "sp", 3.0, 0.0, 1.00, 1.00, 0.0},
      {4, S::s2, 7, 7, 10, "equal", 3.25, 0.119, 0.34, 0.32, 0.011},
      {4, S::s2, 7, 7, 10, "reg_sp", 3.01, 0.093, 0.45, 0.50, 0.023},
      {4, S::s2, 7, 7, 10, "reg", 3.14, 0.107, 0.33, 0.33, 0.01},
      {4, S::s2, 7, 7, 10, "sp", 2.88, 0.067, 0.60, 0.61, 0.026},
      {4, S::s2, 7, 7, 30, "equal", 2.70, 0.046, 0.70, 0.72, 0.018},
      {4, S::s2, 7, 7, 30, "reg_sp", 2.90, 0.030, 0.90, 0.86, 0.015},
      {4, S::s2, 7, 7, 30, "reg", 2.76, 0.043, 0.76, 0.75, 0.017},
      {4, S::s2, 7, 7, 30, "sp", 2.95, 0.022, 0.95, 0.90, 0.012},
      {6, S::s2, 10, 10, 10, "equal", 3.82, 0.146, 0.32, 0.32, 0.009},
      {6, S::s2, 10, 10, 10, "sp", 3.35, 0.078, 0.62, 0.81, 0.022},
      {6, S::s2, 10, 10, 30, "equal", 3.10, 0.060, 0.64, 0.79, 0.012},
      {6, S::s2, 10, 10, 30, "sp", 3.00, 0.0, 1.0, 0.94, 0.005},
      {7, S::unbalanced, 10, 10, 10, "equal", 4.58, 0.093, 0.57, 0.62, 0.010},
      {7, S::unbalanced, 10, 10, 10, "reg_sp", 4.23, 0.049, 0.80, 0.94, 0.061},
      {7, S::unbalanced, 10, 10, 10, "reg", 5.17, 0.011, 0.30, 0.67, 0.009},
      {7, S::unbalanced, 10, 10, 10, "sp", 4.35, 0.059, 0.71, 0.96, 0.004},
      {8, S::random, 7, 7, 10, "equal", 3.42, 0.064, 0.66, 0.78, 0.011},
      {8, S::random, 7, 7, 10, "reg_sp", 3.45, 0.063, 0.62, 0.82, 0.010},
      {8, S::random, 7, 7, 10, "reg", 3.40, 0.059, 0.65, 0.81, 0.010},
      {8, S::random, 7, 7, 10, "sp", 3.45, 0.063, 0.62, 0.82, 0.011},
  };
  (void)na;
  if (table < 1 || table > 8) throw InputError("bench table must be in 1..8");
  // K-hat and ARI of one design are reported in paired tables; both
  // selectors run the same design.
  const int source = table == 2 ? 1 : (table == 5 ? 4 : table);
  std::vector<PublishedCell> cells;
  for (const auto& c : all)
    if (c.table == source) cells.push_back(c);
  for (auto& c : cells) c.table = table;
  return cells;
}

namespace {

int run_bench(int table, double scale, std::uint64_t seed, int jobs, const std::string& out_path,
              const Manifest& manifest, std::ostream& out) {
  if (!(scale > 0.0 && scale <= 1.0)) throw InputError("--scale must lie in (0, 1]");
  const int reps = std::max(1, static_cast<int>(std::lround(100.0 * scale)));
  const BenchTolerance tol;
  json rows = json::array();
  for (const auto& cell : published_cells(table)) {
    SimScenario sc;
    sc.setting = cell.setting;
    sc.rows = cell.rows;
    sc.cols = cell.cols;
    sc.ni = cell.ni;
    sc.seed = seed;
    MethodSpec method;
    if (cell.column == "cv") {
      method.kind = WeightKind::sp;
      method.criterion = "cv";
    } else {
      method.kind = parse_weight_kind(cell.column);
    }
    const auto run = run_replicates(sc, method, reps, jobs);
    const auto& agg = run.aggregate;
    const bool any = agg.failures < agg.replicates;
    const double khat = any ? agg.metrics.khat_mean : kNaN;
    const double per = any ? agg.metrics.per : kNaN;
    const double ari = any ? agg.metrics.ari : kNaN;
    rows.push_back({
        {"setting", to_string(cell.setting)},
        {"grid", std::to_string(cell.rows) + "x" + std::to_string(cell.cols)},
        {"ni", cell.ni},
        {"column", cell.column},
        {"replicates", agg.replicates},
        {"failures", agg.failures},
        {"khat_mean", {{"published", to_json(cell.khat_mean)}, {"published_se", to_json(cell.khat_se)},
                       {"reproduced", to_json(khat)}, {"reproduced_se", to_json(agg.metrics.khat_se)},
                       {"tolerance", tol.khat_mean}, {"verdict", verdict(cell.khat_mean, khat, tol.khat_mean)}}},
        {"per", {{"published", to_json(cell.per)}, {"reproduced", to_json(per)}, {"tolerance", tol.per},
                 {"verdict", verdict(cell.per, per, tol.per)}}},
        {"ari", {{"published", to_json(cell.ari)}, {"published_se", to_json(cell.ari_se)}, {"reproduced", to_json(ari)},
                 {"reproduced_se", to_json(agg.ari_se)}, {"tolerance", tol.ari},
                 {"verdict", verdict(cell.ari, ari, tol.ari)}}},
        {"rmse", {{"reproduced", to_json(any ? agg.metrics.rmse_beta : kNaN)},
                  {"reproduced_se", to_json(agg.rmse_se)},
                  {"refit", to_json(any ? agg.rmse_refit : kNaN)}}},
    });
  }
  json j{{"table", table}, {"scale", scale}, {"replicates", reps}, {"seed", seed}, {"rows", rows}};
  emit_json(std::move(j), out_path, manifest, out);
  return kOk;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial automatic subgroup analysis: fused-coefficient regression on areal data"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs", jobs, "worker threads for replicates and tuning grids");

  Manifest manifest;
  manifest.args = args;

  // fit
  DataOptions fit_opts;
  double fit_lambda = 0.0;
  auto* fit_cmd = app.add_subcommand("fit", "fit at a single lambda");
  fit_opts.add_data(fit_cmd);
  fit_opts.add_spatial(fit_cmd);
  fit_opts.add_solver(fit_cmd);
  fit_cmd->add_option("--psi", fit_opts.psi, "weight scale");
  fit_cmd->add_option("--lambda", fit_lambda, "penalty level")->required();

  // path
  DataOptions path_opts;
  std::string path_lambdas;
  int path_nlambda = 50;
  auto* path_cmd = app.add_subcommand("path", "warm-started lambda path with BIC per point");
  path_opts.add_data(path_cmd);
  path_opts.add_spatial(path_cmd);
  path_opts.add_solver(path_cmd);
  path_cmd->add_option("--psi", path_opts.psi, "weight scale");
  path_cmd->add_option("--lambdas", path_lambdas, "comma-separated ascending lambda grid");
  path_cmd->add_option("--nlambda", path_nlambda, "points in the default grid");

  // tune
  DataOptions tune_opts;
  std::string tune_psis = "0.1,0.5,1,3";
  std::string tune_lambdas;
  int tune_nlambda = 50;
  std::string criterion = "bic";
  int folds = 10;
  double c0 = 0.2;
  auto* tune_cmd = app.add_subcommand("tune", "select (lambda, psi) by modified BIC or cross validation");
  tune_opts.add_data(tune_cmd);
  tune_opts.add_spatial(tune_cmd);
  tune_opts.add_solver(tune_cmd);
  tune_cmd->add_option("--psis", tune_psis, "comma-separated psi candidates");
  tune_cmd->add_option("--lambdas", tune_lambdas, "comma-separated ascending lambda grid");
  tune_cmd->add_option("--nlambda", tune_nlambda, "points in the default grid");
  tune_cmd->add_option("--criterion", criterion, "bic|cv")->check(CLI::IsMember({"bic", "cv"}));
  tune_cmd->add_option("--folds", folds, "cross-validation folds");
  tune_cmd->add_option("--c0", c0, "BIC constant");

  // oracle
  std::string oracle_data, oracle_partition, oracle_out;
  std::optional<double> oracle_lambda;
  double oracle_gamma = 3.0;
  auto* oracle_cmd = app.add_subcommand("oracle", "weighted least squares with a known partition");
  oracle_cmd->add_option("--data", oracle_data, "long-format CSV dataset")->required();
  oracle_cmd->add_option("--partition", oracle_partition, "CSV location_id,group")->required();
  oracle_cmd->add_option("--lambda", oracle_lambda, "report whether b_n > gamma * lambda");
  oracle_cmd->add_option("--gamma", oracle_gamma, "SCAD constant used in the b_n check");
  oracle_cmd->add_option("--out", oracle_out, "output JSON (stdout when omitted)");

  // simulate
  std::string sim_setting = "s1", sim_grid = "7x7", sim_weights = "sp", sim_out, sim_aggregate,
              sim_criterion = "bic", sim_contiguity = "rook";
  int sim_ni = 10, sim_reps = 100, sim_folds = 10;
  std::optional<std::uint64_t> sim_seed;
  double sim_sigma = 0.5;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo replicates of a simulation design");
  sim_cmd->add_option("--setting", sim_setting, "s1|s2|unbalanced|random");
  sim_cmd->add_option("--grid", sim_grid, "7x7|10x10");
  sim_cmd->add_option("--contiguity", sim_contiguity, "rook|queen");
  sim_cmd->add_option("--ni", sim_ni, "replicates per location");
  sim_cmd->add_option("--reps", sim_reps, "number of Monte-Carlo replicates");
  sim_cmd->add_option("--weights", sim_weights, "equal|reg_sp|reg|sp");
  sim_cmd->add_option("--criterion", sim_criterion, "bic|cv")->check(CLI::IsMember({"bic", "cv"}));
  sim_cmd->add_option("--folds", sim_folds, "cross-validation folds");
  sim_cmd->add_option("--sigma", sim_sigma, "error standard deviation");
  sim_cmd->add_option("--seed", sim_seed, "base seed (falls back to SASA_SEED, then 1)");
  sim_cmd->add_option("--out", sim_out, "per-replicate CSV (stdout when omitted)");
  sim_cmd->add_option("--aggregate", sim_aggregate, "aggregate JSON (default <out>.aggregate.json)");

  // generate
  std::string gen_setting = "s1", gen_grid = "7x7", gen_out, gen_partition, gen_adj;
  int gen_ni = 10;
  std::optional<std::uint64_t> gen_seed;
  double gen_sigma = 0.5;
  auto* gen_cmd = app.add_subcommand("generate", "export one simulated dataset with its true partition");
  gen_cmd->add_option("--setting", gen_setting, "s1|s2|unbalanced|random");
  gen_cmd->add_option("--grid", gen_grid, "7x7|10x10");
  gen_cmd->add_option("--ni", gen_ni, "replicates per location");
  gen_cmd->add_option("--sigma", gen_sigma, "error standard deviation");
  gen_cmd->add_option("--seed", gen_seed, "seed (falls back to SASA_SEED, then 1)");
  gen_cmd->add_option("--out", gen_out, "dataset CSV")->required();
  gen_cmd->add_option("--partition", gen_partition, "true partition CSV");
  gen_cmd->add_option("--adj", gen_adj, "rook edge-list CSV of the grid");

  // bench
  int bench_table = 1;
  double bench_scale = 0.2;
  std::optional<std::uint64_t> bench_seed;
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "reproduce a simulation table against published values");
  bench_cmd->add_option("--table", bench_table, "table selector 1..8")->required();
  bench_cmd->add_option("--scale", bench_scale, "fraction of the 100 published replicates");
  bench_cmd->add_option("--seed", bench_seed, "base seed (falls back to SASA_SEED, then 1)");
  bench_cmd->add_option("--out", bench_out, "report JSON (stdout when omitted)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (jobs < 1) {
    err << "--jobs must be at least 1\n";
    return kUsage;
  }

  try {
    if (fit_cmd->parsed()) {
      manifest.command = "fit";
      manifest.add_input(fit_opts.data);
      const auto data = load_dataset(fit_opts.data);
      const auto orders = fit_opts.orders(data, manifest);
      const WeightSpec spec{parse_weight_kind(fit_opts.weights), fit_opts.psi};
      const auto weights = weights_for(data, orders, spec);
      const AdmmProblem problem(data, weights, fit_opts.config);
      const auto f = problem.fit(fit_lambda);
      json j = fit_json(f, data);
      j["weights"] = to_string(spec.kind);
      j["psi"] = spec.psi;
      j["bic"] = to_json(bic(data, f));
      emit_json(std::move(j), fit_opts.out, manifest, out);
      return kOk;
    }
    if (path_cmd->parsed()) {
      manifest.command = "path";
      manifest.add_input(path_opts.data);
      const auto data = load_dataset(path_opts.data);
      const auto orders = path_opts.orders(data, manifest);
      const WeightSpec spec{parse_weight_kind(path_opts.weights), path_opts.psi};
      const AdmmProblem problem(data, weights_for(data, orders, spec), path_opts.config);
      const auto lambdas = path_lambdas.empty() ? default_lambda_grid(problem, path_nlambda) : parse_list(path_lambdas);
      json points = json::array();
      for (const auto& point : solve_path(problem, lambdas)) {
        json p{{"lambda", to_json(point.lambda)}};
        if (point.fit) {
          p["K"] = point.fit->K();
          p["bic"] = to_json(bic(data, *point.fit));
          p["converged"] = point.fit->converged;
          p["iters"] = point.fit->state.iter;
          p["objective"] = to_json(point.fit->objective);
          p["assignment"] = assignment_json(point.fit->partition);
        } else {
          p["error"] = point.error;
        }
        points.push_back(std::move(p));
      }
      emit_json({{"weights", to_string(spec.kind)}, {"psi", spec.psi}, {"path", points}}, path_opts.out, manifest,
                out);
      return kOk;
    }
    if (tune_cmd->parsed()) {
      manifest.command = "tune";
      manifest.add_input(tune_opts.data);
      const auto data = load_dataset(tune_opts.data);
      const auto orders = tune_opts.orders(data, manifest);
      TuneGrid grid;
      grid.psis = parse_list(tune_psis);
      if (!tune_lambdas.empty()) grid.lambdas = parse_list(tune_lambdas);
      grid.nlambda = tune_nlambda;
      grid.c0 = c0;
      const auto kind = parse_weight_kind(tune_opts.weights);
      const auto result = criterion == "cv" ? cross_validate(data, orders, kind, grid, folds, tune_opts.config, jobs)
                                            : select(data, orders, kind, grid, tune_opts.config, jobs);
      json surface = json::array();
      for (const auto& c : result.surface)
        surface.push_back({{"psi", c.psi}, {"lambda", to_json(c.lambda)}, {"score", to_json(c.score)},
                           {"K", c.K}, {"converged", c.converged}, {"failed", c.failed}});
      json j{{"criterion", result.criterion}, {"weights", to_string(kind)}, {"best_lambda", result.best_lambda},
             {"best_psi", result.best_psi}, {"surface", surface}, {"best_fit", fit_json(result.best_fit, data)}};
      emit_json(std::move(j), tune_opts.out, manifest, out);
      return kOk;
    }
    if (oracle_cmd->parsed()) {
      manifest.command = "oracle";
      manifest.add_input(oracle_data);
      manifest.add_input(oracle_partition);
      const auto data = load_dataset(oracle_data);
      const auto part = load_partition(oracle_partition, data);
      const auto o = oracle_fit(data, part);
      json j{{"eta", to_json(o.eta)}, {"alpha", to_json(o.alpha)}, {"sigma2", to_json(o.sigma2)},
             {"se", to_json(o.se)}, {"assignment", assignment_json(part)}, {"K", part.K()}};
      if (part.K() >= 2) {
        const double bn = min_group_gap(o.alpha);
        j["b_n"] = to_json(bn);
        if (oracle_lambda)
          j["b_n_exceeds_gamma_lambda"] = bn > oracle_gamma * *oracle_lambda;
      } else {
        j["b_n"] = nullptr;
      }
      emit_json(std::move(j), oracle_out, manifest, out);
      return kOk;
    }
    if (sim_cmd->parsed()) {
      manifest.command = "simulate";
      SimScenario sc;
      sc.setting = parse_setting(sim_setting);
      std::tie(sc.rows, sc.cols) = parse_grid(sim_grid);
      sc.ni = sim_ni;
      sc.sigma = sim_sigma;
      sc.seed = seed_or_env(sim_seed);
      manifest.seed = sc.seed;
      MethodSpec method;
      method.kind = parse_weight_kind(sim_weights);
      method.criterion = sim_criterion;
      method.folds = sim_folds;
      method.contiguity = parse_contiguity(sim_contiguity);
      const auto result = run_replicates(sc, method, sim_reps, jobs);

      std::ostringstream csv;
      if (!sim_out.empty()) csv << "# manifest: " << sim_out << ".manifest.json\n";
      csv << "replicate,seed,K_true,K,ARI,RMSE,RMSE_refit,lambda,psi,converged,failed\n";
      for (const auto& r : result.rows)
        csv << r.replicate << ',' << r.seed << ',' << r.K_true << ',' << r.K << ',' << csv_number(r.ari) << ','
            << csv_number(r.rmse) << ',' << csv_number(r.rmse_refit) << ',' << csv_number(r.lambda) << ','
            << csv_number(r.psi) << ',' << (r.converged ? 1 : 0) << ',' << (r.failed ? 1 : 0) << '\n';
      const auto& agg = result.aggregate;
      json aj{{"setting", to_string(sc.setting)}, {"grid", sim_grid}, {"ni", sc.ni},
              {"weights", to_string(method.kind)}, {"criterion", method.criterion}, {"replicates", agg.replicates},
              {"failures", agg.failures},
              {"khat", {{"mean", to_json(agg.metrics.khat_mean)}, {"se", to_json(agg.metrics.khat_se)},
                        {"per", to_json(agg.metrics.per)}}},
              {"ari", {{"mean", to_json(agg.metrics.ari)}, {"se", to_json(agg.ari_se)}}},
              {"rmse", {{"mean", to_json(agg.metrics.rmse_beta)}, {"se", to_json(agg.rmse_se)}}},
              {"rmse_refit", {{"mean", to_json(agg.rmse_refit)}, {"se", to_json(agg.rmse_refit_se)}}}};
      if (sim_out.empty()) {
        out << csv.str();
        if (!sim_aggregate.empty()) emit_json(std::move(aj), sim_aggregate, manifest, out);
      } else {
        manifest.write_sidecar(sim_out);
        std::ofstream f(sim_out);
        if (!f) throw InputError("cannot write '" + sim_out + "'");
        f << csv.str();
        emit_json(std::move(aj), sim_aggregate.empty() ? sim_out + ".aggregate.json" : sim_aggregate, manifest, out);
      }
      return kOk;
    }
    if (gen_cmd->parsed()) {
      manifest.command = "generate";
      SimScenario sc;
      sc.setting = parse_setting(gen_setting);
      std::tie(sc.rows, sc.cols) = parse_grid(gen_grid);
      sc.ni = gen_ni;
      sc.sigma = gen_sigma;
      sc.seed = seed_or_env(gen_seed);
      manifest.seed = sc.seed;
      const auto [data, truth] = generate(sc);
      manifest.write_sidecar(gen_out);
      write_dataset(data, gen_out);
      if (!gen_partition.empty()) {
        std::ofstream f(gen_partition);
        if (!f) throw InputError("cannot write '" + gen_partition + "'");
        f << "location_id,group\n";
        for (Index i = 0; i < data.n(); ++i) f << data.block(i).location_id << ',' << truth.partition.label(i) + 1 << '\n';
      }
      if (!gen_adj.empty()) {
        std::ofstream f(gen_adj);
        if (!f) throw InputError("cannot write '" + gen_adj + "'");
        f << "id_a,id_b\n";
        const auto graph = build_grid_adjacency(sc.rows, sc.cols);
        for (const auto& [a, b] : graph.edges()) f << a + 1 << ',' << b + 1 << '\n';
      }
      return kOk;
    }
    if (bench_cmd->parsed()) {
      manifest.command = "bench";
      const auto seed = seed_or_env(bench_seed);
      manifest.seed = seed;
      return run_bench(bench_table, bench_scale, seed, jobs, bench_out, manifest, out);
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return run(args, out, err);
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace sasa::cli
