#include <doctest.h>

#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "sasa/simgen.hpp"

using namespace sasa;

namespace {

bool region_connected(const Partition& part, int label, const AdjacencyGraph& g) {
  std::vector<int> cells;
  for (Index i = 0; i < part.n(); ++i)
    if (part.label(i) == label) cells.push_back(static_cast<int>(i));
  if (cells.empty()) return false;
  std::set<int> seen{cells.front()};
  std::queue<int> todo;
  todo.push(cells.front());
  while (!todo.empty()) {
    const int c = todo.front();
    todo.pop();
    for (int nb : g.neighbors(c))
      if (part.label(nb) == label && seen.insert(nb).second) todo.push(nb);
  }
  return seen.size() == cells.size();
}

Partition read_layout(const std::string& name) {
  std::ifstream in(std::string(SASA_DATA_DIR) + "/layouts/" + name);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  std::vector<int> labels;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    labels.push_back(std::stoi(line.substr(comma + 1)));
  }
  return Partition(labels);
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("fixed layouts have the documented sizes") {
  CHECK(layout(Setting::s1, 7, 7).sizes() == std::vector<Index>{16, 17, 16});
  CHECK(layout(Setting::s2, 10, 10).sizes() == std::vector<Index>{33, 34, 33});
  CHECK(layout(Setting::unbalanced, 10, 10).sizes() == std::vector<Index>{9, 41, 41, 9});
  CHECK_THROWS_AS(layout(Setting::s1, 8, 8), InputError);
  CHECK_THROWS_AS(layout(Setting::unbalanced, 7, 7), InputError);
  CHECK_THROWS_AS(layout(Setting::random, 7, 7), InputError);
}

TEST_CASE("fixed layout regions are rook-connected") {
  for (auto [setting, side] : {std::pair{Setting::s1, 7}, std::pair{Setting::s1, 10}, std::pair{Setting::unbalanced, 10}}) {
    const auto part = layout(setting, side, side);
    const auto g = build_grid_adjacency(side, side);
    for (int k = 0; k < part.K(); ++k) CHECK(region_connected(part, k, g));
  }
}

TEST_CASE("shipped layout files match the generator") {
  CHECK(read_layout("three_band_7x7.csv") == layout(Setting::s1, 7, 7));
  CHECK(read_layout("three_band_10x10.csv") == layout(Setting::s1, 10, 10));
  CHECK(read_layout("unbalanced_10x10.csv") == layout(Setting::unbalanced, 10, 10));
}

TEST_CASE("alpha tables") {
  CHECK(alpha_table(Setting::s1).rows() == 3);
  CHECK(alpha_table(Setting::s2)(1, 0) == 1.25);
  CHECK(alpha_table(Setting::unbalanced).rows() == 4);
  CHECK(alpha_table(Setting::unbalanced)(3, 1) == 2.5);
}

TEST_CASE("covariate distributions") {
  const auto part = Partition::single_group(1);
  MatrixXd alpha(1, 2);
  alpha << 1.0, 1.0;
  const auto [data, truth] = generate(part, alpha, 40000, 0.5, 0.3, 77);
  const auto& b = data.block(0);
  CHECK((b.Z.col(0).array() == 1.0).all());
  for (int j = 1; j < 5; ++j)
    for (int k = j + 1; k < 5; ++k) {
      std::vector<double> a(b.Z.col(j).data(), b.Z.col(j).data() + b.size());
      std::vector<double> c(b.Z.col(k).data(), b.Z.col(k).data() + b.size());
      CHECK(std::abs(correlation(a, c) - 0.3) < 0.05);
    }
  const double mean_x2 = b.X.col(1).mean();
  const double var_x2 = (b.X.col(1).array() - mean_x2).square().mean();
  CHECK(std::abs(mean_x2) < 0.03);
  CHECK(std::abs(var_x2 - 1.0) < 0.03);
  CHECK(std::abs(b.X.col(0).mean()) < 0.03);
  CHECK((truth.eta.array() >= 1.0).all());
  CHECK((truth.eta.array() <= 2.0).all());
  // residual spread matches sigma
  const VectorXd r = b.y - b.Z * truth.eta - b.X * alpha.row(0).transpose();
  CHECK(std::sqrt(r.squaredNorm() / r.size()) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("generation is deterministic per seed") {
  SimScenario sc;
  sc.seed = 5;
  const auto a = generate(sc);
  const auto b = generate(sc);
  CHECK(format_dataset(a.first) == format_dataset(b.first));
  sc.seed = 6;
  CHECK(format_dataset(generate(sc).first) != format_dataset(a.first));
  CHECK(a.first.n() == 49);
  CHECK(a.first.replicates(0) == 10);
  CHECK(a.second.beta().rows() == 49);
}

TEST_CASE("random layouts draw labels from the seed") {
  SimScenario sc;
  sc.setting = Setting::random;
  sc.seed = 3;
  const auto a = generate(sc).second.partition;
  CHECK(a == generate(sc).second.partition);
  CHECK(a.K() == 3);
  CHECK(a.n() == 49);
}

TEST_CASE("replicate seeds are distinct") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t r = 0; r < 1000; ++r) seeds.insert(replicate_seed(1, r));
  CHECK(seeds.size() == 1000);
  CHECK(replicate_seed(1, 0) != replicate_seed(2, 0));
}

TEST_CASE("replicate runs are reproducible and thread-count invariant") {
  SimScenario sc;
  sc.ni = 10;
  sc.seed = 17;
  MethodSpec method;
  method.kind = WeightKind::equal;
  method.grid.nlambda = 12;
  const auto one = run_replicates(sc, method, 3, 1);
  const auto two = run_replicates(sc, method, 3, 2);
  REQUIRE(one.rows.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(one.rows[r].seed == two.rows[r].seed);
    CHECK(one.rows[r].K == two.rows[r].K);
    CHECK(one.rows[r].ari == two.rows[r].ari);
    CHECK(one.rows[r].rmse == two.rows[r].rmse);
    CHECK_FALSE(one.rows[r].failed);
    CHECK(one.rows[r].K_true == 3);
  }
  CHECK(one.aggregate.replicates == 3);
  CHECK(one.aggregate.failures == 0);
  CHECK(one.aggregate.metrics.ari == two.aggregate.metrics.ari);
  CHECK(one.aggregate.metrics.ari > 0.5);
  CHECK_THROWS_AS(run_replicates(sc, method, 0), InputError);
}

TEST_CASE("aggregate skips failed replicates") {
  std::vector<ReplicateResult> rows(3);
  rows[0].K = 3;
  rows[0].ari = 1.0;
  rows[1].failed = true;
  rows[2].K = 4;
  rows[2].ari = 0.5;
  const auto agg = aggregate(rows, 3);
  CHECK(agg.replicates == 3);
  CHECK(agg.failures == 1);
  CHECK(agg.metrics.ari == doctest::Approx(0.75));
  CHECK(agg.metrics.per == doctest::Approx(0.5));
}

TEST_CASE("scenario checks") {
  SimScenario sc;
  sc.ni = 0;
  CHECK_THROWS_AS(sc.validate(), InputError);
  sc = SimScenario{};
  sc.rho = 1.0;
  CHECK_THROWS_AS(sc.validate(), InputError);
  CHECK(parse_setting("unbalanced") == Setting::unbalanced);
  CHECK_THROWS_AS(parse_setting("s3"), InputError);
}
