#include "sasa/metrics.hpp"

#include <cmath>
#include <map>

namespace sasa {

namespace {

double choose2(double x) { return 0.5 * x * (x - 1.0); }

}  // namespace

double adjusted_rand_index(const Partition& a, const Partition& b) {
  if (a.n() != b.n()) throw InputError("adjusted_rand_index: partitions cover different numbers of locations");
  const auto n = static_cast<double>(a.n());
  std::map<std::pair<int, int>, double> table;
  for (Index i = 0; i < a.n(); ++i) table[{a.label(i), b.label(i)}] += 1.0;

  double index = 0.0;
  for (const auto& [cell, count] : table) index += choose2(count);
  double rows = 0.0;
  for (auto s : a.sizes()) rows += choose2(static_cast<double>(s));
  double cols = 0.0;
  for (auto s : b.sizes()) cols += choose2(static_cast<double>(s));

  const double total = choose2(n);
  const double expected = total > 0.0 ? rows * cols / total : 0.0;
  const double max_index = 0.5 * (rows + cols);
  // Degenerate when both partitions are all-singletons or a single group.
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double rmse_beta(const MatrixXd& beta_hat, const MatrixXd& beta_true) {
  if (beta_hat.rows() != beta_true.rows() || beta_hat.cols() != beta_true.cols())
    throw InputError("rmse_beta: shape mismatch");
  if (beta_hat.rows() == 0) throw InputError("rmse_beta: empty coefficient matrix");
  return std::sqrt((beta_hat - beta_true).squaredNorm() / static_cast<double>(beta_hat.rows()));
}

MeanSe mean_se(const std::vector<double>& values) {
  if (values.empty()) throw InputError("mean_se: empty sample");
  const auto count = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= count;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (count - 1.0)) / std::sqrt(count)};
}

KhatSummary khat_summary(const std::vector<int>& khats, int true_K) {
  if (khats.empty()) throw InputError("khat_summary: empty list");
  std::vector<double> values(khats.begin(), khats.end());
  const auto ms = mean_se(values);
  double hits = 0.0;
  for (int k : khats) hits += (k == true_K) ? 1.0 : 0.0;
  return {ms.mean, ms.se, hits / static_cast<double>(khats.size())};
}

}  // namespace sasa
