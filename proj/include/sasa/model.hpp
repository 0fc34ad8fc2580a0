#ifndef SASA_MODEL_HPP
#define SASA_MODEL_HPP

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sasa/error.hpp"

namespace sasa {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Replicates observed at one location: y (n_i), Z (n_i x q), X (n_i x p).
struct LocationBlock {
  std::string location_id;
  VectorXd y;
  MatrixXd Z;
  MatrixXd X;

  Index size() const { return y.size(); }
};

struct Violation {
  std::string location_id;
  std::string message;
};

// First invariant violation among the blocks, or nullopt when consistent.
std::optional<Violation> validate(std::span<const LocationBlock> blocks);

// Areal dataset with repeated measures. Immutable once constructed; the
// location index used everywhere else is the position in blocks().
class Dataset {
 public:
  explicit Dataset(std::vector<LocationBlock> blocks);

  Index n() const { return static_cast<Index>(blocks_.size()); }
  Index q() const { return q_; }
  Index p() const { return p_; }
  Index m() const { return m_; }

  const std::vector<LocationBlock>& blocks() const { return blocks_; }
  const LocationBlock& block(Index i) const { return blocks_[static_cast<std::size_t>(i)]; }
  Index replicates(Index i) const { return block(i).size(); }
  std::vector<std::string> location_ids() const;

  // Residuals y - Z eta - X_i beta_i for location i.
  VectorXd residual(Index i, const VectorXd& eta, const MatrixXd& beta) const;

  // 1/2 sum_i n_i^-1 sum_h r_ih^2.
  double weighted_loss(const VectorXd& eta, const MatrixXd& beta) const;

 private:
  std::vector<LocationBlock> blocks_;
  Index q_ = 0;
  Index p_ = 0;
  Index m_ = 0;
};

std::optional<Violation> validate(const Dataset& dataset);

// Long CSV: location_id, rep_id, y, z1..zq, x1..xp. '#' lines are comments.
Dataset load_dataset(const std::string& path);
Dataset parse_dataset(const std::string& text, const std::string& source = "<memory>");
void write_dataset(const Dataset& dataset, const std::string& path);
std::string format_dataset(const Dataset& dataset);

// Group labels 0..K-1, canonicalized by first appearance so that two
// partitions describing the same grouping compare equal.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<int> labels);

  static Partition singletons(Index n);
  static Partition single_group(Index n);

  Index n() const { return static_cast<Index>(labels_.size()); }
  int K() const { return K_; }
  int label(Index i) const { return labels_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }
  std::vector<Index> sizes() const;
  std::vector<std::vector<Index>> members() const;

  bool operator==(const Partition&) const = default;

 private:
  std::vector<int> labels_;
  int K_ = 0;
};

struct Coefficients {
  VectorXd eta;
  MatrixXd beta;                 // n x p, row i = beta_i
  std::optional<MatrixXd> alpha;  // K x p when a partition is attached
};

// Expand group coefficients to per-location rows.
MatrixXd expand_groups(const Partition& partition, const MatrixXd& alpha);

struct SolverConfig {
  double gamma = 3.0;
  double vartheta = 1.0;
  double tol = 1e-4;
  int max_iter = 1000;
  double group_tol = 1e-6;

  // Throws InputError unless gamma > 1 + 1/vartheta, tol > 0, max_iter >= 1.
  void validate() const;
};

}  // namespace sasa

#endif  // SASA_MODEL_HPP
