#include "sasa/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sasa {

namespace {

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

std::optional<double> parse_double(const std::string& cell) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) return std::nullopt;
  return value;
}

// Index k >= 1 if name is prefix followed by a positive integer.
std::optional<int> numbered_column(const std::string& name, char prefix) {
  if (name.size() < 2 || name[0] != prefix) return std::nullopt;
  int k = 0;
  const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
  if (ec != std::errc{} || ptr != name.data() + name.size() || k < 1) return std::nullopt;
  return k;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::optional<Violation> validate(std::span<const LocationBlock> blocks) {
  if (blocks.empty()) return Violation{"", "dataset has no locations"};
  const Index q = blocks.front().Z.cols();
  const Index p = blocks.front().X.cols();
  if (p < 1) return Violation{blocks.front().location_id, "local covariate dimension p must be >= 1"};
  std::unordered_set<std::string> seen;
  for (const auto& b : blocks) {
    if (!seen.insert(b.location_id).second) return Violation{b.location_id, "duplicate location_id"};
    if (b.y.size() < 1) return Violation{b.location_id, "empty location"};
    if (b.Z.rows() != b.y.size() || b.X.rows() != b.y.size())
      return Violation{b.location_id, "covariate row count does not match response count"};
    if (b.Z.cols() != q) return Violation{b.location_id, "z row length differs from q"};
    if (b.X.cols() != p) return Violation{b.location_id, "x row length differs from p"};
    if (!b.y.allFinite() || !all_finite(b.Z) || !all_finite(b.X))
      return Violation{b.location_id, "non-finite value"};
  }
  return std::nullopt;
}

Dataset::Dataset(std::vector<LocationBlock> blocks) : blocks_(std::move(blocks)) {
  if (auto v = sasa::validate(std::span<const LocationBlock>(blocks_)))
    throw InputError("invalid dataset at location '" + v->location_id + "': " + v->message);
  q_ = blocks_.front().Z.cols();
  p_ = blocks_.front().X.cols();
  for (const auto& b : blocks_) m_ += b.size();
}

std::vector<std::string> Dataset::location_ids() const {
  std::vector<std::string> ids;
  ids.reserve(blocks_.size());
  for (const auto& b : blocks_) ids.push_back(b.location_id);
  return ids;
}

VectorXd Dataset::residual(Index i, const VectorXd& eta, const MatrixXd& beta) const {
  const auto& b = block(i);
  VectorXd r = b.y - b.X * beta.row(i).transpose();
  if (q_ > 0) r -= b.Z * eta;
  return r;
}

double Dataset::weighted_loss(const VectorXd& eta, const MatrixXd& beta) const {
  double loss = 0.0;
  for (Index i = 0; i < n(); ++i)
    loss += residual(i, eta, beta).squaredNorm() / static_cast<double>(replicates(i));
  return 0.5 * loss;
}

std::optional<Violation> validate(const Dataset& dataset) {
  return validate(std::span<const LocationBlock>(dataset.blocks()));
}

Dataset parse_dataset(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    header = split_csv_line(t);
    break;
  }
  if (header.empty()) throw ParseError(source, row, "", "missing header");

  int col_loc = -1, col_rep = -1, col_y = -1;
  std::map<int, int> zcols, xcols;  // covariate index -> column
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const auto& h = header[static_cast<std::size_t>(c)];
    if (h == "location_id") col_loc = c;
    else if (h == "rep_id") col_rep = c;
    else if (h == "y") col_y = c;
    else if (auto k = numbered_column(h, 'z')) zcols[*k] = c;
    else if (auto k = numbered_column(h, 'x')) xcols[*k] = c;
    else throw ParseError(source, row, h, "unknown column (expected long format)");
  }
  const std::size_t header_row = row;
  if (col_loc < 0) throw ParseError(source, header_row, "location_id", "missing column");
  if (col_rep < 0) throw ParseError(source, header_row, "rep_id", "missing column");
  if (col_y < 0) throw ParseError(source, header_row, "y", "missing column");
  const int q = static_cast<int>(zcols.size());
  const int p = static_cast<int>(xcols.size());
  for (int k = 1; k <= q; ++k)
    if (!zcols.count(k)) throw ParseError(source, header_row, "z" + std::to_string(k), "missing column");
  for (int k = 1; k <= p; ++k)
    if (!xcols.count(k)) throw ParseError(source, header_row, "x" + std::to_string(k), "missing column");
  if (p < 1) throw ParseError(source, header_row, "x1", "missing column");

  struct Obs {
    long rep;
    std::size_t row;
    double y;
    std::vector<double> z, x;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Obs>> rows_by_loc;

  auto number = [&](const std::vector<std::string>& cells, int c) {
    const auto& cell = cells[static_cast<std::size_t>(c)];
    const auto& name = header[static_cast<std::size_t>(c)];
    auto v = parse_double(cell);
    if (!v) throw ParseError(source, row, name, "non-numeric cell '" + cell + "'");
    if (!std::isfinite(*v)) throw ParseError(source, row, name, "non-finite value");
    return *v;
  };

  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split_csv_line(t);
    if (cells.size() != header.size())
      throw ParseError(source, row, "", "expected " + std::to_string(header.size()) + " cells, found " +
                                            std::to_string(cells.size()));
    const auto& loc = cells[static_cast<std::size_t>(col_loc)];
    if (loc.empty()) throw ParseError(source, row, "location_id", "empty location_id");
    if (!rows_by_loc.count(loc)) {
      order.push_back(loc);
      rows_by_loc[loc];
    }
    // A row carrying only a location_id declares the location without data.
    const bool declaration = std::all_of(cells.begin(), cells.end(), [&](const std::string& c) {
      return &c == &cells[static_cast<std::size_t>(col_loc)] || c.empty();
    });
    if (declaration) continue;

    Obs obs;
    obs.row = row;
    const double rep = number(cells, col_rep);
    if (rep != std::floor(rep)) throw ParseError(source, row, "rep_id", "rep_id must be an integer");
    obs.rep = static_cast<long>(rep);
    obs.y = number(cells, col_y);
    for (int k = 1; k <= q; ++k) obs.z.push_back(number(cells, zcols[k]));
    for (int k = 1; k <= p; ++k) obs.x.push_back(number(cells, xcols[k]));
    rows_by_loc[loc].push_back(std::move(obs));
  }

  std::vector<LocationBlock> blocks;
  blocks.reserve(order.size());
  for (const auto& loc : order) {
    auto& obs = rows_by_loc[loc];
    if (obs.empty()) throw ParseError(source, row, "location_id", "empty location '" + loc + "'");
    std::stable_sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.rep < b.rep; });
    for (std::size_t h = 1; h < obs.size(); ++h)
      if (obs[h].rep == obs[h - 1].rep)
        throw ParseError(source, obs[h].row, "rep_id", "duplicate rep_id for location '" + loc + "'");
    const auto ni = static_cast<Index>(obs.size());
    LocationBlock b{loc, VectorXd(ni), MatrixXd(ni, q), MatrixXd(ni, p)};
    for (Index h = 0; h < ni; ++h) {
      const auto& o = obs[static_cast<std::size_t>(h)];
      b.y(h) = o.y;
      for (int k = 0; k < q; ++k) b.Z(h, k) = o.z[static_cast<std::size_t>(k)];
      for (int k = 0; k < p; ++k) b.X(h, k) = o.x[static_cast<std::size_t>(k)];
    }
    blocks.push_back(std::move(b));
  }
  if (blocks.empty()) throw ParseError(source, row, "", "no data rows");
  return Dataset(std::move(blocks));
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), path);
}

std::string format_dataset(const Dataset& dataset) {
  std::string out = "location_id,rep_id,y";
  for (Index k = 1; k <= dataset.q(); ++k) out += ",z" + std::to_string(k);
  for (Index k = 1; k <= dataset.p(); ++k) out += ",x" + std::to_string(k);
  out += '\n';
  for (const auto& b : dataset.blocks()) {
    for (Index h = 0; h < b.size(); ++h) {
      out += b.location_id + "," + std::to_string(h + 1) + "," + format_double(b.y(h));
      for (Index k = 0; k < dataset.q(); ++k) out += "," + format_double(b.Z(h, k));
      for (Index k = 0; k < dataset.p(); ++k) out += "," + format_double(b.X(h, k));
      out += '\n';
    }
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write dataset '" + path + "'");
  out << format_dataset(dataset);
}

Partition::Partition(std::vector<int> labels) {
  if (labels.empty()) throw InputError("partition must cover at least one location");
  std::unordered_map<int, int> remap;
  labels_.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    labels_.push_back(it->second);
  }
  K_ = static_cast<int>(remap.size());
}

Partition Partition::singletons(Index n) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
  return Partition(std::move(labels));
}

Partition Partition::single_group(Index n) { return Partition(std::vector<int>(static_cast<std::size_t>(n), 0)); }

std::vector<Index> Partition::sizes() const {
  std::vector<Index> s(static_cast<std::size_t>(K_), 0);
  for (int l : labels_) ++s[static_cast<std::size_t>(l)];
  return s;
}

std::vector<std::vector<Index>> Partition::members() const {
  std::vector<std::vector<Index>> g(static_cast<std::size_t>(K_));
  for (std::size_t i = 0; i < labels_.size(); ++i) g[static_cast<std::size_t>(labels_[i])].push_back(static_cast<Index>(i));
  return g;
}

MatrixXd expand_groups(const Partition& partition, const MatrixXd& alpha) {
  if (alpha.rows() != partition.K()) throw InputError("alpha row count must equal K");
  MatrixXd beta(partition.n(), alpha.cols());
  for (Index i = 0; i < partition.n(); ++i) beta.row(i) = alpha.row(partition.label(i));
  return beta;
}

void SolverConfig::validate() const {
  if (!(vartheta > 0.0)) throw InputError("vartheta must be positive");
  if (!(gamma > 2.0)) throw InputError("SCAD gamma must exceed 2");
  if (!(gamma > 1.0 + 1.0 / vartheta))
    throw InputError("gamma must exceed 1 + 1/vartheta for the closed-form SCAD update");
  if (!(tol > 0.0)) throw InputError("tol must be positive");
  if (max_iter < 1) throw InputError("max_iter must be at least 1");
  if (!(group_tol >= 0.0)) throw InputError("group_tol must be nonnegative");
}

}  // namespace sasa
