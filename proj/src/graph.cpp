#include "sasa/graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "sasa/error.hpp"

namespace sasa {

Contiguity parse_contiguity(const std::string& name) {
  if (name == "rook") return Contiguity::rook;
  if (name == "queen") return Contiguity::queen;
  throw InputError("unknown contiguity '" + name + "' (expected rook|queen)");
}

AdjacencyGraph::AdjacencyGraph(int n, const std::vector<std::pair<int, int>>& edges)
    : n_(n), adj_(static_cast<std::size_t>(std::max(n, 0))) {
  if (n < 1) throw InputError("adjacency graph needs at least one location");
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw InputError("edge endpoint out of range");
    if (a == b) throw InputError("self-loop at location index " + std::to_string(a));
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  for (auto [a, b] : edges_) {
    adj_[static_cast<std::size_t>(a)].push_back(b);
    adj_[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

bool AdjacencyGraph::adjacent(int i, int j) const {
  const auto& nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

AdjacencyGraph build_grid_adjacency(int rows, int cols, Contiguity contiguity) {
  if (rows < 1 || cols < 1) throw InputError("grid dimensions must be at least 1x1");
  std::vector<std::pair<int, int>> edges;
  auto idx = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(idx(r, c), idx(r, c + 1));
      if (r + 1 < rows) edges.emplace_back(idx(r, c), idx(r + 1, c));
      if (contiguity == Contiguity::queen && r + 1 < rows) {
        if (c + 1 < cols) edges.emplace_back(idx(r, c), idx(r + 1, c + 1));
        if (c > 0) edges.emplace_back(idx(r, c), idx(r + 1, c - 1));
      }
    }
  }
  return AdjacencyGraph(rows * cols, edges);
}

AdjacencyGraph parse_adjacency(const std::string& text, const std::vector<std::string>& location_ids,
                               const std::string& source) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < location_ids.size(); ++i) index.emplace(location_ids[i], static_cast<int>(i));

  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };

  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(source, row, "", "expected 'id_a,id_b'");
    const auto a = trim(line.substr(0, comma));
    const auto b = trim(line.substr(comma + 1));
    if (a == "id_a" && b == "id_b") continue;  // header
    const auto ia = index.find(a);
    const auto ib = index.find(b);
    if (ia == index.end()) throw ParseError(source, row, "id_a", "unknown location id '" + a + "'");
    if (ib == index.end()) throw ParseError(source, row, "id_b", "unknown location id '" + b + "'");
    if (ia->second == ib->second) throw ParseError(source, row, "", "self-loop at '" + a + "'");
    edges.emplace_back(ia->second, ib->second);
  }
  return AdjacencyGraph(static_cast<int>(location_ids.size()), edges);
}

AdjacencyGraph load_adjacency(const std::string& path, const std::vector<std::string>& location_ids) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open adjacency file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_adjacency(ss.str(), location_ids, path);
}

AdjacencyGraph load_adjacency(const std::string& path, int n) {
  std::vector<std::string> ids;
  for (int i = 1; i <= n; ++i) ids.push_back(std::to_string(i));
  return load_adjacency(path, ids);
}

NeighborOrders neighbor_orders(const AdjacencyGraph& graph) {
  const int n = graph.n();
  NeighborOrders out;
  out.a_max_cap = n;
  out.a = Eigen::MatrixXi::Constant(n, n, n);
  std::vector<int> dist(static_cast<std::size_t>(n));
  std::queue<int> frontier;
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[static_cast<std::size_t>(s)] = 0;
    frontier.push(s);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v : graph.neighbors(u)) {
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          frontier.push(v);
        }
      }
    }
    for (int t = 0; t < n; ++t)
      if (dist[static_cast<std::size_t>(t)] >= 0) out.a(s, t) = dist[static_cast<std::size_t>(t)];
  }
  return out;
}

}  // namespace sasa
