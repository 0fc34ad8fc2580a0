#ifndef SASA_GRAPH_HPP
#define SASA_GRAPH_HPP

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace sasa {

enum class Contiguity { rook, queen };

Contiguity parse_contiguity(const std::string& name);

// Undirected areal adjacency over locations 0..n-1. Edges are stored once
// as (i, j) with i < j, sorted.
class AdjacencyGraph {
 public:
  AdjacencyGraph(int n, const std::vector<std::pair<int, int>>& edges);

  int n() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adj_[static_cast<std::size_t>(i)]; }
  bool adjacent(int i, int j) const;

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adj_;
};

// Row-major cells: cell (r, c) has index r * cols + c.
AdjacencyGraph build_grid_adjacency(int rows, int cols, Contiguity contiguity = Contiguity::rook);

// Edge list "id_a,id_b" resolved against the dataset's location ids.
AdjacencyGraph load_adjacency(const std::string& path, const std::vector<std::string>& location_ids);
AdjacencyGraph parse_adjacency(const std::string& text, const std::vector<std::string>& location_ids,
                               const std::string& source = "<memory>");
// Same, with ids 1..n.
AdjacencyGraph load_adjacency(const std::string& path, int n);

struct NeighborOrders {
  Eigen::MatrixXi a;  // graph distance; unreachable pairs hold a_max_cap
  int a_max_cap = 0;
};

// All-pairs shortest path lengths by breadth-first search.
NeighborOrders neighbor_orders(const AdjacencyGraph& graph);

}  // namespace sasa

#endif  // SASA_GRAPH_HPP
