#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcx/rng.hpp"

namespace gcx {

// Canonical undirected edge: endpoints stored as (min, max) so that the two
// directions of an edge can never be counted twice.
struct EdgeId {
  int u = 0;
  int v = 0;

  EdgeId() = default;
  EdgeId(int a, int b) : u(a < b ? a : b), v(a < b ? b : a) {}

  friend auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

struct EdgeIdHash {
  std::size_t operator()(const EdgeId& e) const {
    return std::hash<std::uint64_t>()((static_cast<std::uint64_t>(e.u) << 32) ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.v)));
  }
};

// Undirected graph with node features, class labels and ground-truth motif
// membership. Immutable after construction; every operation below returns a
// new graph or a value.
class LabeledGraph {
 public:
  LabeledGraph(int node_count, std::vector<EdgeId> edges, Eigen::MatrixXd features,
               std::vector<int> labels, std::vector<int> motif_nodes);

  int node_count() const { return node_count_; }
  const std::vector<EdgeId>& edges() const { return edges_; }
  const Eigen::MatrixXd& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<int>& motif_nodes() const { return motif_nodes_; }
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }

  int edge_count() const { return static_cast<int>(edges_.size()); }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  int class_count() const;
  bool has_edge(int u, int v) const;
  int degree(int u) const { return static_cast<int>(neighbors_[static_cast<std::size_t>(u)].size()); }

 private:
  int node_count_;
  std::vector<EdgeId> edges_;  // sorted ascending, unique
  Eigen::MatrixXd features_;
  std::vector<int> labels_;
  std::vector<int> motif_nodes_;  // sorted ascending
  std::vector<std::vector<int>> neighbors_;
};

// Nodes at shortest-path distance <= hops from v, sorted ascending, plus the
// edges of the induced subgraph in canonical order.
std::pair<std::vector<int>, std::vector<EdgeId>> khop_subgraph(const LabeledGraph& g, int v, int hops);

// New graph with the given edges removed. Every edge in `to_delete` must
// exist; a miss signals broken candidate-set bookkeeping upstream.
LabeledGraph delete_edges(const LabeledGraph& g, const std::vector<EdgeId>& to_delete);

// New graph with round(ratio * |E|) extra edges between uniformly sampled
// non-adjacent node pairs. Noise edges may land anywhere, including inside
// motifs.
LabeledGraph inject_noise_edges(const LabeledGraph& g, double ratio, Rng& rng);

// Symmetric GCN renormalization with self-loops: D^{-1/2} (A + I) D^{-1/2}.
Eigen::MatrixXd normalized_adjacency(const LabeledGraph& g);
Eigen::SparseMatrix<double> normalized_adjacency_sparse(const LabeledGraph& g);

std::string graph_to_json(const LabeledGraph& g);
LabeledGraph graph_from_json(const std::string& text);
LabeledGraph load_graph(const std::string& path);
void save_graph(const LabeledGraph& g, const std::string& path);

}  // namespace gcx
