#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcx/graph.hpp"
#include "gcx/rng.hpp"

namespace gcx {

enum class DatasetKind { BaShapes, TreeCycles, TreeGrid };

std::string dataset_kind_name(DatasetKind kind);
DatasetKind dataset_kind_from_name(const std::string& name);

// Parameters for the three synthetic benchmarks. Defaults reproduce the
// standard configurations: BA(300) + 80 five-node houses, or a 511-node
// balanced binary tree + 60 six-node cycles / 80 nine-node 3x3 grids.
struct DatasetSpec {
  DatasetKind kind = DatasetKind::TreeCycles;
  int base_size = 0;       // 0: kind default (300 for BaShapes, 511 otherwise)
  int motif_count = 0;     // 0: kind default (80 / 60 / 80)
  double extra_edge_fraction = 0.1;  // extra edges = round(fraction * total nodes)
  int feature_dim = 10;
  std::uint64_t seed = 0;

  int resolved_base_size() const;
  int resolved_motif_count() const;
  int motif_size() const;   // 5 / 6 / 9
  int class_count() const;  // 4 / 2 / 2
};

// Barabasi-Albert preferential attachment: seed clique on m nodes, then each
// new node attaches to m distinct existing nodes with probability
// proportional to degree. Edge count is C(m,2) + (n-m)*m.
std::vector<EdgeId> barabasi_albert(int n, int m, Rng& rng);

// Balanced binary tree edges over node ids 0..n-1 (children of i are 2i+1,
// 2i+2).
std::vector<EdgeId> balanced_binary_tree(int n);

LabeledGraph generate(const DatasetSpec& spec);

}  // namespace gcx
