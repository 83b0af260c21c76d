#include "gcx/datasets.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace gcx {

std::string dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::BaShapes: return "ba-shapes";
    case DatasetKind::TreeCycles: return "tree-cycles";
    case DatasetKind::TreeGrid: return "tree-grid";
  }
  throw std::logic_error("dataset_kind_name: bad kind");
}

DatasetKind dataset_kind_from_name(const std::string& name) {
  if (name == "ba-shapes") return DatasetKind::BaShapes;
  if (name == "tree-cycles") return DatasetKind::TreeCycles;
  if (name == "tree-grid") return DatasetKind::TreeGrid;
  throw std::invalid_argument("unknown dataset kind: " + name);
}

int DatasetSpec::resolved_base_size() const {
  if (base_size > 0) return base_size;
  return kind == DatasetKind::BaShapes ? 300 : 511;
}

int DatasetSpec::resolved_motif_count() const {
  if (motif_count > 0) return motif_count;
  switch (kind) {
    case DatasetKind::BaShapes: return 80;
    case DatasetKind::TreeCycles: return 60;
    case DatasetKind::TreeGrid: return 80;
  }
  return 0;
}

int DatasetSpec::motif_size() const {
  switch (kind) {
    case DatasetKind::BaShapes: return 5;
    case DatasetKind::TreeCycles: return 6;
    case DatasetKind::TreeGrid: return 9;
  }
  return 0;
}

int DatasetSpec::class_count() const { return kind == DatasetKind::BaShapes ? 4 : 2; }

std::vector<EdgeId> barabasi_albert(int n, int m, Rng& rng) {
  if (m < 1 || m >= n) throw std::invalid_argument("barabasi_albert: need 1 <= m < n");
  std::vector<EdgeId> edges;
  std::vector<int> endpoint_pool;  // one entry per edge endpoint: sampling from it is degree-proportional
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      edges.emplace_back(i, j);
      endpoint_pool.push_back(i);
      endpoint_pool.push_back(j);
    }
  for (int t = m; t < n; ++t) {
    std::unordered_set<int> targets;
    while (static_cast<int>(targets.size()) < m) {
      int target;
      if (endpoint_pool.empty()) {
        target = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(t)));
      } else {
        target = endpoint_pool[rng.uniform_below(endpoint_pool.size())];
      }
      targets.insert(target);
    }
    for (int target : targets) {
      edges.emplace_back(t, target);
      endpoint_pool.push_back(t);
      endpoint_pool.push_back(target);
    }
  }
  return edges;
}

std::vector<EdgeId> balanced_binary_tree(int n) {
  std::vector<EdgeId> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(i, (i - 1) / 2);
  return edges;
}

namespace {

struct Motif {
  std::vector<EdgeId> edges;   // local node ids 0..size-1
  std::vector<int> labels;     // per local node
};

Motif house_motif() {
  // 0 = top, 1/2 = middle, 3/4 = bottom: roof on the square 1-3-4-2.
  Motif m;
  m.edges = {EdgeId(0, 1), EdgeId(0, 2), EdgeId(1, 2), EdgeId(1, 3), EdgeId(2, 4), EdgeId(3, 4)};
  m.labels = {1, 2, 2, 3, 3};
  return m;
}

Motif cycle_motif(int size) {
  Motif m;
  for (int i = 0; i < size; ++i) m.edges.emplace_back(i, (i + 1) % size);
  m.labels.assign(static_cast<std::size_t>(size), 1);
  return m;
}

Motif grid_motif() {
  Motif m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const int id = 3 * r + c;
      if (c + 1 < 3) m.edges.emplace_back(id, id + 1);
      if (r + 1 < 3) m.edges.emplace_back(id, id + 3);
    }
  m.labels.assign(9, 1);
  return m;
}

}  // namespace

LabeledGraph generate(const DatasetSpec& spec) {
  if (spec.resolved_base_size() < 1) throw std::invalid_argument("generate: base_size must be >= 1");
  if (spec.extra_edge_fraction < 0.0) throw std::invalid_argument("generate: negative extra_edge_fraction");
  Rng rng(spec.seed);

  const int base_n = spec.resolved_base_size();
  std::vector<EdgeId> edges;
  if (spec.kind == DatasetKind::BaShapes) {
    edges = barabasi_albert(base_n, 5, rng);
  } else {
    edges = balanced_binary_tree(base_n);
  }

  const Motif motif = spec.kind == DatasetKind::BaShapes ? house_motif()
                      : spec.kind == DatasetKind::TreeCycles ? cycle_motif(6)
                                                             : grid_motif();
  const int motifs = spec.resolved_motif_count();
  const int msize = spec.motif_size();
  const int total_n = base_n + motifs * msize;

  std::vector<int> labels(static_cast<std::size_t>(total_n), 0);
  std::vector<int> motif_nodes;
  for (int k = 0; k < motifs; ++k) {
    const int offset = base_n + k * msize;
    for (const EdgeId& e : motif.edges) edges.emplace_back(offset + e.u, offset + e.v);
    for (int i = 0; i < msize; ++i) {
      labels[static_cast<std::size_t>(offset + i)] = motif.labels[static_cast<std::size_t>(i)];
      motif_nodes.push_back(offset + i);
    }
    const int anchor = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(base_n)));
    const int port = offset + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(msize)));
    edges.emplace_back(anchor, port);
  }

  const int extra = static_cast<int>(std::llround(spec.extra_edge_fraction * static_cast<double>(total_n)));
  if (extra > 0) {
    std::unordered_set<EdgeId, EdgeIdHash> present(edges.begin(), edges.end());
    int placed = 0;
    long long attempts = 0;
    const long long cap = 200LL * (extra + 1);
    while (placed < extra && attempts < cap) {
      ++attempts;
      const int a = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(total_n)));
      const int b = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(total_n)));
      if (a == b) continue;
      const EdgeId e(a, b);
      if (present.count(e)) continue;
      present.insert(e);
      edges.push_back(e);
      ++placed;
    }
    if (placed < extra) throw std::runtime_error("generate: could not place the requested extra edges");
  }

  Eigen::MatrixXd features = Eigen::MatrixXd::Ones(total_n, spec.feature_dim);
  return LabeledGraph(total_n, std::move(edges), std::move(features), std::move(labels), std::move(motif_nodes));
}

}  // namespace gcx
