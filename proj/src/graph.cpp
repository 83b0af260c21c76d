#include "gcx/graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace gcx {

namespace {

std::vector<std::vector<int>> build_neighbors(int n, const std::vector<EdgeId>& edges) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const EdgeId& e : edges) {
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  return adj;
}

}  // namespace

LabeledGraph::LabeledGraph(int node_count, std::vector<EdgeId> edges, Eigen::MatrixXd features,
                           std::vector<int> labels, std::vector<int> motif_nodes)
    : node_count_(node_count),
      edges_(std::move(edges)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      motif_nodes_(std::move(motif_nodes)) {
  if (node_count_ < 0) throw std::invalid_argument("LabeledGraph: negative node count");
  std::sort(edges_.begin(), edges_.end());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const EdgeId& e = edges_[i];
    if (e.u == e.v) throw std::invalid_argument("LabeledGraph: self-loop");
    if (e.u < 0 || e.v >= node_count_) throw std::invalid_argument("LabeledGraph: edge endpoint out of range");
    if (i > 0 && edges_[i - 1] == e) throw std::invalid_argument("LabeledGraph: duplicate edge");
  }
  if (features_.rows() != node_count_) throw std::invalid_argument("LabeledGraph: feature row count != node count");
  if (static_cast<int>(labels_.size()) != node_count_) throw std::invalid_argument("LabeledGraph: labels length != node count");
  std::sort(motif_nodes_.begin(), motif_nodes_.end());
  for (int m : motif_nodes_) {
    if (m < 0 || m >= node_count_) throw std::invalid_argument("LabeledGraph: motif node out of range");
  }
  neighbors_ = build_neighbors(node_count_, edges_);
}

int LabeledGraph::class_count() const {
  int c = 0;
  for (int l : labels_) c = std::max(c, l + 1);
  return c;
}

bool LabeledGraph::has_edge(int u, int v) const {
  const EdgeId e(u, v);
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

std::pair<std::vector<int>, std::vector<EdgeId>> khop_subgraph(const LabeledGraph& g, int v, int hops) {
  if (v < 0 || v >= g.node_count()) throw std::invalid_argument("khop_subgraph: node out of range");
  if (hops < 0) throw std::invalid_argument("khop_subgraph: negative hop count");

  std::vector<int> dist(static_cast<std::size_t>(g.node_count()), -1);
  std::queue<int> q;
  dist[static_cast<std::size_t>(v)] = 0;
  q.push(v);
  std::vector<int> nodes{v};
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    if (dist[static_cast<std::size_t>(u)] == hops) continue;
    for (int w : g.neighbors()[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(w)] < 0) {
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
        nodes.push_back(w);
        q.push(w);
      }
    }
  }
  std::sort(nodes.begin(), nodes.end());

  std::vector<EdgeId> induced;
  for (const EdgeId& e : g.edges()) {
    if (dist[static_cast<std::size_t>(e.u)] >= 0 && dist[static_cast<std::size_t>(e.v)] >= 0) induced.push_back(e);
  }
  return {nodes, induced};  // g.edges() is sorted, so induced is too
}

LabeledGraph delete_edges(const LabeledGraph& g, const std::vector<EdgeId>& to_delete) {
  std::set<EdgeId> del(to_delete.begin(), to_delete.end());
  for (const EdgeId& e : del) {
    if (!g.has_edge(e.u, e.v)) {
      std::ostringstream oss;
      oss << "delete_edges: edge (" << e.u << "," << e.v << ") not present";
      throw std::invalid_argument(oss.str());
    }
  }
  std::vector<EdgeId> kept;
  kept.reserve(g.edges().size() - del.size());
  for (const EdgeId& e : g.edges()) {
    if (del.find(e) == del.end()) kept.push_back(e);
  }
  return LabeledGraph(g.node_count(), std::move(kept), g.features(), g.labels(), g.motif_nodes());
}

LabeledGraph inject_noise_edges(const LabeledGraph& g, double ratio, Rng& rng) {
  if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("inject_noise_edges: ratio outside [0,1]");
  const int want = static_cast<int>(std::llround(ratio * static_cast<double>(g.edge_count())));
  if (want == 0) return g;

  std::unordered_set<EdgeId, EdgeIdHash> present(g.edges().begin(), g.edges().end());
  std::vector<EdgeId> added;
  const long long attempts_cap = 200LL * (want + 1);
  long long attempts = 0;
  const auto n = static_cast<std::uint64_t>(g.node_count());
  while (static_cast<int>(added.size()) < want && attempts < attempts_cap) {
    ++attempts;
    const int a = static_cast<int>(rng.uniform_below(n));
    const int b = static_cast<int>(rng.uniform_below(n));
    if (a == b) continue;
    const EdgeId e(a, b);
    if (present.count(e)) continue;
    present.insert(e);
    added.push_back(e);
  }
  if (static_cast<int>(added.size()) < want) {
    std::ostringstream oss;
    oss << "inject_noise_edges: placed " << added.size() << " of " << want
        << " edges before the attempt cap; graph too dense";
    throw std::runtime_error(oss.str());
  }
  std::vector<EdgeId> edges = g.edges();
  edges.insert(edges.end(), added.begin(), added.end());
  return LabeledGraph(g.node_count(), std::move(edges), g.features(), g.labels(), g.motif_nodes());
}

Eigen::MatrixXd normalized_adjacency(const LabeledGraph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const EdgeId& e : g.edges()) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  for (int i = 0; i < n; ++i) a(i, i) = 1.0;
  Eigen::VectorXd deg = a.rowwise().sum();
  Eigen::VectorXd inv_sqrt = deg.array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

Eigen::SparseMatrix<double> normalized_adjacency_sparse(const LabeledGraph& g) {
  const int n = g.node_count();
  std::vector<double> deg(static_cast<std::size_t>(n), 1.0);  // self-loop
  for (const EdgeId& e : g.edges()) {
    deg[static_cast<std::size_t>(e.u)] += 1.0;
    deg[static_cast<std::size_t>(e.v)] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.edges().size() * 2 + static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0 / deg[static_cast<std::size_t>(i)]);
  for (const EdgeId& e : g.edges()) {
    const double w = 1.0 / std::sqrt(deg[static_cast<std::size_t>(e.u)] * deg[static_cast<std::size_t>(e.v)]);
    trip.emplace_back(e.u, e.v, w);
    trip.emplace_back(e.v, e.u, w);
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

std::string graph_to_json(const LabeledGraph& g) {
  nlohmann::ordered_json j;
  j["n"] = g.node_count();
  auto edges = nlohmann::ordered_json::array();
  for (const EdgeId& e : g.edges()) edges.push_back({e.u, e.v});
  j["edges"] = std::move(edges);
  auto features = nlohmann::ordered_json::array();
  for (int i = 0; i < g.node_count(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (int c = 0; c < g.feature_dim(); ++c) row.push_back(g.features()(i, c));
    features.push_back(std::move(row));
  }
  j["features"] = std::move(features);
  j["labels"] = g.labels();
  j["motif_nodes"] = g.motif_nodes();
  return j.dump();
}

LabeledGraph graph_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const int n = j.at("n").get<int>();
  std::vector<EdgeId> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  const auto& feat = j.at("features");
  const int d = feat.empty() ? 0 : static_cast<int>(feat[0].size());
  Eigen::MatrixXd features(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) features(i, c) = feat[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  std::vector<int> labels = j.at("labels").get<std::vector<int>>();
  std::vector<int> motif = j.value("motif_nodes", std::vector<int>{});
  return LabeledGraph(n, std::move(edges), std::move(features), std::move(labels), std::move(motif));
}

LabeledGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_graph: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

void save_graph(const LabeledGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_graph: cannot open " + path);
  out << graph_to_json(g) << "\n";
}

}  // namespace gcx
