#include "gcx/game.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace gcx {

std::string threshold_mode_name(ThresholdMode mode) {
  switch (mode) {
    case ThresholdMode::None: return "none";
    case ThresholdMode::Hinge: return "hinge";
    case ThresholdMode::PruneRatio: return "prune";
  }
  throw std::logic_error("threshold_mode_name: bad mode");
}

ThresholdMode threshold_mode_from_name(const std::string& name) {
  if (name == "none") return ThresholdMode::None;
  if (name == "hinge") return ThresholdMode::Hinge;
  if (name == "prune") return ThresholdMode::PruneRatio;
  throw std::invalid_argument("unknown threshold mode: " + name);
}

CoalitionGame::CoalitionGame(int player_count) { set_player_count(player_count); }

void CoalitionGame::set_player_count(int player_count) {
  if (player_count < 1 || player_count > 64) throw std::invalid_argument("CoalitionGame: player count outside [1,64]");
  player_count_ = player_count;
  full_ = player_count == 64 ? ~0ULL : ((1ULL << player_count) - 1);
}

double CoalitionGame::utility(std::uint64_t coalition) {
  if (coalition & ~full_) throw std::invalid_argument("utility: coalition contains non-players");
  return eval(coalition);
}

ThresholdedValue thresholded_utility(CoalitionGame& game, std::uint64_t coalition, const ThresholdPolicy& policy) {
  const double u = game.utility(coalition);
  switch (policy.mode) {
    case ThresholdMode::None:
      return {u, false};
    case ThresholdMode::Hinge: {
      const double cut = policy.absolute ? policy.b : policy.b * game.base_value();
      return {std::max(u - cut, 0.0), false};
    }
    case ThresholdMode::PruneRatio: {
      const double cut = policy.absolute ? policy.b : policy.b * game.base_value();
      if (u >= cut) return {u, false};
      return {0.0, true};
    }
  }
  throw std::logic_error("thresholded_utility: bad mode");
}

EdgeGame::EdgeGame(const LabeledGraph& g, const GcnModel& model, int target, int hops)
    : CoalitionGame(1), model_(&model), target_(target) {
  if (target < 0 || target >= g.node_count()) throw std::invalid_argument("EdgeGame: target out of range");
  const int layers = model.layer_count();
  hops_ = hops < 0 ? layers : hops;

  auto [cand_nodes, cand_edges] = khop_subgraph(g, target_, hops_);
  if (cand_edges.empty()) throw GameError("EdgeGame: target has no candidate edges");
  if (static_cast<int>(cand_edges.size()) > kMaxPlayers)
    throw GameError("EdgeGame: candidate set exceeds " + std::to_string(kMaxPlayers) + " edges");
  players_ = std::move(cand_edges);
  set_player_count(static_cast<int>(players_.size()));

  const int context_radius = std::max(hops_, layers) + 1;
  auto [ctx_nodes, ctx_edges] = khop_subgraph(g, target_, context_radius);
  local_n_ = static_cast<int>(ctx_nodes.size());
  std::unordered_map<int, int> local_id;
  local_id.reserve(ctx_nodes.size());
  for (int i = 0; i < local_n_; ++i) local_id[ctx_nodes[static_cast<std::size_t>(i)]] = i;
  local_target_ = local_id.at(target_);

  local_x_.resize(local_n_, g.feature_dim());
  for (int i = 0; i < local_n_; ++i) local_x_.row(i) = g.features().row(ctx_nodes[static_cast<std::size_t>(i)]);

  std::unordered_set<EdgeId, EdgeIdHash> player_set(players_.begin(), players_.end());
  for (const EdgeId& e : players_) player_edges_.emplace_back(local_id.at(e.u), local_id.at(e.v));
  for (const EdgeId& e : ctx_edges) {
    if (!player_set.count(e)) fixed_edges_.emplace_back(local_id.at(e.u), local_id.at(e.v));
  }

  const Eigen::MatrixXd probs = local_probs(0);
  original_class_ = argmax_row(probs, local_target_);
  base_prob_ = probs(local_target_, original_class_);
  record_call();
  memo_prob_[0] = base_prob_;
}

Eigen::MatrixXd EdgeGame::local_probs(std::uint64_t deleted) const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(local_n_, local_n_);
  for (const auto& [u, v] : fixed_edges_) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  for (std::size_t p = 0; p < player_edges_.size(); ++p) {
    if (deleted & (1ULL << p)) continue;
    const auto& [u, v] = player_edges_[p];
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  for (int i = 0; i < local_n_; ++i) a(i, i) = 1.0;
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  a = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
  return forward_dense(*model_, a, local_x_);
}

double EdgeGame::class_prob_after(std::uint64_t deleted) const {
  return local_probs(deleted)(local_target_, original_class_);
}

int EdgeGame::predicted_class_after(std::uint64_t deleted) const {
  const Eigen::MatrixXd probs = local_probs(deleted);
  return argmax_row(probs, local_target_);
}

double EdgeGame::eval(std::uint64_t coalition) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = memo_prob_.find(coalition);
  if (it == memo_prob_.end()) {
    const double p = class_prob_after(coalition);
    record_call();
    it = memo_prob_.emplace(coalition, p).first;
  }
  return base_prob_ - it->second;
}

std::uint64_t EdgeGame::coalition_of(const std::vector<EdgeId>& edges) const {
  std::uint64_t mask = 0;
  for (const EdgeId& e : edges) {
    const auto it = std::lower_bound(players_.begin(), players_.end(), e);
    if (it == players_.end() || !(*it == e)) throw std::invalid_argument("coalition_of: edge is not a player");
    mask |= 1ULL << static_cast<std::uint64_t>(it - players_.begin());
  }
  return mask;
}

std::vector<EdgeId> EdgeGame::edges_of(std::uint64_t coalition) const {
  if (coalition & ~full_coalition()) throw std::invalid_argument("edges_of: coalition contains non-players");
  std::vector<EdgeId> out;
  for (std::size_t p = 0; p < players_.size(); ++p) {
    if (coalition & (1ULL << p)) out.push_back(players_[p]);
  }
  return out;
}

}  // namespace gcx
