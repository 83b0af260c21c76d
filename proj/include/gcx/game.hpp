#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "gcx/gcn.hpp"
#include "gcx/graph.hpp"

namespace gcx {

enum class ThresholdMode { None, Hinge, PruneRatio };

std::string threshold_mode_name(ThresholdMode mode);
ThresholdMode threshold_mode_from_name(const std::string& name);

// Utility-transform policy. `b` is in ratio-of-base-value units by default so
// one setting works across nodes with different confidence; `absolute` flips
// it to raw utility units (the constant-B form used by the robustness
// analysis).
struct ThresholdPolicy {
  ThresholdMode mode = ThresholdMode::None;
  double b = 0.0;
  bool absolute = false;
  // PruneRatio only: estimators stop drawing new coalitions once the pruned
  // count reaches this fraction of the sample budget. 0 disables the stop.
  double prune_stop_fraction = 0.25;
};

// Cooperative game over players 0..n-1; coalitions are bitmasks over the
// ordered player sequence (n <= 64).
class CoalitionGame {
 public:
  explicit CoalitionGame(int player_count);
  virtual ~CoalitionGame() = default;

  CoalitionGame(const CoalitionGame& other)
      : player_count_(other.player_count_), full_(other.full_), calls_(other.calls_.load()) {}
  CoalitionGame& operator=(const CoalitionGame& other) {
    player_count_ = other.player_count_;
    full_ = other.full_;
    calls_.store(other.calls_.load());
    return *this;
  }

  int player_count() const { return player_count_; }
  std::uint64_t full_coalition() const { return full_; }

  // Raw utility U(S). Implementations count one call per underlying model
  // evaluation, so memoized repeats are free.
  double utility(std::uint64_t coalition);

  // Reference value for ratio-scaled thresholds (1.0 when not meaningful).
  virtual double base_value() const { return 1.0; }

  std::uint64_t utility_calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_utility_calls() { calls_.store(0, std::memory_order_relaxed); }

 protected:
  virtual double eval(std::uint64_t coalition) = 0;
  void record_call() { calls_.fetch_add(1, std::memory_order_relaxed); }
  void set_player_count(int player_count);

 private:
  int player_count_;
  std::uint64_t full_;
  std::atomic<std::uint64_t> calls_{0};
};

struct ThresholdedValue {
  double value = 0.0;  // transformed utility; 0 is what pruned coalitions contribute
  bool pruned = false;
};

ThresholdedValue thresholded_utility(CoalitionGame& game, std::uint64_t coalition, const ThresholdPolicy& policy);

class GameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The explanation game for one node: players are the edges of the hops-hop
// induced subgraph around the target, utility is the drop of the originally
// predicted class probability when a coalition of edges is deleted.
//
// Utilities are evaluated on a locally extracted context subgraph of radius
// max(hops, L) + 1, which reproduces the full-graph output of an L-layer GCN
// for the target node while keeping each evaluation small. Evaluations are
// memoized on the coalition bitmask.
class EdgeGame : public CoalitionGame {
 public:
  static constexpr int kMaxPlayers = 64;

  // hops < 0 selects the model layer count.
  EdgeGame(const LabeledGraph& g, const GcnModel& model, int target, int hops = -1);

  const std::vector<EdgeId>& players() const { return players_; }
  int target() const { return target_; }
  int hops() const { return hops_; }
  int original_class() const { return original_class_; }
  double base_prob() const { return base_prob_; }
  double base_value() const override { return base_prob_; }

  std::uint64_t coalition_of(const std::vector<EdgeId>& edges) const;
  std::vector<EdgeId> edges_of(std::uint64_t coalition) const;

  // Predicted class of the target after deleting the coalition; not memoized
  // and not counted as a utility call.
  int predicted_class_after(std::uint64_t deleted) const;

 protected:
  double eval(std::uint64_t coalition) override;

 private:
  double class_prob_after(std::uint64_t deleted) const;
  Eigen::MatrixXd local_probs(std::uint64_t deleted) const;

  const GcnModel* model_;
  int target_ = 0;
  int hops_ = 0;
  int local_target_ = 0;
  int local_n_ = 0;
  int original_class_ = 0;
  double base_prob_ = 0.0;
  std::vector<EdgeId> players_;
  std::vector<std::pair<int, int>> player_edges_;  // local endpoints, aligned with players_
  std::vector<std::pair<int, int>> fixed_edges_;   // context edges that are never deleted
  Eigen::MatrixXd local_x_;
  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, double> memo_prob_;  // coalition -> prob of original class
};

}  // namespace gcx
