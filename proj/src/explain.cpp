#include "gcx/explain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gcx {

std::string explain_method_name(ExplainMethod method) {
  switch (method) {
    case ExplainMethod::Random: return "random";
    case ExplainMethod::TopK: return "topk";
    case ExplainMethod::Greedy: return "greedy";
    case ExplainMethod::Shapley: return "shapley";
    case ExplainMethod::Banzhaf: return "banzhaf";
  }
  throw std::logic_error("explain_method_name: bad method");
}

ExplainMethod explain_method_from_name(const std::string& name) {
  if (name == "random") return ExplainMethod::Random;
  if (name == "topk") return ExplainMethod::TopK;
  if (name == "greedy") return ExplainMethod::Greedy;
  if (name == "shapley") return ExplainMethod::Shapley;
  if (name == "banzhaf") return ExplainMethod::Banzhaf;
  throw std::invalid_argument("unknown explain method: " + name);
}

namespace {

std::vector<int> greedy_select(EdgeGame& game, int k) {
  const int n = game.player_count();
  std::vector<int> chosen;
  std::uint64_t mask = 0;
  for (int round = 0; round < k; ++round) {
    int best = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int e = 0; e < n; ++e) {
      if (mask & (1ULL << e)) continue;
      const double value = game.utility(mask | (1ULL << e));
      if (value > best_value) {
        best_value = value;
        best = e;
      }
    }
    chosen.push_back(best);
    mask |= 1ULL << best;
  }
  return chosen;
}

std::vector<int> topk_select(EdgeGame& game, int k) {
  SemivalueResult single;
  single.values.resize(static_cast<std::size_t>(game.player_count()));
  for (int e = 0; e < game.player_count(); ++e)
    single.values[static_cast<std::size_t>(e)] = game.utility(1ULL << e);
  return top_k(single, k);
}

}  // namespace

Explanation explain(const LabeledGraph& g, const GcnModel& model, int node, const ExplainerConfig& cfg,
                    std::uint64_t seed) {
  if (cfg.budget < 1) throw std::invalid_argument("explain: budget must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  EdgeGame game(g, model, node, cfg.hops);
  const int n = game.player_count();
  const int k = std::min(cfg.budget, n);

  Explanation out;
  out.node = node;
  out.candidate_count = n;
  out.budget_clamped = k < cfg.budget;

  std::vector<int> selected;
  switch (cfg.method) {
    case ExplainMethod::Random: {
      Rng rng(derive_seed(seed, 0xa11));
      selected = rng.sample_without_replacement(n, k);
      std::sort(selected.begin(), selected.end());
      break;
    }
    case ExplainMethod::TopK:
      selected = topk_select(game, k);
      break;
    case ExplainMethod::Greedy:
      selected = greedy_select(game, k);
      break;
    case ExplainMethod::Shapley: {
      const SemivalueResult r = shapley_perm_mc(game, cfg.shapley_permutations, cfg.threshold, derive_seed(seed, 0x51a));
      out.pruned_count = r.pruned_count;
      selected = top_k(r, k);
      break;
    }
    case ExplainMethod::Banzhaf: {
      SamplePolicy sample = cfg.sample;
      sample.seed = derive_seed(seed, 0xb42);
      if (sample.size_mode == SamplePolicy::SizeMode::FixedSize) sample.size = std::min(sample.size, n);
      const SemivalueResult r = banzhaf_msr(game, cfg.threshold, sample);
      out.pruned_count = r.pruned_count;
      selected = top_k(r, k);
      break;
    }
  }

  std::uint64_t mask = 0;
  for (int e : selected) {
    mask |= 1ULL << e;
    out.edges.push_back(game.players()[static_cast<std::size_t>(e)]);
  }
  out.flipped = game.predicted_class_after(mask) != game.original_class();
  out.utility_calls = game.utility_calls();
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double fidelity_mean(const std::vector<Explanation>& explanations) {
  if (explanations.empty()) throw std::invalid_argument("fidelity_mean: empty explanation set");
  double same = 0.0;
  for (const Explanation& e : explanations)
    if (!e.flipped) same += 1.0;
  return same / static_cast<double>(explanations.size());
}

std::pair<double, double> fidelity(const std::vector<std::vector<Explanation>>& repeats) {
  if (repeats.empty()) throw std::invalid_argument("fidelity: no repeats");
  std::vector<double> per_repeat;
  for (const auto& r : repeats) per_repeat.push_back(fidelity_mean(r));
  double mean = 0.0;
  for (double f : per_repeat) mean += f;
  mean /= static_cast<double>(per_repeat.size());
  double var = 0.0;
  for (double f : per_repeat) var += (f - mean) * (f - mean);
  const double sd = per_repeat.size() > 1 ? std::sqrt(var / static_cast<double>(per_repeat.size() - 1)) : 0.0;
  return {mean, sd};
}

}  // namespace gcx
