#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcx/game.hpp"
#include "gcx/semivalues.hpp"

namespace gcx {

enum class ExplainMethod { Random, TopK, Greedy, Shapley, Banzhaf };

std::string explain_method_name(ExplainMethod method);
ExplainMethod explain_method_from_name(const std::string& name);

struct ExplainerConfig {
  ExplainMethod method = ExplainMethod::Banzhaf;
  int budget = 3;
  ThresholdPolicy threshold;        // applied by the semivalue methods
  SamplePolicy sample;              // Banzhaf coalition sampling
  int shapley_permutations = 50;
  int hops = -1;                    // -1: model layer count
};

struct Explanation {
  int node = 0;
  std::vector<EdgeId> edges;
  bool flipped = false;
  double wall_time_s = 0.0;
  std::uint64_t utility_calls = 0;
  std::uint64_t pruned_count = 0;
  int candidate_count = 0;
  bool budget_clamped = false;  // budget exceeded the candidate count and was clamped
};

// Select `budget` candidate edges around the node with the configured method
// and report whether deleting them flips the prediction. Deterministic given
// the seed. Throws GameError when the node has no candidate edges.
Explanation explain(const LabeledGraph& g, const GcnModel& model, int node, const ExplainerConfig& cfg,
                    std::uint64_t seed);

// Proportion of nodes whose prediction did NOT flip (lower is better).
double fidelity_mean(const std::vector<Explanation>& explanations);

// Mean and sample standard deviation of fidelity across repeated node samples.
std::pair<double, double> fidelity(const std::vector<std::vector<Explanation>>& repeats);

}  // namespace gcx
