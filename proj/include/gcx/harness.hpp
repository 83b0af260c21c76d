#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcx/datasets.hpp"
#include "gcx/explain.hpp"
#include "gcx/gcn.hpp"
#include "gcx/robustness.hpp"

namespace gcx {

struct MethodSpec {
  ExplainMethod method = ExplainMethod::Banzhaf;
  ThresholdPolicy threshold;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<int> budgets{3};
  std::vector<MethodSpec> methods;  // empty: Random, TopK, Greedy, Shapley, Banzhaf b in {0, 0.01, 0.05}
  double node_sample_fraction = 0.5;
  int repeats = 3;
  double noise_ratio = 0.0;
  std::uint64_t seed = 0;
  int shapley_permutations = 50;
  int coalition_count = 1500;
  int coalition_size = 0;          // 0: equal to the budget
  int hops = -1;                   // -1: model layer count
  std::vector<int> hidden_dims;    // empty: {20,20} for BA-SHAPES, {20} otherwise
  TrainConfig train;               // train.seed == 0 derives one from `seed`
  int threads = 1;
};

struct ExperimentRecord {
  std::string dataset;
  std::string method;
  int budget = 0;
  std::string threshold_mode;
  double threshold_b = 0.0;
  int coalition_count = 0;
  int coalition_size = 0;
  double fidelity_mean = 0.0;
  double fidelity_sd = 0.0;
  double wall_time_s = 0.0;  // measured; reported in the JSON mirror, not the CSV
  std::uint64_t utility_calls = 0;
  std::uint64_t pruned_count = 0;
  int nodes_evaluated = 0;
  int nodes_skipped = 0;
  std::uint64_t seed = 0;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  TrainReport train_report;
  int total_skipped = 0;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Fidelity-vs-parameter series: the coalition count sweep and the coalition
// size sweep, against one trained model.
ExperimentResult run_coalition_variation(const ExperimentConfig& cfg, const std::vector<int>& counts,
                                         const std::vector<int>& sizes);

struct SampleComplexityConfig {
  std::vector<int> n_values{8};
  double epsilon = 0.2;
  double delta = 0.1;
  int k = 3;
  int trials = 200;
  std::uint64_t seed = 0;
};

struct SampleComplexityRow {
  int n = 0;
  int k = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  int trials = 0;
  std::uint64_t mc_budget_calls = 0;
  std::uint64_t msr_budget_calls = 0;
  double mc_failure_rate = 0.0;
  double msr_failure_rate = 0.0;
  double mc_mean_calls = 0.0;   // measured utility calls per trial
  double msr_mean_calls = 0.0;
};

// Top-k identification failure rates at the lemma-prescribed budgets, on
// constructed games whose exact rank gap at k exceeds epsilon (verified by
// enumeration).
std::vector<SampleComplexityRow> run_sample_complexity_study(const SampleComplexityConfig& cfg);

// Constructed game with utilities in [0,1] whose exact Banzhaf gap between
// ranks k and k+1 exceeds `epsilon`; the exact top-k set is returned through
// `top_out`.
TabulatedGame make_rank_gap_game(int n, int k, double epsilon, std::uint64_t seed, std::vector<int>* top_out);

std::string records_to_csv(const std::vector<ExperimentRecord>& records);
std::string sample_complexity_to_csv(const std::vector<SampleComplexityRow>& rows);
void write_text_atomic(const std::string& path, const std::string& text);
std::string experiment_result_to_json(const ExperimentResult& result);

ExperimentConfig experiment_config_from_json(const std::string& text);

}  // namespace gcx
