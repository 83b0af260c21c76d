#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcx/game.hpp"
#include "gcx/rng.hpp"

namespace gcx {

double binomial(int n, int k);
double log_binomial(int n, int k);

// Per-size weights w(1..n) of a semivalue, normalized so that
// sum_j C(n-1, j-1) w(j) = n.
struct WeightFunction {
  int n = 0;
  std::vector<double> w;
  std::string name = "custom";

  double at(int j) const { return (j >= 1 && j <= n) ? w[static_cast<std::size_t>(j - 1)] : 0.0; }
  double normalization_error() const;
};

WeightFunction shapley_weights(int n);  // w(j) = n (j-1)! (n-j)! / n! = 1 / C(n-1, j-1)
WeightFunction banzhaf_weights(int n);  // w(j) = n / 2^(n-1)
WeightFunction normalized_random_weights(int n, Rng& rng);

enum class SemivalueMethod { ExactSemivalue, ExactShapley, ExactBanzhaf, ShapleyPermMC, BanzhafMC, BanzhafMSR };
std::string semivalue_method_name(SemivalueMethod method);

struct SemivalueResult {
  SemivalueMethod method = SemivalueMethod::ExactSemivalue;
  std::vector<double> values;  // per player index
  std::uint64_t samples_used = 0;
  std::uint64_t utility_calls = 0;
  std::uint64_t pruned_count = 0;
};

struct SamplePolicy {
  enum class SizeMode { UniformPowerset, FixedSize };

  int count = 1500;
  SizeMode size_mode = SizeMode::UniformPowerset;
  int size = 0;  // FixedSize only
  std::uint64_t seed = 0;
};

// Seeded coalition stream; a longer draw sequence extends a shorter one with
// the same policy, which keeps sample-count sweeps prefix-stable.
class CoalitionSampler {
 public:
  CoalitionSampler(int player_count, const SamplePolicy& policy);
  std::uint64_t next();                       // subset of all players
  std::uint64_t next_excluding(int player);   // subset of players \ {player}

 private:
  int n_;
  SamplePolicy::SizeMode mode_;
  int size_;
  std::uint64_t full_;
  Rng rng_;
};

// Full enumeration of the generic weighted semivalue. Refuses player counts
// above the cap: that is estimator territory.
SemivalueResult exact_semivalue(CoalitionGame& game, const WeightFunction& w,
                                const ThresholdPolicy& policy = {}, int enumeration_cap = 20);
SemivalueResult exact_shapley(CoalitionGame& game, const ThresholdPolicy& policy = {}, int enumeration_cap = 20);
SemivalueResult exact_banzhaf(CoalitionGame& game, const ThresholdPolicy& policy = {}, int enumeration_cap = 20);

// Mean marginal contribution over sampled permutations.
SemivalueResult shapley_perm_mc(CoalitionGame& game, int num_permutations,
                                const ThresholdPolicy& policy, std::uint64_t seed);

// Per-player Monte Carlo: S ~ Unif(2^{N\{i}}) (or fixed size), average of
// U(S u {i}) - U(S). A pruned S contributes 0 and skips the partner call.
SemivalueResult banzhaf_mc(CoalitionGame& game, const ThresholdPolicy& policy, const SamplePolicy& sample);

// Maximum-sample-reuse estimator: one utility per sampled coalition, reused
// for every player; value is mean over coalitions containing the player minus
// mean over the rest, 0 when either side is empty.
SemivalueResult banzhaf_msr(CoalitionGame& game, const ThresholdPolicy& policy, const SamplePolicy& sample);
SemivalueResult banzhaf_msr_from_samples(CoalitionGame& game, const std::vector<std::uint64_t>& coalitions,
                                         const ThresholdPolicy& policy = {});

// The k highest-value players, descending; ties broken by ascending index
// (player order is ascending canonical EdgeId in edge games).
std::vector<int> top_k(const SemivalueResult& result, int k);

// Lemma-style sample budgets in utility-call units for ranking all pairs
// separated by epsilon with failure probability at most delta.
std::uint64_t required_samples_mc(int n, double epsilon, double delta);   // ceil(4n/eps^2 * ln(2n/delta))
std::uint64_t required_samples_msr(int n, double epsilon, double delta);  // ceil(128/eps^2 * ln(5n/delta))

}  // namespace gcx
