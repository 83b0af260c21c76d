#include "gcx/semivalues.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gcx {

double log_binomial(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  if (c < 9.0e15) return std::round(c);  // exact integer range
  return std::exp(log_binomial(n, k));
}

double WeightFunction::normalization_error() const {
  double sum = 0.0;
  for (int j = 1; j <= n; ++j) sum += binomial(n - 1, j - 1) * at(j);
  return std::abs(sum - static_cast<double>(n));
}

WeightFunction shapley_weights(int n) {
  if (n < 1) throw std::invalid_argument("shapley_weights: n must be >= 1");
  WeightFunction wf;
  wf.n = n;
  wf.name = "shapley";
  wf.w.resize(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    const double c = binomial(n - 1, j - 1);
    wf.w[static_cast<std::size_t>(j - 1)] = std::isfinite(c) && c < 9.0e15 ? 1.0 / c : std::exp(-log_binomial(n - 1, j - 1));
  }
  return wf;
}

WeightFunction banzhaf_weights(int n) {
  if (n < 1) throw std::invalid_argument("banzhaf_weights: n must be >= 1");
  WeightFunction wf;
  wf.n = n;
  wf.name = "banzhaf";
  wf.w.assign(static_cast<std::size_t>(n), static_cast<double>(n) * std::exp2(-(n - 1)));
  return wf;
}

WeightFunction normalized_random_weights(int n, Rng& rng) {
  WeightFunction wf;
  wf.n = n;
  wf.name = "random";
  wf.w.resize(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double x = rng.uniform(0.05, 1.0);
    wf.w[static_cast<std::size_t>(j - 1)] = x;
    sum += binomial(n - 1, j - 1) * x;
  }
  for (double& x : wf.w) x *= static_cast<double>(n) / sum;
  return wf;
}

std::string semivalue_method_name(SemivalueMethod method) {
  switch (method) {
    case SemivalueMethod::ExactSemivalue: return "exact-semivalue";
    case SemivalueMethod::ExactShapley: return "exact-shapley";
    case SemivalueMethod::ExactBanzhaf: return "exact-banzhaf";
    case SemivalueMethod::ShapleyPermMC: return "shapley-perm-mc";
    case SemivalueMethod::BanzhafMC: return "banzhaf-mc";
    case SemivalueMethod::BanzhafMSR: return "banzhaf-msr";
  }
  throw std::logic_error("semivalue_method_name: bad method");
}

CoalitionSampler::CoalitionSampler(int player_count, const SamplePolicy& policy)
    : n_(player_count), mode_(policy.size_mode), size_(policy.size), rng_(policy.seed) {
  if (n_ < 1 || n_ > 64) throw std::invalid_argument("CoalitionSampler: player count outside [1,64]");
  full_ = n_ == 64 ? ~0ULL : ((1ULL << n_) - 1);
  if (mode_ == SamplePolicy::SizeMode::FixedSize && (size_ < 0 || size_ > n_))
    throw std::invalid_argument("CoalitionSampler: fixed size outside [0,n]");
}

std::uint64_t CoalitionSampler::next() {
  if (mode_ == SamplePolicy::SizeMode::UniformPowerset) return rng_.next_u64() & full_;
  std::uint64_t mask = 0;
  for (int idx : rng_.sample_without_replacement(n_, size_)) mask |= 1ULL << idx;
  return mask;
}

std::uint64_t CoalitionSampler::next_excluding(int player) {
  if (player < 0 || player >= n_) throw std::invalid_argument("next_excluding: bad player");
  if (mode_ == SamplePolicy::SizeMode::UniformPowerset) return rng_.next_u64() & full_ & ~(1ULL << player);
  if (size_ > n_ - 1) throw std::invalid_argument("next_excluding: fixed size exceeds n-1");
  std::uint64_t mask = 0;
  for (int idx : rng_.sample_without_replacement(n_ - 1, size_)) {
    const int shifted = idx >= player ? idx + 1 : idx;
    mask |= 1ULL << shifted;
  }
  return mask;
}

SemivalueResult exact_semivalue(CoalitionGame& game, const WeightFunction& w,
                                const ThresholdPolicy& policy, int enumeration_cap) {
  const int n = game.player_count();
  if (n > enumeration_cap)
    throw std::invalid_argument("exact_semivalue: " + std::to_string(n) + " players exceeds the enumeration cap");
  if (w.n != n) throw std::invalid_argument("exact_semivalue: weight function size mismatch");

  const std::uint64_t calls_before = game.utility_calls();
  SemivalueResult result;
  result.method = w.name == "shapley"   ? SemivalueMethod::ExactShapley
                  : w.name == "banzhaf" ? SemivalueMethod::ExactBanzhaf
                                        : SemivalueMethod::ExactSemivalue;
  result.values.assign(static_cast<std::size_t>(n), 0.0);

  // Cache the thresholded value of every coalition once, then form the
  // weighted marginals.
  const std::uint64_t full = game.full_coalition();
  std::vector<double> value(static_cast<std::size_t>(full) + 1);
  for (std::uint64_t s = 0; s <= full; ++s) {
    const ThresholdedValue tv = thresholded_utility(game, s, policy);
    value[s] = tv.pruned ? 0.0 : tv.value;
    if (tv.pruned) ++result.pruned_count;
  }
  for (int i = 0; i < n; ++i) {
    const std::uint64_t bit = 1ULL << i;
    double acc = 0.0;
    for (std::uint64_t s = 0; s <= full; ++s) {
      if (s & bit) continue;
      const int j = std::popcount(s) + 1;
      acc += w.at(j) / static_cast<double>(n) * (value[s | bit] - value[s]);
    }
    result.values[static_cast<std::size_t>(i)] = acc;
  }
  result.samples_used = (static_cast<std::uint64_t>(full) + 1);
  result.utility_calls = game.utility_calls() - calls_before;
  return result;
}

SemivalueResult exact_shapley(CoalitionGame& game, const ThresholdPolicy& policy, int enumeration_cap) {
  return exact_semivalue(game, shapley_weights(game.player_count()), policy, enumeration_cap);
}

SemivalueResult exact_banzhaf(CoalitionGame& game, const ThresholdPolicy& policy, int enumeration_cap) {
  return exact_semivalue(game, banzhaf_weights(game.player_count()), policy, enumeration_cap);
}

SemivalueResult shapley_perm_mc(CoalitionGame& game, int num_permutations,
                                const ThresholdPolicy& policy, std::uint64_t seed) {
  if (num_permutations < 1) throw std::invalid_argument("shapley_perm_mc: need at least one permutation");
  const int n = game.player_count();
  const std::uint64_t calls_before = game.utility_calls();

  SemivalueResult result;
  result.method = SemivalueMethod::ShapleyPermMC;
  result.values.assign(static_cast<std::size_t>(n), 0.0);

  Rng rng(seed);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < num_permutations; ++t) {
    rng.shuffle(perm);
    std::uint64_t mask = 0;
    ThresholdedValue prev = thresholded_utility(game, 0, policy);
    if (prev.pruned) ++result.pruned_count;
    double prev_value = prev.pruned ? 0.0 : prev.value;
    for (int i : perm) {
      mask |= 1ULL << i;
      const ThresholdedValue tv = thresholded_utility(game, mask, policy);
      if (tv.pruned) ++result.pruned_count;
      const double cur = tv.pruned ? 0.0 : tv.value;
      result.values[static_cast<std::size_t>(i)] += cur - prev_value;
      prev_value = cur;
    }
  }
  for (double& v : result.values) v /= static_cast<double>(num_permutations);
  result.samples_used = static_cast<std::uint64_t>(num_permutations);
  result.utility_calls = game.utility_calls() - calls_before;
  return result;
}

SemivalueResult banzhaf_mc(CoalitionGame& game, const ThresholdPolicy& policy, const SamplePolicy& sample) {
  if (sample.count < 1) throw std::invalid_argument("banzhaf_mc: sample count must be >= 1");
  const int n = game.player_count();
  const std::uint64_t calls_before = game.utility_calls();

  SemivalueResult result;
  result.method = SemivalueMethod::BanzhafMC;
  result.values.assign(static_cast<std::size_t>(n), 0.0);

  for (int i = 0; i < n; ++i) {
    SamplePolicy per_player = sample;
    per_player.seed = derive_seed(sample.seed, static_cast<std::uint64_t>(i));
    CoalitionSampler sampler(n, per_player);
    const std::uint64_t bit = 1ULL << i;
    double acc = 0.0;
    for (int t = 0; t < sample.count; ++t) {
      const std::uint64_t s = sampler.next_excluding(i);
      const ThresholdedValue without = thresholded_utility(game, s, policy);
      if (without.pruned) {
        ++result.pruned_count;  // sample contributes 0; partner evaluation saved
        continue;
      }
      const ThresholdedValue with = thresholded_utility(game, s | bit, policy);
      if (with.pruned) ++result.pruned_count;
      acc += (with.pruned ? 0.0 : with.value) - without.value;
    }
    result.values[static_cast<std::size_t>(i)] = acc / static_cast<double>(sample.count);
  }
  result.samples_used = static_cast<std::uint64_t>(sample.count) * static_cast<std::uint64_t>(n);
  result.utility_calls = game.utility_calls() - calls_before;
  return result;
}

namespace {

struct MsrAccumulator {
  explicit MsrAccumulator(int n) : sum_in(static_cast<std::size_t>(n), 0.0), count_in(static_cast<std::size_t>(n), 0) {}

  std::vector<double> sum_in;
  std::vector<std::uint64_t> count_in;
  double sum_all = 0.0;
  std::uint64_t count = 0;

  void add(std::uint64_t coalition, double value) {
    ++count;
    sum_all += value;
    std::uint64_t bits = coalition;
    while (bits) {
      const int i = std::countr_zero(bits);
      bits &= bits - 1;
      sum_in[static_cast<std::size_t>(i)] += value;
      ++count_in[static_cast<std::size_t>(i)];
    }
  }

  std::vector<double> values(int n) const {
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      const std::uint64_t in = count_in[static_cast<std::size_t>(i)];
      const std::uint64_t outc = count - in;
      if (in == 0 || outc == 0) continue;  // empty side: estimate stays 0
      out[static_cast<std::size_t>(i)] = sum_in[static_cast<std::size_t>(i)] / static_cast<double>(in) -
                                         (sum_all - sum_in[static_cast<std::size_t>(i)]) / static_cast<double>(outc);
    }
    return out;
  }
};

}  // namespace

SemivalueResult banzhaf_msr(CoalitionGame& game, const ThresholdPolicy& policy, const SamplePolicy& sample) {
  if (sample.count < 1) throw std::invalid_argument("banzhaf_msr: sample count must be >= 1");
  const int n = game.player_count();
  const std::uint64_t calls_before = game.utility_calls();

  SemivalueResult result;
  result.method = SemivalueMethod::BanzhafMSR;

  std::uint64_t prune_stop = 0;
  if (policy.mode == ThresholdMode::PruneRatio && policy.prune_stop_fraction > 0.0)
    prune_stop = static_cast<std::uint64_t>(std::ceil(policy.prune_stop_fraction * sample.count));

  CoalitionSampler sampler(n, sample);
  MsrAccumulator acc(n);
  for (int t = 0; t < sample.count; ++t) {
    if (prune_stop > 0 && result.pruned_count >= prune_stop) break;
    const std::uint64_t s = sampler.next();
    const ThresholdedValue tv = thresholded_utility(game, s, policy);
    if (tv.pruned) ++result.pruned_count;
    acc.add(s, tv.pruned ? 0.0 : tv.value);
  }
  result.values = acc.values(n);
  result.samples_used = acc.count;
  result.utility_calls = game.utility_calls() - calls_before;
  return result;
}

SemivalueResult banzhaf_msr_from_samples(CoalitionGame& game, const std::vector<std::uint64_t>& coalitions,
                                         const ThresholdPolicy& policy) {
  const int n = game.player_count();
  const std::uint64_t calls_before = game.utility_calls();
  SemivalueResult result;
  result.method = SemivalueMethod::BanzhafMSR;
  MsrAccumulator acc(n);
  for (std::uint64_t s : coalitions) {
    const ThresholdedValue tv = thresholded_utility(game, s, policy);
    if (tv.pruned) ++result.pruned_count;
    acc.add(s, tv.pruned ? 0.0 : tv.value);
  }
  result.values = acc.values(n);
  result.samples_used = coalitions.size();
  result.utility_calls = game.utility_calls() - calls_before;
  return result;
}

std::vector<int> top_k(const SemivalueResult& result, int k) {
  const int n = static_cast<int>(result.values.size());
  if (k < 0 || k > n) throw std::invalid_argument("top_k: k outside [0, player count]");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double va = result.values[static_cast<std::size_t>(a)];
    const double vb = result.values[static_cast<std::size_t>(b)];
    if (va != vb) return va > vb;
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

std::uint64_t required_samples_mc(int n, double epsilon, double delta) {
  if (n < 1 || epsilon <= 0.0 || delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("required_samples_mc: bad arguments");
  return static_cast<std::uint64_t>(std::ceil(4.0 * n / (epsilon * epsilon) * std::log(2.0 * n / delta)));
}

std::uint64_t required_samples_msr(int n, double epsilon, double delta) {
  if (n < 1 || epsilon <= 0.0 || delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("required_samples_msr: bad arguments");
  return static_cast<std::uint64_t>(std::ceil(128.0 / (epsilon * epsilon) * std::log(5.0 * n / delta)));
}

}  // namespace gcx
