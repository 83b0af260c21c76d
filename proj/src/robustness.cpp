#include "gcx/robustness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gcx {

TabulatedGame::TabulatedGame(int player_count, std::vector<double> table)
    : CoalitionGame(player_count), table_(std::move(table)) {
  if (player_count > 26) throw std::invalid_argument("TabulatedGame: table would be too large");
  const std::size_t want = std::size_t{1} << player_count;
  if (table_.size() != want) throw std::invalid_argument("TabulatedGame: table size must be 2^n");
}

TabulatedGame TabulatedGame::additive(const std::vector<double>& per_player) {
  const int n = static_cast<int>(per_player.size());
  std::vector<double> table(std::size_t{1} << n, 0.0);
  for (std::size_t s = 0; s < table.size(); ++s) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (s & (std::size_t{1} << i)) sum += per_player[static_cast<std::size_t>(i)];
    table[s] = sum;
  }
  return TabulatedGame(n, std::move(table));
}

TabulatedGame TabulatedGame::random_uniform(int player_count, Rng& rng, double lo, double hi) {
  std::vector<double> table(std::size_t{1} << player_count);
  for (double& v : table) v = rng.uniform(lo, hi);
  table[0] = 0.0;  // explanation games have U(empty) = 0
  return TabulatedGame(player_count, std::move(table));
}

namespace {

void check_pair(const TabulatedGame& game, int i, int j) {
  const int n = game.player_count();
  if (i == j || i < 0 || j < 0 || i >= n || j >= n)
    throw std::invalid_argument("player pair out of range or equal");
}

// Player indices other than i and j, used to enumerate spectator subsets.
std::vector<int> spectators(int n, int i, int j) {
  std::vector<int> out;
  for (int p = 0; p < n; ++p)
    if (p != i && p != j) out.push_back(p);
  return out;
}

std::uint64_t expand_mask(std::uint64_t compact, const std::vector<int>& spectator_ids) {
  std::uint64_t mask = 0;
  for (std::size_t t = 0; t < spectator_ids.size(); ++t)
    if (compact & (std::uint64_t{1} << t)) mask |= std::uint64_t{1} << spectator_ids[t];
  return mask;
}

}  // namespace

double delta_k(TabulatedGame& game, int i, int j, int k) {
  check_pair(game, i, j);
  const int n = game.player_count();
  if (k < 1 || k > n - 1) throw std::invalid_argument("delta_k: k outside 1..n-1");
  const std::vector<int> ids = spectators(n, i, j);
  const std::uint64_t count = std::uint64_t{1} << ids.size();
  double sum = 0.0;
  for (std::uint64_t m = 0; m < count; ++m) {
    if (std::popcount(m) != k - 1) continue;
    const std::uint64_t s = expand_mask(m, ids);
    sum += game.utility(s | (1ULL << i)) - game.utility(s | (1ULL << j));
  }
  return sum;
}

double scaled_difference(TabulatedGame& game, const WeightFunction& w, int i, int j) {
  check_pair(game, i, j);
  const int n = game.player_count();
  if (w.n != n) throw std::invalid_argument("scaled_difference: weight function size mismatch");

  const SemivalueResult exact = exact_semivalue(game, w, {}, n);
  const double via_semivalue =
      n * (exact.values[static_cast<std::size_t>(i)] - exact.values[static_cast<std::size_t>(j)]);

  double via_deltas = 0.0;
  for (int k = 1; k <= n - 1; ++k) via_deltas += (w.at(k) + w.at(k + 1)) * delta_k(game, i, j, k);

  if (std::abs(via_semivalue - via_deltas) > 1e-9 * std::max(1.0, std::abs(via_semivalue)))
    throw std::runtime_error("scaled_difference: dual routes disagree beyond tolerance");
  return via_semivalue;
}

bool is_tau_distinguishable(TabulatedGame& game, int i, int j, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("is_tau_distinguishable: tau must be positive");
  const int n = game.player_count();
  for (int k = 1; k <= n - 1; ++k)
    if (delta_k(game, i, j, k) < tau) return false;
  return true;
}

double safety_margin_closed_form(int n, double tau, const WeightFunction& w) {
  if (n < 2) throw std::invalid_argument("safety_margin_closed_form: need n >= 2");
  if (tau <= 0.0) throw std::invalid_argument("safety_margin_closed_form: tau must be positive");
  if (w.n != n) throw std::invalid_argument("safety_margin_closed_form: weight function size mismatch");
  double num = 0.0, den = 0.0;
  for (int k = 1; k <= n - 1; ++k) {
    const double c = binomial(n - 2, k - 1);
    const double pair = w.at(k) + w.at(k + 1);
    num += c * pair;
    den += c * pair * pair;
  }
  return tau * std::sqrt(num * num / den);
}

RobustnessReport brute_force_safety_margin(int n, double tau, const WeightFunction& w,
                                           const ThresholdPolicy& policy,
                                           const SafetyMarginSearchConfig& search) {
  if (n < 2 || n > 5) throw std::invalid_argument("brute_force_safety_margin: n outside 2..5");
  if (tau <= 0.0) throw std::invalid_argument("brute_force_safety_margin: tau must be positive");
  if (w.n != n) throw std::invalid_argument("brute_force_safety_margin: weight function size mismatch");
  if (policy.mode == ThresholdMode::PruneRatio)
    throw std::invalid_argument("brute_force_safety_margin: prune policy has no margin semantics");

  RobustnessReport report;
  report.tau = tau;
  report.w_name = w.name;
  report.thresholded = policy.mode == ThresholdMode::Hinge;
  report.converged = true;
  report.epsilon_found = std::numeric_limits<double>::infinity();

  Rng rng(search.seed);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const std::vector<int> ids = spectators(n, i, j);
      const std::size_t dim = std::size_t{1} << ids.size();

      // Coefficient of y_S = U(S u i) - U(S u j) in the scaled difference,
      // and the stratum (by |S|) each coordinate belongs to.
      std::vector<double> coeff(dim);
      std::vector<int> stratum(dim);
      std::vector<double> stratum_size(ids.size() + 1, 0.0);
      for (std::size_t m = 0; m < dim; ++m) {
        const int t = std::popcount(m);
        coeff[m] = w.at(t + 1) + w.at(t + 2);
        stratum[m] = t;
        stratum_size[static_cast<std::size_t>(t)] += 1.0;
      }
      double coeff_norm_sq = 0.0;
      for (double c : coeff) coeff_norm_sq += c * c;
      const double coeff_norm = std::sqrt(coeff_norm_sq);

      for (int restart = 0; restart < search.restarts; ++restart) {
        std::vector<double> y(dim);
        for (double& v : y) v = tau * (1.0 + rng.uniform(0.0, 1.0));

        auto project = [&]() {
          std::vector<double> totals(stratum_size.size(), 0.0);
          for (std::size_t m = 0; m < dim; ++m) totals[static_cast<std::size_t>(stratum[m])] += y[m];
          for (std::size_t m = 0; m < dim; ++m) {
            const auto t = static_cast<std::size_t>(stratum[m]);
            const double deficit = tau * stratum_size[t] - totals[t];
            if (deficit > 0.0) y[m] += deficit / stratum_size[t];
          }
        };
        project();

        auto objective = [&]() {
          double d = 0.0;
          for (std::size_t m = 0; m < dim; ++m) d += coeff[m] * y[m];
          return std::abs(d);
        };

        double prev = objective();
        bool converged = false;
        for (int it = 0; it < search.max_iterations; ++it) {
          const double step = tau / (1.0 + 0.05 * it);
          for (std::size_t m = 0; m < dim; ++m) y[m] -= step * coeff[m] / std::max(coeff_norm, 1e-12);
          project();
          const double cur = objective();
          if (std::abs(prev - cur) < search.tolerance * std::max(1.0, cur) && it > 32) {
            converged = true;
            break;
          }
          prev = cur;
        }
        if (!converged) report.converged = false;

        // Realize the candidate as a full utility table. Entries sit strictly
        // above the hinge cut, which makes the hinge a pure shift (the
        // worst-case configuration in the threshold analysis).
        const double cut = policy.mode == ThresholdMode::Hinge ? policy.b : 0.0;
        double min_y = 0.0;
        for (double v : y) min_y = std::min(min_y, v);
        const double base = cut + 1.0 - min_y;
        std::vector<double> table(std::size_t{1} << n, base);
        for (std::size_t m = 0; m < dim; ++m) {
          const std::uint64_t s = expand_mask(m, ids);
          table[s | (1ULL << i)] = base + y[m];
        }
        if (policy.mode == ThresholdMode::Hinge)
          for (double& v : table) v = std::max(v - cut, 0.0);

        TabulatedGame realized(n, std::move(table));
        const double d = scaled_difference(realized, w, i, j);
        const double margin = std::abs(d) / coeff_norm;
        report.epsilon_found = std::min(report.epsilon_found, margin);
      }
    }
  }
  return report;
}

}  // namespace gcx
