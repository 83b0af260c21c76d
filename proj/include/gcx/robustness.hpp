#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcx/game.hpp"
#include "gcx/semivalues.hpp"

namespace gcx {

// Cooperative game given by a full utility table over all 2^n coalitions.
class TabulatedGame : public CoalitionGame {
 public:
  TabulatedGame(int player_count, std::vector<double> table);

  static TabulatedGame additive(const std::vector<double>& per_player);
  static TabulatedGame random_uniform(int player_count, Rng& rng, double lo = 0.0, double hi = 1.0);

  const std::vector<double>& table() const { return table_; }

 protected:
  double eval(std::uint64_t coalition) override {
    record_call();
    return table_[coalition];
  }

 private:
  std::vector<double> table_;
};

// Sum over S subset of N \ {i,j} with |S| = k-1 of U(S u {i}) - U(S u {j}).
double delta_k(TabulatedGame& game, int i, int j, int k);

// n * (semivalue(i) - semivalue(j)), cross-checked against the equivalent
// size-stratified form sum_k (w(k) + w(k+1)) * delta_k. The two routes must
// agree to 1e-9 or this throws.
double scaled_difference(TabulatedGame& game, const WeightFunction& w, int i, int j);

// True iff delta_k >= tau for every k in 1..n-1.
bool is_tau_distinguishable(TabulatedGame& game, int i, int j, double tau);

// tau * sqrt( (sum_k C(n-2,k-1)(w(k)+w(k+1)))^2 / sum_k C(n-2,k-1)(w(k)+w(k+1))^2 ).
double safety_margin_closed_form(int n, double tau, const WeightFunction& w);

struct SafetyMarginSearchConfig {
  int max_iterations = 4000;
  int restarts = 3;
  double tolerance = 1e-10;
  std::uint64_t seed = 0;
};

struct RobustnessReport {
  double tau = 0.0;
  double epsilon_found = 0.0;  // minimal perturbation norm
  std::string w_name;
  bool thresholded = false;
  bool converged = false;
};

// Numerical safety margin on tiny games (n <= 5): minimizes the perturbation
// that zeroes the scaled difference over tau-distinguishable games and player
// pairs. For a fixed game the minimizing perturbation is the Euclidean
// projection onto the hyperplane a^T U = 0, at distance |a^T U| / ||a||; the
// game itself is found by projected gradient over the distinguishability
// constraints. Under a Hinge policy both the game and its perturbation pass
// through the hinge before the difference is formed.
RobustnessReport brute_force_safety_margin(int n, double tau, const WeightFunction& w,
                                           const ThresholdPolicy& policy = {},
                                           const SafetyMarginSearchConfig& search = {});

}  // namespace gcx
