#pragma once

#include <utility>
#include <vector>

#include "lungalloc/model.hpp"

namespace lungalloc {

struct RankingTable;

/// Optimal allocation policy for one value of the penalty parameter c.
///
/// eta(s, i) is the expected future life gain of a state-i patient who is not
/// transplanted at period s but follows the optimal continuation policy;
/// gamma(s, i) is the corresponding probability of future transplantation.
/// Both are continuation quantities ("s+"): the final-period rows are zero.
/// phi is the allocation index (mu~ - eta) / (1 - gamma); lambda(s, i) = 1
/// exactly when phi(s, i) > c.
struct PolicySolution {
  double penalty = 0.0;
  Policy policy;
  Grid phi;
  Grid eta;
  Grid gamma;
  double penalized_objective = 0.0;  // sum psi * (mu~ - c)
  double life_gain = 0.0;            // sum psi * mu~, unpenalized
  double fraction = 0.0;             // sum psi
  /// (period, state) pairs where future transplantation is certain
  /// (gamma == 1); phi at these pairs was resolved by the sign of mu~ - eta.
  std::vector<std::pair<int, int>> singular_pairs;
};

/// Backward recursion of eta, gamma, phi from the horizon to period 0.
///
/// Within each period the allocation decision is a pure threshold on phi
/// with strict inequality; ties phi == c resolve to no allocation. When
/// 1 - gamma underflows (future transplantation certain), phi is set to
/// +/- infinity by the sign of mu~ - eta and the pair is recorded in
/// singular_pairs. The policy depends only on the transition and life-gain
/// tables, never on the initial distribution.
PolicySolution backward_pass(const Model& model, double penalty);

/// Exhaustive argmax of the penalized objective over all {0,1} policies.
/// Enumeration guard: n_states * horizon <= 20.
std::pair<Policy, double> brute_force_optimum(const Model& model, double penalty);

struct BudgetResult {
  double c_star = 0.0;
  PolicySolution solution;
};

/// Smallest penalty whose transplant fraction fits the organ budget rho/tau,
/// found by bisection over [0, bisection_upper_bracket(model)] to within tol.
/// Aborts with a diagnostic if the fraction is observed to be non-monotone.
BudgetResult solve_budget(const Model& model, double tol);

/// Penalty above which the allocable set is provably empty,
/// 1.05 * max |life gain|.
double bisection_upper_bracket(const Model& model);

/// Raises lambda fractionally on the next pairs in ranking order until the
/// transplant fraction meets the budget within 1e-9 (or the ranking is
/// exhausted). Never decreases an existing allocation. phi/eta/gamma are kept
/// from the threshold solution; objective, fraction and lambda are updated.
PolicySolution fractional_topup(const Model& model, const PolicySolution& solution,
                                const RankingTable& ranking);

}  // namespace lungalloc
