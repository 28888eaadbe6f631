#include "lungalloc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lungalloc/ranking.hpp"

namespace lungalloc {

namespace {

constexpr double kSingularTol = 1e-12;
constexpr double kBudgetMatchTol = 1e-9;

void finish_objectives(const Model& model, PolicySolution& sol) {
  OccupancyTrajectory traj = propagate_occupancy(model, sol.policy);
  sol.fraction = transplant_fraction(traj);
  sol.life_gain = objective_life_gain(traj, model);
  sol.penalized_objective = sol.life_gain - sol.penalty * sol.fraction;
}

}  // namespace

PolicySolution backward_pass(const Model& model, double penalty) {
  if (penalty < 0.0) throw std::invalid_argument("penalty must be nonnegative");
  const int n = model.n_states();
  const int T = model.horizon();
  const Grid& gain = model.life_gain();

  PolicySolution sol;
  sol.penalty = penalty;
  sol.policy = Policy::zeros(T, n);
  sol.phi = Grid(T, n);
  sol.eta = Grid(T, n);
  sol.gamma = Grid(T, n);

  const double inf = std::numeric_limits<double>::infinity();
  for (int s = T - 1; s >= 0; --s) {
    for (int i = 0; i < n; ++i) {
      double eta = 0.0;
      double gamma = 0.0;
      if (s < T - 1) {
        // Continuation: survivors transition through P_s, then either get
        // transplanted at s+1 (collect mu~) or carry the s+1 continuation.
        for (int j = 0; j < n; ++j) {
          const double p = model.p_alive(s, i, j);
          if (p == 0.0) continue;
          const double lam = sol.policy.lambda(s + 1, j);
          eta += p * (lam * gain(s + 1, j) + (1.0 - lam) * sol.eta(s + 1, j));
          gamma += p * (lam + (1.0 - lam) * sol.gamma(s + 1, j));
        }
      }
      sol.eta(s, i) = eta;
      sol.gamma(s, i) = gamma;

      const double numerator = gain(s, i) - eta;
      const double denominator = 1.0 - gamma;
      double phi;
      if (denominator <= kSingularTol) {
        phi = numerator > 0.0 ? inf : -inf;
        sol.singular_pairs.emplace_back(s, i);
      } else {
        phi = numerator / denominator;
      }
      sol.phi(s, i) = phi;
      sol.policy.lambda(s, i) = phi > penalty ? 1.0 : 0.0;
    }
  }

  finish_objectives(model, sol);
  return sol;
}

std::pair<Policy, double> brute_force_optimum(const Model& model, double penalty) {
  const int n = model.n_states();
  const int T = model.horizon();
  const int cells = n * T;
  if (cells > 20) throw std::invalid_argument("instance too large for enumeration (n*T > 20)");

  double best = -std::numeric_limits<double>::infinity();
  Policy best_policy = Policy::zeros(T, n);
  Policy candidate = Policy::zeros(T, n);
  const uint64_t count = uint64_t{1} << cells;
  for (uint64_t mask = 0; mask < count; ++mask) {
    for (int c = 0; c < cells; ++c)
      candidate.lambda(c / n, c % n) = (mask >> c) & 1 ? 1.0 : 0.0;
    OccupancyTrajectory traj = propagate_occupancy(model, candidate);
    const double value = objective_life_gain(traj, model) - penalty * transplant_fraction(traj);
    if (value > best) {
      best = value;
      best_policy = candidate;
    }
  }
  return {best_policy, best};
}

double bisection_upper_bracket(const Model& model) {
  return 1.05 * model.max_abs_life_gain();
}

BudgetResult solve_budget(const Model& model, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const double budget = model.budget();

  PolicySolution at_zero = backward_pass(model, 0.0);
  if (at_zero.fraction <= budget || budget >= 1.0)
    return {0.0, std::move(at_zero)};

  double lo = 0.0;
  double lo_fraction = at_zero.fraction;  // > budget
  double hi = bisection_upper_bracket(model);
  PolicySolution at_hi = backward_pass(model, hi);
  double hi_fraction = at_hi.fraction;
  if (hi_fraction > budget) {
    std::ostringstream msg;
    msg << "transplant fraction " << hi_fraction << " above budget " << budget
        << " at bracket penalty " << hi << "; allocable set should be empty";
    throw std::runtime_error(msg.str());
  }

  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    PolicySolution at_mid = backward_pass(model, mid);
    if (at_mid.fraction > lo_fraction + kBudgetMatchTol ||
        at_mid.fraction < hi_fraction - kBudgetMatchTol) {
      std::ostringstream msg;
      msg << "non-monotone transplant fraction: f(" << lo << ") = " << lo_fraction << ", f(" << mid
          << ") = " << at_mid.fraction << ", f(" << hi << ") = " << hi_fraction;
      throw std::runtime_error(msg.str());
    }
    if (at_mid.fraction <= budget) {
      hi = mid;
      hi_fraction = at_mid.fraction;
    } else {
      lo = mid;
      lo_fraction = at_mid.fraction;
    }
  }
  return {hi, backward_pass(model, hi)};
}

PolicySolution fractional_topup(const Model& model, const PolicySolution& solution,
                                const RankingTable& ranking) {
  const double budget = model.budget();
  PolicySolution topped = solution;
  double fraction = transplant_fraction(propagate_occupancy(model, topped.policy));
  if (fraction > budget + kBudgetMatchTol)
    throw std::invalid_argument("solution already exceeds the organ budget");

  for (const RankEntry& entry : ranking.entries()) {
    double gap = budget - fraction;
    if (gap <= kBudgetMatchTol) break;
    const int s = entry.period;
    const int i = entry.state;
    const double current = topped.policy.lambda(s, i);
    if (current >= 1.0) continue;

    // The fraction is affine in this single lambda entry, so two evaluations
    // pin the exact top-up.
    Policy probe = topped.policy;
    probe.lambda(s, i) = 1.0;
    const double full_fraction = transplant_fraction(propagate_occupancy(model, probe));
    const double slope = (full_fraction - fraction) / (1.0 - current);
    if (slope <= 0.0) continue;

    const double step = std::min(1.0 - current, gap / slope);
    topped.policy.lambda(s, i) = current + step;
    fraction = transplant_fraction(propagate_occupancy(model, topped.policy));
  }

  finish_objectives(model, topped);
  return topped;
}

}  // namespace lungalloc
