#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lungalloc/ranking.hpp"
#include "lungalloc/solver.hpp"
#include "random_models.hpp"

using namespace lungalloc;
using lungalloc::testing::penalty_grid;
using lungalloc::testing::random_model;

namespace {

Model single_state_model(double gain, double death_before_horizon = 1.0) {
  ModelConfig config;
  config.n_states = 1;
  config.horizon = 1;
  config.organ_rate = 50.0;
  config.patient_rate = 100.0;
  config.initial_dist = {1.0};
  config.transition = {{{1.0, 0.0}, {death_before_horizon, 1.0 - death_before_horizon}}};
  config.life_gain = {{gain}};
  config.pt_life = {{gain > 0 ? gain : 0.0}};
  return validate_model(config);
}

/// 1 state, 2 periods; survival through period 0 is `survive`.
Model two_period_model(double gain0, double gain1, double survive) {
  ModelConfig config;
  config.n_states = 1;
  config.horizon = 2;
  config.organ_rate = 50.0;
  config.patient_rate = 100.0;
  config.initial_dist = {1.0};
  config.transition = {{{1.0, 0.0}, {1.0 - survive, survive}}, {{1.0, 0.0}, {1.0, 0.0}}};
  config.life_gain = {{gain0}, {gain1}};
  config.pt_life = {{500.0}, {400.0}};
  return validate_model(config);
}

}  // namespace

TEST_CASE("negative penalty is rejected") {
  const Model model = single_state_model(10.0);
  CHECK_THROWS_AS(backward_pass(model, -1.0), std::invalid_argument);
}

TEST_CASE("final-period index equals the life gain exactly") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const Model model = random_model(rng);
    const auto solution = backward_pass(model, 17.0);
    const int last = model.horizon() - 1;
    for (int i = 0; i < model.n_states(); ++i) {
      CHECK(solution.phi(last, i) == model.life_gain()(last, i));
      CHECK(solution.eta(last, i) == 0.0);
      CHECK(solution.gamma(last, i) == 0.0);
    }
  }
}

TEST_CASE("penalty above the bracket allocates nothing and phi collapses to the gain") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Model model = random_model(rng);
    const double c = bisection_upper_bracket(model) + 1.0;
    const auto solution = backward_pass(model, c);
    for (int s = 0; s < model.horizon(); ++s)
      for (int i = 0; i < model.n_states(); ++i) {
        CHECK(solution.policy.lambda(s, i) == 0.0);
        CHECK(solution.eta(s, i) == 0.0);
        CHECK(solution.gamma(s, i) == 0.0);
        CHECK(solution.phi(s, i) == model.life_gain()(s, i));
      }
    CHECK(solution.fraction == 0.0);
    CHECK(solution.penalized_objective == 0.0);
  }
}

TEST_CASE("single state, single period: allocate iff the gain beats the penalty") {
  const Model model = single_state_model(5.0);

  const auto cheap = backward_pass(model, 3.0);
  CHECK(cheap.policy.lambda(0, 0) == 1.0);
  CHECK(cheap.penalized_objective == doctest::Approx(2.0));

  const auto dear = backward_pass(model, 7.0);
  CHECK(dear.policy.lambda(0, 0) == 0.0);
  CHECK(dear.penalized_objective == 0.0);

  // Enumeration agrees on both.
  CHECK(brute_force_optimum(model, 3.0).second == doctest::Approx(2.0));
  CHECK(brute_force_optimum(model, 7.0).second == doctest::Approx(0.0));
}

TEST_CASE("enumeration guard rejects large instances") {
  std::mt19937_64 rng(4);
  testing::RandomModelParams params;
  params.min_states = 3;
  params.max_states = 3;
  params.min_periods = 7;
  params.max_periods = 7;
  const Model model = random_model(rng, params);
  CHECK_THROWS_AS(brute_force_optimum(model, 0.0), std::invalid_argument);
}

TEST_CASE("backward pass matches exhaustive enumeration") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const Model model = random_model(rng);
    for (double c : penalty_grid(model)) {
      const auto solution = backward_pass(model, c);
      const auto [best_policy, best_value] = brute_force_optimum(model, c);
      CHECK(std::abs(solution.penalized_objective - best_value) <= 1e-9);
    }
  }
}

TEST_CASE("certain future transplantation resolves the index by the sign of the net gain") {
  // Survival through period 0 is certain and the period-1 gain clears the
  // penalty, so gamma(0) == 1 exactly.
  {
    const Model model = two_period_model(10.0, 5.0, 1.0);
    const auto solution = backward_pass(model, 1.0);
    CHECK(solution.gamma(0, 0) == 1.0);
    CHECK(solution.phi(0, 0) == std::numeric_limits<double>::infinity());
    CHECK(solution.policy.lambda(0, 0) == 1.0);
    REQUIRE(solution.singular_pairs.size() == 1);
    CHECK(solution.singular_pairs[0] == std::pair<int, int>{0, 0});
    CHECK(solution.penalized_objective ==
          doctest::Approx(brute_force_optimum(model, 1.0).second));
  }
  {
    // Now the immediate gain is below the continuation value: wait.
    const Model model = two_period_model(4.0, 5.0, 1.0);
    const auto solution = backward_pass(model, 1.0);
    CHECK(solution.gamma(0, 0) == 1.0);
    CHECK(solution.phi(0, 0) == -std::numeric_limits<double>::infinity());
    CHECK(solution.policy.lambda(0, 0) == 0.0);
    CHECK(solution.penalized_objective ==
          doctest::Approx(brute_force_optimum(model, 1.0).second));
  }
}

TEST_CASE("budget solve returns zero when the constraint never binds") {
  // All gains negative: nothing allocates even at penalty 0.
  ModelConfig config;
  config.n_states = 2;
  config.horizon = 2;
  config.organ_rate = 30.0;
  config.patient_rate = 100.0;
  config.initial_dist = {0.5, 0.5};
  config.transition = {
      {{1, 0, 0}, {0.3, 0.4, 0.3}, {0.3, 0.3, 0.4}},
      {{1, 0, 0}, {1, 0, 0}, {1, 0, 0}},
  };
  config.life_gain = {{-10.0, -20.0}, {-5.0, -1.0}};
  config.pt_life = {{0.0, 0.0}, {0.0, 0.0}};
  const Model model = validate_model(config);

  const auto result = solve_budget(model, 1e-6);
  CHECK(result.c_star == 0.0);
  CHECK(result.solution.fraction == 0.0);
}

TEST_CASE("budget solve returns zero when the budget is nearly one") {
  std::mt19937_64 rng(77);
  testing::RandomModelParams params;
  params.budget = 0.9999;  // rho < tau keeps the ratio strictly below one
  params.gain_lo = -10.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Model model = random_model(rng, params);
    const auto result = solve_budget(model, 1e-6);
    if (backward_pass(model, 0.0).fraction <= model.budget()) {
      CHECK(result.c_star == 0.0);
    }
    CHECK(result.solution.fraction <= model.budget());
  }
}

TEST_CASE("budget solve brackets the binding penalty") {
  std::mt19937_64 rng(31);
  testing::RandomModelParams params;
  params.min_states = 3;
  params.max_states = 3;
  params.budget = 0.3;
  params.gain_lo = 5.0;  // positive gains so penalty 0 over-allocates
  const double tol = 1e-7;
  int binding = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Model model = random_model(rng, params);
    if (backward_pass(model, 0.0).fraction <= model.budget()) continue;
    ++binding;
    const auto result = solve_budget(model, tol);
    CHECK(result.solution.fraction <= model.budget());
    const double below = std::max(0.0, result.c_star - 10.0 * tol);
    CHECK(backward_pass(model, below).fraction > model.budget());
  }
  CHECK(binding >= 10);  // the generator must actually produce binding cases
}

TEST_CASE("invalid tolerance is rejected") {
  const Model model = single_state_model(5.0);
  CHECK_THROWS_AS(solve_budget(model, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_budget(model, -1.0), std::invalid_argument);
}

TEST_CASE("fractional top-up closes a budget gap that lies inside one pair") {
  // Fraction steps from 0 (c >= 10) straight to 1 (c < 10); a budget of 0.4
  // lands inside the first-ranked pair.
  ModelConfig config;
  config.n_states = 1;
  config.horizon = 2;
  config.organ_rate = 40.0;
  config.patient_rate = 100.0;
  config.initial_dist = {1.0};
  config.transition = {{{1.0, 0.0}, {0.5, 0.5}}, {{1.0, 0.0}, {1.0, 0.0}}};
  config.life_gain = {{10.0}, {5.0}};
  config.pt_life = {{500.0}, {400.0}};
  const Model model = validate_model(config);

  const auto result = solve_budget(model, 1e-9);
  CHECK(result.solution.fraction == 0.0);  // step function jumps over 0.4

  const RankingTable ranking = rank_pairs(model, 1e-6, 10);
  const auto topped = fractional_topup(model, result.solution, ranking);
  CHECK(topped.fraction == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(topped.policy.lambda(0, 0) > 0.0);
  CHECK(topped.policy.lambda(0, 0) < 1.0);
  CHECK(topped.policy.lambda(0, 0) == doctest::Approx(0.4));
}

TEST_CASE("fractional top-up is a no-op when the fraction already meets the budget") {
  // Waiting is optimal at penalty 0 here; only the final period allocates,
  // giving fraction 0.5. The budget is set to exactly that value.
  const Model probe = two_period_model(-5.0, 5.0, 0.5);
  const auto at_zero = backward_pass(probe, 0.0);
  REQUIRE(at_zero.fraction == 0.5);

  ModelConfig config;
  config.n_states = 1;
  config.horizon = 2;
  config.organ_rate = 50.0;
  config.patient_rate = 100.0;
  config.initial_dist = {1.0};
  config.transition = {{{1.0, 0.0}, {0.5, 0.5}}, {{1.0, 0.0}, {1.0, 0.0}}};
  config.life_gain = {{-5.0}, {5.0}};
  config.pt_life = {{500.0}, {400.0}};
  const Model matched = validate_model(config);

  const auto solution = backward_pass(matched, 0.0);
  const RankingTable ranking = rank_pairs(matched, 1e-6, 10);
  const auto topped = fractional_topup(matched, solution, ranking);
  CHECK(topped.policy.lambda.data() == solution.policy.lambda.data());
}

TEST_CASE("fractional top-up lands on the budget for random binding instances") {
  std::mt19937_64 rng(64);
  testing::RandomModelParams params;
  params.min_states = 2;
  params.max_states = 3;
  params.min_periods = 3;
  params.max_periods = 4;
  params.budget = 0.35;
  params.gain_lo = 1.0;
  int checked = 0;
  for (int trial = 0; trial < 15; ++trial) {
    const Model model = random_model(rng, params);
    if (backward_pass(model, 0.0).fraction <= model.budget()) continue;
    ++checked;
    const auto result = solve_budget(model, 1e-8);
    const RankingTable ranking = rank_pairs(model, 1e-5, default_rank_steps(model));
    const auto topped = fractional_topup(model, result.solution, ranking);
    CHECK(std::abs(topped.fraction - model.budget()) <= 1e-9);
    for (int s = 0; s < model.horizon(); ++s)
      for (int i = 0; i < model.n_states(); ++i)
        CHECK(topped.policy.lambda(s, i) >= result.solution.policy.lambda(s, i));
  }
  CHECK(checked >= 8);
}

TEST_CASE("monotonicity over a descending penalty grid") {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 25; ++trial) {
    const Model model = random_model(rng);
    const double c_hi = bisection_upper_bracket(model);
    double last_fraction = -1.0;
    double last_gain = -std::numeric_limits<double>::infinity();
    for (int k = 19; k >= 0; --k) {
      const double c = c_hi * k / 19.0;
      const auto solution = backward_pass(model, c);
      CHECK(solution.fraction + 1e-9 >= last_fraction);
      CHECK(solution.life_gain + 1e-9 >= last_gain);
      last_fraction = solution.fraction;
      last_gain = solution.life_gain;
    }
  }
}

TEST_CASE("policy and index tables ignore the initial distribution") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Model model = random_model(rng);
    const auto base = backward_pass(model, 12.0);
    const Model shifted =
        model.with_initial_dist(testing::random_distribution(rng, model.n_states()));
    const auto other = backward_pass(shifted, 12.0);
    CHECK(base.phi.data() == other.phi.data());
    CHECK(base.policy.lambda.data() == other.policy.lambda.data());
  }
}
