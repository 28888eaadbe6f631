#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lungalloc/model.hpp"
#include "random_models.hpp"

using namespace lungalloc;
using lungalloc::testing::random_binary_policy;
using lungalloc::testing::random_fractional_policy;
using lungalloc::testing::random_model;

namespace {

ModelConfig small_config() {
  ModelConfig config;
  config.n_states = 2;
  config.horizon = 2;
  config.period_days = 30.0;
  config.organ_rate = 50.0;
  config.patient_rate = 100.0;
  config.initial_dist = {0.6, 0.4};
  config.transition = {
      {{1.0, 0.0, 0.0}, {0.2, 0.5, 0.3}, {0.4, 0.1, 0.5}},
      {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}},
  };
  config.life_gain = {{120.0, -5.0}, {60.0, 30.0}};
  config.pt_life = {{400.0, 100.0}, {250.0, 90.0}};
  return config;
}

bool mentions(const ValidationError& e, const std::string& text) {
  return std::string(e.what()).find(text) != std::string::npos;
}

double conservation_gap(const OccupancyTrajectory& traj) {
  const int T = traj.psi.periods();
  const int n = traj.psi.states();
  double cumulative_psi = 0.0;
  double worst = 0.0;
  for (int s = 0; s <= T; ++s) {
    double alive = 0.0;
    for (int i = 0; i < n; ++i) alive += traj.pi_pre(s, i);
    worst = std::max(worst, std::abs(alive + cumulative_psi + traj.death_mass[s] - 1.0));
    if (s < T)
      for (int i = 0; i < n; ++i) cumulative_psi += traj.psi(s, i);
  }
  return worst;
}

// Straight-line recomputation of the three update equations, kept separate
// from the library's propagation loop.
struct HandTrajectory {
  std::vector<std::vector<double>> pre, post, psi;
};

HandTrajectory hand_propagate(const Model& model, const Policy& policy) {
  const int n = model.n_states();
  const int T = model.horizon();
  HandTrajectory hand;
  hand.pre.assign(T + 1, std::vector<double>(n, 0.0));
  hand.post.assign(T, std::vector<double>(n, 0.0));
  hand.psi.assign(T, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) hand.pre[0][i] = model.initial(i);
  for (int s = 0; s < T; ++s) {
    for (int i = 0; i < n; ++i) {
      hand.psi[s][i] = hand.pre[s][i] * policy.lambda(s, i);
      hand.post[s][i] = hand.pre[s][i] - hand.psi[s][i];
    }
    for (int j = 0; j < n; ++j) {
      double mass = 0.0;
      for (int i = 0; i < n; ++i) mass += hand.post[s][i] * model.p_alive(s, i, j);
      hand.pre[s + 1][j] = mass;
    }
  }
  return hand;
}

}  // namespace

TEST_CASE("valid two-state bundle passes validation") {
  const Model model = validate_model(small_config());
  CHECK(model.n_states() == 2);
  CHECK(model.horizon() == 2);
  CHECK(model.budget() == doctest::Approx(0.5));
  CHECK(model.p_alive(0, 0, 1) == 0.3);
  CHECK(model.death_prob(0, 1) == 0.4);
}

TEST_CASE("paper arrival rates are accepted") {
  ModelConfig config = small_config();
  config.organ_rate = 104.0;
  config.patient_rate = 173.0;
  const Model model = validate_model(config);
  CHECK(model.budget() == doctest::Approx(104.0 / 173.0));
}

TEST_CASE("non-stochastic transition row is reported with its location") {
  ModelConfig config = small_config();
  config.transition[0][1] = {0.2, 0.4, 0.3};  // sums to 0.9
  try {
    validate_model(config);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(mentions(e, "period 0"));
    CHECK(mentions(e, "state 1"));
    CHECK(mentions(e, "sums to 0.9"));
  }
}

TEST_CASE("negative probabilities are rejected") {
  ModelConfig config = small_config();
  config.transition[0][1] = {0.4, 0.8, -0.2};
  CHECK_THROWS_AS(validate_model(config), ValidationError);
  config = small_config();
  config.initial_dist = {1.2, -0.2};
  CHECK_THROWS_AS(validate_model(config), ValidationError);
}

TEST_CASE("organ rate at or above patient rate is rejected") {
  ModelConfig config = small_config();
  config.organ_rate = config.patient_rate;
  try {
    validate_model(config);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(mentions(e, "organ_rate"));
  }
}

TEST_CASE("horizon without certain death is rejected") {
  ModelConfig config = small_config();
  config.transition[1][1] = {0.5, 0.5, 0.0};
  try {
    validate_model(config);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(mentions(e, "certain death"));
  }
}

TEST_CASE("mismatched table dimensions are rejected") {
  ModelConfig config = small_config();
  config.life_gain[1].pop_back();
  CHECK_THROWS_AS(validate_model(config), ValidationError);
  config = small_config();
  config.transition[0][2].push_back(0.0);
  CHECK_THROWS_AS(validate_model(config), ValidationError);
  config = small_config();
  config.initial_dist.push_back(0.0);
  CHECK_THROWS_AS(validate_model(config), ValidationError);
}

TEST_CASE("negative pt_life is rejected") {
  ModelConfig config = small_config();
  config.pt_life[0][1] = -1.0;
  CHECK_THROWS_AS(validate_model(config), ValidationError);
}

TEST_CASE("no allocation under identity transitions keeps occupancy flat") {
  ModelConfig config;
  config.n_states = 2;
  config.horizon = 3;
  config.organ_rate = 10.0;
  config.patient_rate = 100.0;
  config.initial_dist = {0.7, 0.3};
  config.transition = {
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
      {{1, 0, 0}, {1, 0, 0}, {1, 0, 0}},
  };
  config.life_gain.assign(3, {10.0, 20.0});
  config.pt_life.assign(3, {10.0, 20.0});
  const Model model = validate_model(config);

  const auto traj = propagate_occupancy(model, Policy::zeros(3, 2));
  for (int s = 0; s < 3; ++s) {
    CHECK(traj.pi_pre(s, 0) == 0.7);
    CHECK(traj.pi_pre(s, 1) == 0.3);
  }
  CHECK(traj.pi_pre(3, 0) == 0.0);
  CHECK(traj.death_mass[3] == doctest::Approx(1.0));
  CHECK(objective_life_gain(traj, model) == 0.0);
  CHECK(transplant_fraction(traj) == 0.0);
}

TEST_CASE("full allocation at entry removes all mass immediately") {
  const Model model = validate_model(small_config());
  Policy policy = Policy::zeros(2, 2);
  policy.lambda(0, 0) = 1.0;
  policy.lambda(0, 1) = 1.0;
  const auto traj = propagate_occupancy(model, policy);
  CHECK(traj.psi(0, 0) == 0.6);
  CHECK(traj.psi(0, 1) == 0.4);
  CHECK(traj.pi_pre(1, 0) == 0.0);
  CHECK(traj.pi_pre(1, 1) == 0.0);
  CHECK(transplant_fraction(traj) == doctest::Approx(1.0));
  // Closed form of the objective when everything is transplanted at entry.
  CHECK(objective_life_gain(traj, model) == doctest::Approx(0.6 * 120.0 + 0.4 * -5.0));
}

TEST_CASE("propagation matches an independent hand recursion") {
  std::mt19937_64 rng(7101);
  for (int trial = 0; trial < 25; ++trial) {
    testing::RandomModelParams params;
    params.min_states = 3;
    params.max_states = 3;
    params.min_periods = 3;
    params.max_periods = 5;
    const Model model = random_model(rng, params);
    const Policy policy = random_binary_policy(rng, model.horizon(), model.n_states());
    const auto traj = propagate_occupancy(model, policy);
    const auto hand = hand_propagate(model, policy);
    for (int s = 0; s < model.horizon(); ++s)
      for (int i = 0; i < model.n_states(); ++i) {
        CHECK(traj.pi_pre(s, i) == doctest::Approx(hand.pre[s][i]).epsilon(1e-12));
        CHECK(traj.pi_post(s, i) == doctest::Approx(hand.post[s][i]).epsilon(1e-12));
        CHECK(traj.psi(s, i) == doctest::Approx(hand.psi[s][i]).epsilon(1e-12));
      }
  }
}

TEST_CASE("policy dimension mismatch is rejected") {
  const Model model = validate_model(small_config());
  CHECK_THROWS_AS(propagate_occupancy(model, Policy::zeros(3, 2)), std::invalid_argument);
}

TEST_CASE("mass conservation holds for random models and policies") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const Model model = random_model(rng);
    const Policy policy = trial % 2 == 0
                              ? random_binary_policy(rng, model.horizon(), model.n_states())
                              : random_fractional_policy(rng, model.horizon(), model.n_states());
    const auto traj = propagate_occupancy(model, policy);
    CHECK(conservation_gap(traj) <= 1e-12);
    // Fraction agrees with the conservation identity at the horizon.
    double survivors = 0.0;
    for (int i = 0; i < model.n_states(); ++i) survivors += traj.pi_pre(model.horizon(), i);
    CHECK(transplant_fraction(traj) ==
          doctest::Approx(1.0 - traj.death_mass[model.horizon()] - survivors).epsilon(1e-12));
  }
}

TEST_CASE("raising allocation anywhere never increases later occupancy") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const Model model = random_model(rng);
    const int T = model.horizon();
    const int n = model.n_states();
    Policy lower = random_fractional_policy(rng, T, n);
    Policy higher = lower;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < T; ++s)
      for (int i = 0; i < n; ++i)
        higher.lambda(s, i) = lower.lambda(s, i) + (1.0 - lower.lambda(s, i)) * unit(rng);
    const auto lo = propagate_occupancy(model, lower);
    const auto hi = propagate_occupancy(model, higher);
    for (int s = 1; s <= T; ++s)
      for (int i = 0; i < n; ++i) CHECK(hi.pi_pre(s, i) <= lo.pi_pre(s, i) + 1e-12);
  }
}

TEST_CASE("psi stays within occupancy bounds by construction") {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 40; ++trial) {
    const Model model = random_model(rng);
    const Policy policy = random_fractional_policy(rng, model.horizon(), model.n_states());
    const auto traj = propagate_occupancy(model, policy);
    const auto report = check_feasibility(traj, model);
    for (const auto& violation : report.violations)
      CHECK(violation.kind == FeasibilityViolation::Kind::BudgetExceeded);
  }
}

TEST_CASE("doubling a single lambda entry doubles its psi") {
  const Model model = validate_model(small_config());
  Policy policy = Policy::zeros(2, 2);
  policy.lambda(0, 1) = 0.25;
  const auto quarter = propagate_occupancy(model, policy);
  policy.lambda(0, 1) = 0.5;
  const auto half = propagate_occupancy(model, policy);
  CHECK(half.psi(0, 1) == 2.0 * quarter.psi(0, 1));
}

TEST_CASE("budget violation is flagged against the paper rates") {
  ModelConfig config = small_config();
  config.organ_rate = 104.0;
  config.patient_rate = 173.0;
  const Model model = validate_model(config);
  const auto traj = propagate_occupancy(model, Policy::ones(2, 2));  // fraction 1 > 0.601
  const auto report = check_feasibility(traj, model);
  REQUIRE(!report.feasible());
  bool budget_flagged = false;
  for (const auto& violation : report.violations)
    if (violation.kind == FeasibilityViolation::Kind::BudgetExceeded) {
      budget_flagged = true;
      CHECK(violation.value == doctest::Approx(1.0));
      CHECK(violation.bound == doctest::Approx(104.0 / 173.0));
    }
  CHECK(budget_flagged);
}

TEST_CASE("hand-built trajectory with psi above occupancy is flagged at its cell") {
  const Model model = validate_model(small_config());
  OccupancyTrajectory traj;
  traj.pi_pre = Grid(3, 2);
  traj.pi_post = Grid(2, 2);
  traj.psi = Grid(2, 2);
  traj.death_mass.assign(3, 0.0);
  traj.pi_pre(0, 0) = 0.1;
  traj.psi(1, 1) = 0.2;  // no occupancy there
  const auto report = check_feasibility(traj, model);
  REQUIRE(!report.feasible());
  bool found = false;
  for (const auto& violation : report.violations)
    if (violation.kind == FeasibilityViolation::Kind::PsiAboveOccupancy && violation.period == 1 &&
        violation.state == 1)
      found = true;
  CHECK(found);
}

TEST_CASE("residual waiting-list days match a direct expectation") {
  const Model model = validate_model(small_config());
  const Grid residual = residual_waitlist_days(model);
  // Last period: one full period then certain death.
  CHECK(residual(1, 0) == 30.0);
  CHECK(residual(1, 1) == 30.0);
  // Earlier: 30 days plus survival-weighted continuation.
  CHECK(residual(0, 0) == doctest::Approx(30.0 + (0.5 + 0.3) * 30.0));
  CHECK(residual(0, 1) == doctest::Approx(30.0 + (0.1 + 0.5) * 30.0));
}

TEST_CASE("with_initial_dist validates its argument") {
  const Model model = validate_model(small_config());
  CHECK_THROWS_AS(model.with_initial_dist({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(model.with_initial_dist({1.0}), std::invalid_argument);
  const Model other = model.with_initial_dist({0.1, 0.9});
  CHECK(other.initial(1) == 0.9);
}
