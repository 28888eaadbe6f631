#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "lungalloc/io.hpp"
#include "lungalloc/ranking.hpp"
#include "lungalloc/solver.hpp"
#include "lungalloc/synthetic.hpp"
#include "random_models.hpp"

using namespace lungalloc;
using lungalloc::testing::random_model;

namespace {

Model chain_model(const std::vector<double>& gains_at_entry) {
  // T = 1: the index equals the gain, so ranking is just descending gain.
  const int n = static_cast<int>(gains_at_entry.size());
  ModelConfig config;
  config.n_states = n;
  config.horizon = 1;
  config.organ_rate = 10.0;
  config.patient_rate = 100.0;
  config.initial_dist.assign(n, 1.0 / n);
  config.transition.assign(1, std::vector<std::vector<double>>(n + 1, std::vector<double>(n + 1, 0.0)));
  config.transition[0][0][0] = 1.0;
  for (int i = 1; i <= n; ++i) config.transition[0][i][0] = 1.0;
  config.life_gain = {gains_at_entry};
  config.pt_life.assign(1, std::vector<double>(n, 0.0));
  return validate_model(config);
}

}  // namespace

TEST_CASE("allocable set is empty above the bracket") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Model model = random_model(rng);
    CHECK(allocable_set(model, bisection_upper_bracket(model)).members.empty());
  }
}

TEST_CASE("zero gains give an empty allocable set at penalty zero") {
  std::mt19937_64 rng(12);
  testing::RandomModelParams params;
  params.gain_lo = 0.0;
  params.gain_hi = 0.0;
  const Model model = random_model(rng, params);
  CHECK(allocable_set(model, 0.0).members.empty());
}

TEST_CASE("allocable sets nest as the penalty falls") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Model model = random_model(rng);
    const double c_hi = bisection_upper_bracket(model);
    const AllocableSet outer = allocable_set(model, 0.6 * c_hi);
    const AllocableSet inner = allocable_set(model, 0.2 * c_hi);
    for (const auto& pair : outer.members) CHECK(inner.members.count(pair) == 1);
  }
}

TEST_CASE("invalid sweep parameters are rejected") {
  const Model model = chain_model({5.0, 3.0});
  CHECK_THROWS_AS(rank_pairs(model, 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(rank_pairs(model, 1e-4, 0), std::invalid_argument);
}

TEST_CASE("single-period ranking is the descending gain order") {
  const Model model = chain_model({5.0, 42.0, -3.0, 17.0});
  const RankingTable table = rank_pairs(model, 1e-5, 100);
  // Expected priority: states with gains 42, 17, 5, then the never-allocable
  // -3 pair last.
  const auto& entries = table.entries();
  REQUIRE(entries.size() == 4);
  CHECK(entries[0].state == 1);
  CHECK(entries[1].state == 3);
  CHECK(entries[2].state == 0);
  CHECK(entries[3].state == 2);
  CHECK(entries[0].rank < entries[1].rank);
  CHECK(entries[1].rank < entries[2].rank);
  CHECK(entries[2].rank < entries[3].rank);
  CHECK(entries[3].allocable == false);
  CHECK(std::isnan(entries[3].entry_penalty));
  CHECK(entries[3].phi_at_zero == -3.0);
  // Entry penalties sit within resolution of the gains.
  CHECK(entries[0].entry_penalty == doctest::Approx(42.0).epsilon(1e-3));
  CHECK(entries[1].entry_penalty == doctest::Approx(17.0).epsilon(1e-3));
}

TEST_CASE("constant gain over one state shares a single rank across periods") {
  ModelConfig config;
  config.n_states = 1;
  config.horizon = 4;
  config.organ_rate = 10.0;
  config.patient_rate = 100.0;
  config.initial_dist = {1.0};
  config.transition.assign(4, {{1.0, 0.0}, {0.3, 0.7}});
  config.transition[3] = {{1.0, 0.0}, {1.0, 0.0}};
  config.life_gain.assign(4, {25.0});
  config.pt_life.assign(4, {100.0});
  const Model model = validate_model(config);

  // With a constant gain the index is 25 at every period: if the
  // continuation transplants at value k with probability g, then
  // (k - g k) / (1 - g) = k.
  const auto solution = backward_pass(model, 20.0);
  for (int s = 0; s < 4; ++s) CHECK(solution.phi(s, 0) == doctest::Approx(25.0));

  const RankingTable table = rank_pairs(model, 1e-5, 40);
  for (const RankEntry& e : table.entries()) {
    CHECK(e.rank == 1);
    CHECK(e.allocable);
  }
}

TEST_CASE("ranks respect entry order and entry penalties are monotone") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Model model = random_model(rng);
    const RankingTable table = rank_pairs(model, 1e-5, default_rank_steps(model));
    const auto& entries = table.entries();
    for (size_t a = 0; a + 1 < entries.size(); ++a) {
      CHECK(entries[a].rank <= entries[a + 1].rank);
      if (entries[a].allocable && entries[a + 1].allocable &&
          entries[a].rank < entries[a + 1].rank)
        CHECK(entries[a].entry_penalty >= entries[a + 1].entry_penalty);
    }
  }
}

TEST_CASE("halving the resolution never reorders separated pairs") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 8; ++trial) {
    const Model model = random_model(rng);
    const double alpha = 1e-2;
    const RankingTable coarse = rank_pairs(model, alpha, default_rank_steps(model));
    const RankingTable fine = rank_pairs(model, alpha / 2.0, default_rank_steps(model));
    for (const RankEntry& a : coarse.entries())
      for (const RankEntry& b : coarse.entries()) {
        if (!a.allocable || !b.allocable) continue;
        if (a.rank < b.rank)
          CHECK(fine.rank(a.period, a.state) < fine.rank(b.period, b.state));
      }
  }
}

TEST_CASE("ranking is deterministic") {
  std::mt19937_64 rng(16);
  const Model model = random_model(rng);
  const RankingTable first = rank_pairs(model, 1e-4, default_rank_steps(model));
  const RankingTable second = rank_pairs(model, 1e-4, default_rank_steps(model));
  REQUIRE(first.entries().size() == second.entries().size());
  for (size_t k = 0; k < first.entries().size(); ++k) {
    const RankEntry& a = first.entries()[k];
    const RankEntry& b = second.entries()[k];
    CHECK(a.period == b.period);
    CHECK(a.state == b.state);
    CHECK(a.rank == b.rank);
    CHECK((std::isnan(a.entry_penalty) ? std::isnan(b.entry_penalty)
                                       : a.entry_penalty == b.entry_penalty));
    CHECK(a.phi_at_zero == b.phi_at_zero);
  }
}

TEST_CASE("nesting verification passes on solved models") {
  std::mt19937_64 rng(17);
  const Model model = random_model(rng);
  const double c_hi = bisection_upper_bracket(model);
  std::vector<double> grid;
  for (int k = 19; k >= 0; --k) grid.push_back(c_hi * k / 19.0);
  CHECK(verify_nesting(model, grid).ok());
  CHECK(verify_nesting(model, {0.5 * c_hi}).ok());  // single penalty: trivially ok
}

TEST_CASE("corrupted index tables are caught by the nesting check") {
  Grid phi_outer(2, 2);
  phi_outer(0, 0) = 10.0;
  phi_outer(1, 1) = 8.0;
  Grid phi_inner(2, 2);  // drops the (0,0) pair that the outer set contains
  phi_inner(1, 1) = 8.0;
  const std::vector<AllocableSet> sets = {
      allocable_set_from_phi(phi_outer, 5.0),
      allocable_set_from_phi(phi_inner, 1.0),
  };
  const NestingReport report = verify_nesting(sets);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].penalty_outer == 5.0);
  CHECK(report.violations[0].penalty_inner == 1.0);
  REQUIRE(report.violations[0].escaped.size() == 1);
  CHECK(report.violations[0].escaped[0] == std::pair<int, int>{0, 0});
}

TEST_CASE("heatmap export covers every cell in period-major grid layout") {
  SyntheticSpec spec;
  spec.wl_bins = 4;
  spec.mu_bins = 4;
  spec.periods = 12;
  const SyntheticBundle bundle = make_synthetic(spec);
  const RankingTable table = rank_pairs(bundle.model, 1e-3, default_rank_steps(bundle.model));

  const auto path = std::filesystem::temp_directory_path() / "lungalloc_heatmap_test.json";
  write_heatmap_json(table, 4, 4, path.string());
  std::ifstream in(path);
  REQUIRE(in.good());
  nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc.at("periods") == 12);
  CHECK(doc.at("wl_bins") == 4);
  CHECK(doc.at("mu_bins") == 4);
  REQUIRE(doc.at("rank").size() == 12);
  for (const auto& period_grid : doc.at("rank")) {
    REQUIRE(period_grid.size() == 4);
    for (const auto& row : period_grid) {
      REQUIRE(row.size() == 4);
      for (const auto& value : row) CHECK(value.get<int>() >= 1);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("grid factorization must match the state count") {
  const Model model = chain_model({5.0, 3.0, 1.0});
  const RankingTable table = rank_pairs(model, 1e-4, 10);
  CHECK_THROWS_AS(write_heatmap_json(table, 2, 2, "/tmp/never_written.json"),
                  std::invalid_argument);
}
