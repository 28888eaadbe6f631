#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lungalloc/model.hpp"
#include "lungalloc/ranking.hpp"
#include "lungalloc/rng.hpp"

namespace lungalloc {

/// An allocation strategy: a rule inducing a total order over
/// (waiting period, state) cells, or uniform random choice.
struct StrategySpec {
  enum class Kind { Ranking, Las, RefinedLas, Random, Worst };

  Kind kind = Kind::Random;
  std::string name = "random";
  RankingTable ranking;  // Ranking and Worst
  Grid scores;           // Las and RefinedLas, per (period, state)

  static StrategySpec ranking_strategy(RankingTable table, std::string name = "proposed");
  static StrategySpec worst_strategy(RankingTable table, std::string name = "worst");
  static StrategySpec las_strategy(Grid scores, std::string name = "las");
  static StrategySpec refined_las_strategy(Grid scores, std::string name = "refined_las");
  static StrategySpec random_strategy(std::string name = "random");
};

/// Explicit priority order the simulator uses. For deterministic strategies,
/// ordered_cells lists every (period, state) from first pick to last;
/// priority_of_cell inverts it. Uniform-random strategies carry no order.
struct StrategyOrder {
  bool uniform_random = false;
  std::vector<std::pair<int, int>> ordered_cells;
  std::vector<int> priority_of_cell;  // index: period * states + state

  int priority(int period, int state, int states) const {
    return priority_of_cell[static_cast<size_t>(period) * states + state];
  }
};

/// Materializes the order: ranking order (ties broken by larger phi at
/// penalty 0, longer waiting time, then state index), its exact reversal for
/// Worst, score-descending for the score strategies (ties by longer waiting
/// time, then state index).
StrategyOrder strategy_order(const StrategySpec& strategy, int periods, int states);

/// How transplanted patients are credited post-transplant life: the expected
/// value at their (period, state), or an exponential draw with that mean.
enum class PostTransplantCredit { Expected, ExponentialSample };

struct PatientRecord {
  int arrival_period = 0;
  /// Counterfactual state per waiting period while alive (0-based states);
  /// death follows the last entry unless the horizon intervenes first.
  std::vector<int> path;
  bool transplanted = false;
  int transplant_period = -1;  // waiting periods at transplant
  int transplant_state = -1;
  double waiting_days = 0.0;
  double post_transplant_days = 0.0;
  double total_days() const { return waiting_days + post_transplant_days; }
};

/// One simulated waiting-list realization.
struct RunOutcome {
  std::vector<PatientRecord> patients;
  long organs_arrived = 0;
  long transplants = 0;
  // Means over every arrived patient, in days.
  double mean_waiting = 0.0;
  double mean_post_transplant = 0.0;
  double mean_total() const { return mean_waiting + mean_post_transplant; }
  // Waiting time split by outcome (Table-style reporting).
  double mean_wait_transplanted = 0.0;
  double mean_wait_untransplanted = 0.0;
};

/// Shared randomness of one replication: arrivals, initial states and full
/// counterfactual paths, plus organ counts. Replaying the same draw under
/// different strategies yields exactly paired comparisons. Patients are kept
/// in a canonical order (arrival period, then bundle content) so outcomes do
/// not depend on the order patients happened to be generated in.
struct ReplicationDraw {
  int arrival_periods = 0;
  std::vector<PatientRecord> patients;  // paths filled, outcomes blank
  std::vector<int> organs_per_period;   // size arrival_periods
};

ReplicationDraw generate_draw(const Model& model, uint64_t root_seed, uint64_t replication,
                              int arrival_periods);

/// Runs one strategy over a prepared draw. alloc_stream drives the
/// within-cell (or, for random strategies, within-list) patient choice.
RunOutcome simulate_prepared(const Model& model, const ReplicationDraw& draw,
                             const StrategyOrder& order, Substream alloc_stream,
                             PostTransplantCredit credit = PostTransplantCredit::Expected,
                             Substream* pt_stream = nullptr);

/// Seeded single run: per period, patient arrivals ~ Poisson(tau) with
/// initial states from the model's initial distribution and organ arrivals
/// ~ Poisson(rho); each organ goes to the highest-priority living patient;
/// survivors transition at period end. After arrival_periods, arrivals and
/// organs cease and the list drains to absorption. Deterministic given seed.
RunOutcome simulate_run(const Model& model, const StrategySpec& strategy, uint64_t seed,
                        int arrival_periods,
                        PostTransplantCredit credit = PostTransplantCredit::Expected);

struct StrategySummary {
  std::string name;
  double mean_total = 0.0, sd_total = 0.0;
  double mean_waiting = 0.0, sd_waiting = 0.0;
  double mean_post_transplant = 0.0, sd_post_transplant = 0.0;
  double mean_wait_transplanted = 0.0, sd_wait_transplanted = 0.0;
  double mean_wait_untransplanted = 0.0, sd_wait_untransplanted = 0.0;
};

struct SummaryTable {
  int replications = 0;
  std::vector<StrategySummary> rows;
  /// Per-replication mean total life, one row per strategy (for paired
  /// comparisons across strategies).
  std::vector<std::vector<double>> total_by_replication;
};

/// Replicates paired runs: each replication generates one arrival/transition
/// stream and replays it identically for every strategy; summaries are means
/// and standard deviations over replications.
SummaryTable replicate(const Model& model, const std::vector<StrategySpec>& strategies, int n_runs,
                       uint64_t base_seed, int arrival_periods,
                       PostTransplantCredit credit = PostTransplantCredit::Expected);

}  // namespace lungalloc
