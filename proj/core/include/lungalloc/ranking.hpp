#pragma once

#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "lungalloc/model.hpp"

namespace lungalloc {

/// Pairs (period, state) whose allocation index exceeds the penalty.
struct AllocableSet {
  double penalty = 0.0;
  std::set<std::pair<int, int>> members;
};

/// Allocable set at one penalty, from a fresh backward pass.
AllocableSet allocable_set(const Model& model, double penalty);

/// Membership test against an existing phi table (used when sweeping many
/// penalties over one solved table, and by nesting checks on fixtures).
AllocableSet allocable_set_from_phi(const Grid& phi, double penalty);

struct RankEntry {
  int period = 0;
  int state = 0;
  int rank = 0;  // 1 = highest transplant priority; ties share a rank
  /// Penalty at which the pair entered the allocable set; NaN for pairs that
  /// are never allocable at any penalty >= 0.
  double entry_penalty = std::numeric_limits<double>::quiet_NaN();
  double phi_at_zero = 0.0;
  bool allocable = false;
};

/// Total priority order over every (period, state) pair.
///
/// Pairs entering the allocable set at higher penalties get smaller rank
/// numbers; pairs entering within one resolution step share a rank. Pairs
/// never allocable at penalty 0 are ranked after all finite ranks, by their
/// phi at penalty 0 descending. The total order breaks shared ranks by
/// larger phi at penalty 0, then longer waiting time, then state index.
class RankingTable {
 public:
  RankingTable() = default;
  RankingTable(int periods, int states, std::vector<RankEntry> entries);

  int periods() const { return periods_; }
  int states() const { return states_; }
  /// Entries in total priority order (position 0 = first pick).
  const std::vector<RankEntry>& entries() const { return entries_; }
  const RankEntry& entry(int period, int state) const;
  int rank(int period, int state) const { return entry(period, state).rank; }
  /// Position of the pair in the total order, 0-based.
  int order_index(int period, int state) const;

 private:
  int periods_ = 0;
  int states_ = 0;
  std::vector<RankEntry> entries_;        // sorted by priority
  std::vector<int> order_index_of_cell_;  // cell = period * states + state
};

int default_rank_steps(const Model& model);

/// Sweeps the penalty downward from an empty allocable set, binary-searching
/// at each step for the largest penalty (to resolution alpha) at which new
/// pairs enter, and assigns those pairs the step number as their rank.
RankingTable rank_pairs(const Model& model, double alpha, int n_steps);

struct NestingViolation {
  double penalty_outer = 0.0;  // larger penalty
  double penalty_inner = 0.0;  // smaller penalty
  std::vector<std::pair<int, int>> escaped;  // members of outer missing from inner
};

struct NestingReport {
  std::vector<NestingViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks that allocable sets are nested along a descending penalty grid.
NestingReport verify_nesting(const Model& model, const std::vector<double>& penalties_descending);
NestingReport verify_nesting(const std::vector<AllocableSet>& sets_descending);

}  // namespace lungalloc
