#include "lungalloc/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lungalloc/solver.hpp"

namespace lungalloc {

AllocableSet allocable_set(const Model& model, double penalty) {
  return allocable_set_from_phi(backward_pass(model, penalty).phi, penalty);
}

AllocableSet allocable_set_from_phi(const Grid& phi, double penalty) {
  AllocableSet set;
  set.penalty = penalty;
  for (int s = 0; s < phi.periods(); ++s)
    for (int i = 0; i < phi.states(); ++i)
      if (phi(s, i) > penalty) set.members.insert({s, i});
  return set;
}

RankingTable::RankingTable(int periods, int states, std::vector<RankEntry> entries)
    : periods_(periods), states_(states), entries_(std::move(entries)) {
  if (static_cast<int>(entries_.size()) != periods * states)
    throw std::invalid_argument("ranking table must cover every (period, state) pair");
  std::sort(entries_.begin(), entries_.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.phi_at_zero != b.phi_at_zero) return a.phi_at_zero > b.phi_at_zero;
    if (a.period != b.period) return a.period > b.period;
    return a.state < b.state;
  });
  order_index_of_cell_.assign(entries_.size(), -1);
  for (int pos = 0; pos < static_cast<int>(entries_.size()); ++pos) {
    const RankEntry& e = entries_[pos];
    order_index_of_cell_[static_cast<size_t>(e.period) * states_ + e.state] = pos;
  }
}

const RankEntry& RankingTable::entry(int period, int state) const {
  return entries_[order_index(period, state)];
}

int RankingTable::order_index(int period, int state) const {
  return order_index_of_cell_[static_cast<size_t>(period) * states_ + state];
}

int default_rank_steps(const Model& model) {
  return 10 * model.n_states() * model.horizon();
}

RankingTable rank_pairs(const Model& model, double alpha, int n_steps) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (n_steps < 1) throw std::invalid_argument("n_steps must be at least 1");
  const int n = model.n_states();
  const int T = model.horizon();

  const PolicySolution at_zero = backward_pass(model, 0.0);
  const AllocableSet full = allocable_set_from_phi(at_zero.phi, 0.0);

  double c_prev = bisection_upper_bracket(model);
  AllocableSet prev = allocable_set(model, c_prev);
  // prev starts empty: above the bracket no index clears the penalty.

  std::vector<RankEntry> table(static_cast<size_t>(T) * n);
  for (int s = 0; s < T; ++s)
    for (int i = 0; i < n; ++i) {
      RankEntry& e = table[static_cast<size_t>(s) * n + i];
      e.period = s;
      e.state = i;
      e.phi_at_zero = at_zero.phi(s, i);
    }

  int step = 0;
  while (step < n_steps && prev.members != full.members && c_prev > 0.0) {
    // Largest penalty below c_prev (to resolution alpha) admitting entrants.
    double lo = 0.0;
    double hi = c_prev;
    AllocableSet at_lo = full;  // strictly contains prev while the loop runs
    while (hi - lo > alpha) {
      const double mid = 0.5 * (lo + hi);
      AllocableSet at_mid = allocable_set(model, mid);
      if (at_mid.members.size() > prev.members.size()) {
        lo = mid;
        at_lo = std::move(at_mid);
      } else {
        hi = mid;
      }
    }

    ++step;
    for (const auto& pair : at_lo.members) {
      if (prev.members.count(pair)) continue;
      RankEntry& e = table[static_cast<size_t>(pair.first) * n + pair.second];
      e.rank = step;
      e.entry_penalty = lo;
      e.allocable = true;
    }
    prev = std::move(at_lo);
    c_prev = lo;
  }

  // Pairs outside the penalty-0 set never allocate; order them by phi at
  // penalty 0, equal values sharing a rank.
  std::vector<RankEntry*> never;
  int max_rank = 0;
  for (RankEntry& e : table) {
    if (e.allocable)
      max_rank = std::max(max_rank, e.rank);
    else
      never.push_back(&e);
  }
  std::sort(never.begin(), never.end(),
            [](const RankEntry* a, const RankEntry* b) { return a->phi_at_zero > b->phi_at_zero; });
  int rank = max_rank;
  double prev_phi = std::numeric_limits<double>::infinity();
  for (RankEntry* e : never) {
    if (e->phi_at_zero != prev_phi) {
      ++rank;
      prev_phi = e->phi_at_zero;
    }
    e->rank = rank;
  }

  return RankingTable(T, n, std::move(table));
}

NestingReport verify_nesting(const Model& model, const std::vector<double>& penalties_descending) {
  std::vector<AllocableSet> sets;
  sets.reserve(penalties_descending.size());
  for (double c : penalties_descending) sets.push_back(allocable_set(model, c));
  return verify_nesting(sets);
}

NestingReport verify_nesting(const std::vector<AllocableSet>& sets_descending) {
  NestingReport report;
  for (size_t k = 0; k + 1 < sets_descending.size(); ++k) {
    const AllocableSet& outer = sets_descending[k];
    const AllocableSet& inner = sets_descending[k + 1];
    NestingViolation violation;
    for (const auto& pair : outer.members)
      if (!inner.members.count(pair)) violation.escaped.push_back(pair);
    if (!violation.escaped.empty()) {
      violation.penalty_outer = outer.penalty;
      violation.penalty_inner = inner.penalty;
      report.violations.push_back(std::move(violation));
    }
  }
  return report;
}

}  // namespace lungalloc
