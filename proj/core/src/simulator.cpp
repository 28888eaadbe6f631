#include "lungalloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace lungalloc {

StrategySpec StrategySpec::ranking_strategy(RankingTable table, std::string name) {
  StrategySpec s;
  s.kind = Kind::Ranking;
  s.name = std::move(name);
  s.ranking = std::move(table);
  return s;
}

StrategySpec StrategySpec::worst_strategy(RankingTable table, std::string name) {
  StrategySpec s;
  s.kind = Kind::Worst;
  s.name = std::move(name);
  s.ranking = std::move(table);
  return s;
}

StrategySpec StrategySpec::las_strategy(Grid scores, std::string name) {
  StrategySpec s;
  s.kind = Kind::Las;
  s.name = std::move(name);
  s.scores = std::move(scores);
  return s;
}

StrategySpec StrategySpec::refined_las_strategy(Grid scores, std::string name) {
  StrategySpec s;
  s.kind = Kind::RefinedLas;
  s.name = std::move(name);
  s.scores = std::move(scores);
  return s;
}

StrategySpec StrategySpec::random_strategy(std::string name) {
  StrategySpec s;
  s.kind = Kind::Random;
  s.name = std::move(name);
  return s;
}

namespace {

StrategyOrder order_from_cells(std::vector<std::pair<int, int>> cells, int states) {
  StrategyOrder order;
  order.ordered_cells = std::move(cells);
  order.priority_of_cell.assign(order.ordered_cells.size(), -1);
  for (int pos = 0; pos < static_cast<int>(order.ordered_cells.size()); ++pos) {
    const auto& [s, i] = order.ordered_cells[pos];
    order.priority_of_cell[static_cast<size_t>(s) * states + i] = pos;
  }
  return order;
}

std::vector<std::pair<int, int>> score_descending_cells(const Grid& scores) {
  std::vector<std::pair<int, int>> cells;
  cells.reserve(static_cast<size_t>(scores.periods()) * scores.states());
  for (int s = 0; s < scores.periods(); ++s)
    for (int i = 0; i < scores.states(); ++i) cells.emplace_back(s, i);
  std::stable_sort(cells.begin(), cells.end(), [&](const auto& a, const auto& b) {
    const double sa = scores(a.first, a.second);
    const double sb = scores(b.first, b.second);
    if (sa != sb) return sa > sb;
    if (a.first != b.first) return a.first > b.first;  // longer waiting time first
    return a.second < b.second;
  });
  return cells;
}

}  // namespace

StrategyOrder strategy_order(const StrategySpec& strategy, int periods, int states) {
  switch (strategy.kind) {
    case StrategySpec::Kind::Random: {
      StrategyOrder order;
      order.uniform_random = true;
      return order;
    }
    case StrategySpec::Kind::Ranking:
    case StrategySpec::Kind::Worst: {
      if (strategy.ranking.periods() != periods || strategy.ranking.states() != states)
        throw std::invalid_argument("ranking table dimensions do not match model");
      std::vector<std::pair<int, int>> cells;
      cells.reserve(strategy.ranking.entries().size());
      for (const RankEntry& e : strategy.ranking.entries()) cells.emplace_back(e.period, e.state);
      if (strategy.kind == StrategySpec::Kind::Worst) std::reverse(cells.begin(), cells.end());
      return order_from_cells(std::move(cells), states);
    }
    case StrategySpec::Kind::Las:
    case StrategySpec::Kind::RefinedLas: {
      if (strategy.scores.periods() != periods || strategy.scores.states() != states)
        throw std::invalid_argument("score grid dimensions do not match model");
      return order_from_cells(score_descending_cells(strategy.scores), states);
    }
  }
  throw std::logic_error("unreachable strategy kind");
}

namespace {

/// Samples the state after one period; -1 means death.
int sample_next_state(const Model& model, int period, int alive_state, Substream& stream) {
  const double u = stream.uniform();
  double acc = model.death_prob(period, alive_state);
  if (u < acc) return -1;
  const int n = model.n_states();
  for (int j = 0; j < n; ++j) {
    acc += model.p_alive(period, alive_state, j);
    if (u < acc) return j;
  }
  return n - 1;
}

}  // namespace

ReplicationDraw generate_draw(const Model& model, uint64_t root_seed, uint64_t replication,
                              int arrival_periods) {
  if (arrival_periods < 1) throw std::invalid_argument("arrival_periods must be at least 1");
  const int n = model.n_states();
  const int T = model.horizon();

  Substream arrivals(root_seed, replication, StreamPurpose::PatientArrivals);
  Substream initial_states(root_seed, replication, StreamPurpose::InitialStates);
  Substream transitions(root_seed, replication, StreamPurpose::Transitions);
  Substream organs(root_seed, replication, StreamPurpose::OrganArrivals);

  ReplicationDraw draw;
  draw.arrival_periods = arrival_periods;
  draw.organs_per_period.resize(arrival_periods);

  for (int p = 0; p < arrival_periods; ++p) {
    const int count = arrivals.poisson(model.patient_rate());
    for (int k = 0; k < count; ++k) {
      PatientRecord rec;
      rec.arrival_period = p;
      rec.path.push_back(initial_states.categorical(model.initial_dist().data(), n));
      for (int s = 0; s + 1 < T; ++s) {
        const int next = sample_next_state(model, s, rec.path.back(), transitions);
        if (next < 0) break;
        rec.path.push_back(next);
      }
      draw.patients.push_back(std::move(rec));
    }
    draw.organs_per_period[p] = organs.poisson(model.organ_rate());
  }

  // Canonical order: outcomes must not depend on the order patients happened
  // to be generated in within a period.
  std::sort(draw.patients.begin(), draw.patients.end(),
            [](const PatientRecord& a, const PatientRecord& b) {
              if (a.arrival_period != b.arrival_period) return a.arrival_period < b.arrival_period;
              return a.path < b.path;
            });
  return draw;
}

RunOutcome simulate_prepared(const Model& model, const ReplicationDraw& draw,
                             const StrategyOrder& order, Substream alloc_stream,
                             PostTransplantCredit credit, Substream* pt_stream) {
  const int n = model.n_states();
  const int T = model.horizon();
  const double period_days = model.period_days();
  if (!order.uniform_random &&
      static_cast<int>(order.priority_of_cell.size()) != T * n)
    throw std::invalid_argument("strategy order dimensions do not match model");
  if (credit == PostTransplantCredit::ExponentialSample && pt_stream == nullptr)
    throw std::invalid_argument("exponential credit needs a post-transplant stream");

  RunOutcome outcome;
  outcome.patients = draw.patients;
  auto& patients = outcome.patients;
  const int total_patients = static_cast<int>(patients.size());

  // Canonical processing order: patients sorted by (arrival period, bundle
  // content). Outcomes then cannot depend on how patients were labeled
  // within a period; patients with identical bundles are interchangeable.
  std::vector<int> canonical(total_patients);
  for (int k = 0; k < total_patients; ++k) canonical[k] = k;
  std::sort(canonical.begin(), canonical.end(), [&](int a, int b) {
    if (patients[a].arrival_period != patients[b].arrival_period)
      return patients[a].arrival_period < patients[b].arrival_period;
    return patients[a].path < patients[b].path;
  });

  std::vector<std::vector<int>> buckets(static_cast<size_t>(T) * n);
  std::vector<int> touched_cells;
  // Occupied cells keyed by strategy priority (or plain cell id for uniform
  // random strategies) so the best pick and the iteration order are fixed.
  std::set<int> occupied;

  std::vector<int> active;
  int next_arrival = 0;
  int alive_count = 0;

  for (int p = 0;; ++p) {
    if (p < draw.arrival_periods) {
      while (next_arrival < total_patients &&
             patients[canonical[next_arrival]].arrival_period == p)
        active.push_back(canonical[next_arrival++]);
    } else if (active.empty()) {
      break;
    }

    // Bucket the active list by (waiting periods, current state). Patients
    // are inserted in canonical order.
    for (int cell : touched_cells) buckets[cell].clear();
    touched_cells.clear();
    occupied.clear();
    alive_count = static_cast<int>(active.size());
    for (int idx : active) {
      const PatientRecord& rec = patients[idx];
      const int s = p - rec.arrival_period;
      const int cell = s * n + rec.path[s];
      if (buckets[cell].empty()) {
        touched_cells.push_back(cell);
        occupied.insert(order.uniform_random ? cell : order.priority_of_cell[cell]);
      }
      buckets[cell].push_back(idx);
    }

    const int organ_count = p < draw.arrival_periods ? draw.organs_per_period[p] : 0;
    outcome.organs_arrived += organ_count;
    for (int o = 0; o < organ_count && alive_count > 0; ++o) {
      int cell;
      int pick_pos;
      if (order.uniform_random) {
        // Uniform over the whole list: locate the k-th patient across the
        // occupied cells.
        int k = static_cast<int>(alloc_stream.uniform_index(alive_count));
        auto it = occupied.begin();
        while (k >= static_cast<int>(buckets[*it].size())) {
          k -= static_cast<int>(buckets[*it].size());
          ++it;
        }
        cell = *it;
        pick_pos = k;
      } else {
        cell = order.ordered_cells[*occupied.begin()].first * n +
               order.ordered_cells[*occupied.begin()].second;
        // Patients within a cell are interchangeable; pick one uniformly.
        pick_pos = static_cast<int>(alloc_stream.uniform_index(buckets[cell].size()));
      }

      const int idx = buckets[cell][pick_pos];
      buckets[cell].erase(buckets[cell].begin() + pick_pos);
      if (buckets[cell].empty())
        occupied.erase(order.uniform_random ? cell : order.priority_of_cell[cell]);
      --alive_count;

      PatientRecord& rec = patients[idx];
      const int s = p - rec.arrival_period;
      rec.transplanted = true;
      rec.transplant_period = s;
      rec.transplant_state = rec.path[s];
      rec.waiting_days = period_days * s;
      const double mean_pt = model.pt_life()(s, rec.path[s]);
      rec.post_transplant_days = credit == PostTransplantCredit::Expected
                                     ? mean_pt
                                     : (mean_pt > 0.0 ? pt_stream->exponential(mean_pt) : 0.0);
      ++outcome.transplants;
    }

    // Period end: survivors advance along their counterfactual paths.
    std::vector<int> still_active;
    still_active.reserve(active.size());
    for (int idx : active) {
      PatientRecord& rec = patients[idx];
      if (rec.transplanted) continue;
      const int s = p - rec.arrival_period;
      if (s + 1 < static_cast<int>(rec.path.size())) {
        still_active.push_back(idx);
      } else {
        rec.waiting_days = period_days * rec.path.size();
      }
    }
    active = std::move(still_active);
  }

  double sum_waiting = 0.0, sum_pt = 0.0, sum_wait_tx = 0.0, sum_wait_untx = 0.0;
  long untransplanted = 0;
  for (const PatientRecord& rec : patients) {
    sum_waiting += rec.waiting_days;
    sum_pt += rec.post_transplant_days;
    if (rec.transplanted)
      sum_wait_tx += rec.waiting_days;
    else {
      sum_wait_untx += rec.waiting_days;
      ++untransplanted;
    }
  }
  if (total_patients > 0) {
    outcome.mean_waiting = sum_waiting / total_patients;
    outcome.mean_post_transplant = sum_pt / total_patients;
  }
  if (outcome.transplants > 0) outcome.mean_wait_transplanted = sum_wait_tx / outcome.transplants;
  if (untransplanted > 0) outcome.mean_wait_untransplanted = sum_wait_untx / untransplanted;
  return outcome;
}

RunOutcome simulate_run(const Model& model, const StrategySpec& strategy, uint64_t seed,
                        int arrival_periods, PostTransplantCredit credit) {
  const ReplicationDraw draw = generate_draw(model, seed, 0, arrival_periods);
  const StrategyOrder order = strategy_order(strategy, model.horizon(), model.n_states());
  Substream alloc(seed, 0, StreamPurpose::Allocation);
  Substream pt(seed, 0, StreamPurpose::PostTransplant);
  return simulate_prepared(model, draw, order, alloc, credit, &pt);
}

namespace {

struct Accumulator {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    return values.empty()
               ? 0.0
               : std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  }
  double sd() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / (values.size() - 1));
  }
};

}  // namespace

SummaryTable replicate(const Model& model, const std::vector<StrategySpec>& strategies, int n_runs,
                       uint64_t base_seed, int arrival_periods, PostTransplantCredit credit) {
  if (n_runs < 2) throw std::invalid_argument("replication needs at least 2 runs");
  if (strategies.empty()) throw std::invalid_argument("no strategies given");

  const int T = model.horizon();
  const int n = model.n_states();
  std::vector<StrategyOrder> orders;
  orders.reserve(strategies.size());
  for (const StrategySpec& s : strategies) orders.push_back(strategy_order(s, T, n));

  const size_t k = strategies.size();
  std::vector<Accumulator> total(k), waiting(k), post(k), wait_tx(k), wait_untx(k);

  SummaryTable table;
  table.replications = n_runs;
  table.total_by_replication.assign(k, {});

  for (int rep = 0; rep < n_runs; ++rep) {
    const ReplicationDraw draw = generate_draw(model, base_seed, rep, arrival_periods);
    for (size_t j = 0; j < k; ++j) {
      // One allocation stream per (replication, purpose), replayed from the
      // start for every strategy: identical strategies yield identical runs.
      Substream alloc(base_seed, rep, StreamPurpose::Allocation);
      Substream pt(base_seed, rep, StreamPurpose::PostTransplant);
      const RunOutcome outcome = simulate_prepared(model, draw, orders[j], alloc, credit, &pt);
      total[j].add(outcome.mean_total());
      waiting[j].add(outcome.mean_waiting);
      post[j].add(outcome.mean_post_transplant);
      wait_tx[j].add(outcome.mean_wait_transplanted);
      wait_untx[j].add(outcome.mean_wait_untransplanted);
      table.total_by_replication[j].push_back(outcome.mean_total());
    }
  }

  for (size_t j = 0; j < k; ++j) {
    StrategySummary row;
    row.name = strategies[j].name;
    row.mean_total = total[j].mean();
    row.sd_total = total[j].sd();
    row.mean_waiting = waiting[j].mean();
    row.sd_waiting = waiting[j].sd();
    row.mean_post_transplant = post[j].mean();
    row.sd_post_transplant = post[j].sd();
    row.mean_wait_transplanted = wait_tx[j].mean();
    row.sd_wait_transplanted = wait_tx[j].sd();
    row.mean_wait_untransplanted = wait_untx[j].mean();
    row.sd_wait_untransplanted = wait_untx[j].sd();
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace lungalloc
