#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lungalloc {

/// Dense period-major table over (waiting period, alive state).
///
/// Alive states are 0-based here and everywhere in the library; the death
/// state only exists inside transition matrices, where it occupies row and
/// column 0 (alive state i maps to matrix index i+1). File formats report
/// states 1-based with 0 reserved for death.
class Grid {
 public:
  Grid() = default;
  Grid(int periods, int states, double value = 0.0)
      : periods_(periods), states_(states),
        data_(static_cast<size_t>(periods) * states, value) {}

  double operator()(int period, int state) const {
    return data_[index(period, state)];
  }
  double& operator()(int period, int state) { return data_[index(period, state)]; }

  int periods() const { return periods_; }
  int states() const { return states_; }
  bool same_shape(const Grid& other) const {
    return periods_ == other.periods_ && states_ == other.states_;
  }
  const std::vector<double>& data() const { return data_; }

 private:
  size_t index(int period, int state) const {
    return static_cast<size_t>(period) * states_ + state;
  }

  int periods_ = 0;
  int states_ = 0;
  std::vector<double> data_;
};

/// Raised by validate_model; carries one message per violated invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Unvalidated parameter bundle, mirroring the model JSON document.
/// transition is [T][n+1][n+1] with death at index 0 in rows and columns.
struct ModelConfig {
  int n_states = 0;
  int horizon = 0;
  double period_days = 30.0;
  std::vector<std::vector<std::vector<double>>> transition;
  std::vector<double> initial_dist;
  std::vector<std::vector<double>> life_gain;  // expected life gain from transplant, days
  std::vector<std::vector<double>> pt_life;    // expected post-transplant residual life, days
  double organ_rate = 0.0;
  double patient_rate = 0.0;
};

/// Validated discrete waiting-list model. Construct through validate_model.
///
/// Conventions:
///   - horizon() periods, indexed s = 0..T-1; any patient still alive at the
///     start of period T-1 dies during it (the last transition matrix sends
///     all alive rows to death).
///   - transition(s, i, j) uses matrix indices with 0 = death; the p_alive /
///     death_prob accessors use 0-based alive states directly.
class Model {
 public:
  int n_states() const { return n_states_; }
  int horizon() const { return horizon_; }
  double period_days() const { return period_days_; }
  double organ_rate() const { return organ_rate_; }
  double patient_rate() const { return patient_rate_; }
  /// Organ budget per arriving patient, rho/tau.
  double budget() const { return organ_rate_ / patient_rate_; }

  double transition(int period, int from, int to) const {
    return trans_[trans_index(period, from, to)];
  }
  double p_alive(int period, int from_alive, int to_alive) const {
    return trans_[trans_index(period, from_alive + 1, to_alive + 1)];
  }
  double death_prob(int period, int from_alive) const {
    return trans_[trans_index(period, from_alive + 1, 0)];
  }
  double initial(int alive_state) const { return initial_dist_[alive_state]; }
  const std::vector<double>& initial_dist() const { return initial_dist_; }

  const Grid& life_gain() const { return life_gain_; }
  const Grid& pt_life() const { return pt_life_; }
  double max_abs_life_gain() const;

  /// Same model with a different (validated) initial state distribution.
  Model with_initial_dist(const std::vector<double>& dist) const;

 private:
  Model() = default;
  friend Model validate_model(const ModelConfig& config);

  size_t trans_index(int period, int from, int to) const {
    const int m = n_states_ + 1;
    return (static_cast<size_t>(period) * m + from) * m + to;
  }

  int n_states_ = 0;
  int horizon_ = 0;
  double period_days_ = 30.0;
  std::vector<double> trans_;  // T * (n+1) * (n+1), row-major
  std::vector<double> initial_dist_;
  Grid life_gain_;
  Grid pt_life_;
  double organ_rate_ = 0.0;
  double patient_rate_ = 0.0;
};

/// Checks every model invariant and returns the validated model, or throws
/// ValidationError naming each violation (non-stochastic rows, negative
/// probabilities, missing certain death at the horizon, rho >= tau,
/// mismatched table dimensions).
Model validate_model(const ModelConfig& config);

/// Per-(period, state) allocation intensities in [0, 1].
struct Policy {
  Grid lambda;

  Policy() = default;
  explicit Policy(Grid values) : lambda(std::move(values)) {}
  static Policy zeros(int periods, int states) { return Policy(Grid(periods, states, 0.0)); }
  static Policy ones(int periods, int states) { return Policy(Grid(periods, states, 1.0)); }
};

/// Occupancy propagated under a policy.
///
/// pi_pre has horizon+1 rows so the post-horizon remainder is visible;
/// death_mass[s] is the cumulative waiting-list death probability before the
/// start of period s (size horizon+1, death_mass[0] = 0).
struct OccupancyTrajectory {
  Grid pi_pre;
  Grid pi_post;
  Grid psi;
  std::vector<double> death_mass;
};

/// Pushes the initial distribution through allocation and transition,
/// period by period: allocation removes lambda * pi_pre at the start of the
/// period, survivors transition at its end.
OccupancyTrajectory propagate_occupancy(const Model& model, const Policy& policy);

/// Limiting average expected life gain per arriving patient,
/// sum over (s, i) of psi * life_gain. Days.
double objective_life_gain(const OccupancyTrajectory& traj, const Model& model);

/// Limiting proportion of patients transplanted, sum of psi.
double transplant_fraction(const OccupancyTrajectory& traj);

struct FeasibilityViolation {
  enum class Kind { PsiAboveOccupancy, NegativePsi, NegativeOccupancy, BudgetExceeded };
  Kind kind;
  int period = -1;
  int state = -1;
  double value = 0.0;
  double bound = 0.0;
};

struct FeasibilityReport {
  std::vector<FeasibilityViolation> violations;
  double fraction = 0.0;
  bool feasible() const { return violations.empty(); }
};

/// Reports every per-(period, state) bound violation plus the budget check
/// transplant_fraction <= rho/tau. Empty report iff feasible.
FeasibilityReport check_feasibility(const OccupancyTrajectory& traj, const Model& model);

/// Expected remaining waiting-list days absent transplantation, per
/// (period, state): a patient alive at the start of a period accrues the full
/// period before transitioning.
Grid residual_waitlist_days(const Model& model);

}  // namespace lungalloc
