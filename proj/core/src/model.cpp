#include "lungalloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace lungalloc {

namespace {

constexpr double kProbTol = 1e-12;

std::string join_issues(const std::vector<std::string>& issues) {
  std::ostringstream out;
  out << "model validation failed (" << issues.size() << " issue"
      << (issues.size() == 1 ? "" : "s") << "):";
  for (const auto& issue : issues) out << "\n  - " << issue;
  return out.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

double Model::max_abs_life_gain() const {
  double m = 0.0;
  for (double v : life_gain_.data()) m = std::max(m, std::abs(v));
  return m;
}

Model Model::with_initial_dist(const std::vector<double>& dist) const {
  if (static_cast<int>(dist.size()) != n_states_)
    throw std::invalid_argument("initial distribution has wrong length");
  double sum = 0.0;
  for (double v : dist) {
    if (v < 0.0) throw std::invalid_argument("initial distribution has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbTol)
    throw std::invalid_argument("initial distribution does not sum to 1");
  Model copy = *this;
  copy.initial_dist_ = dist;
  return copy;
}

Model validate_model(const ModelConfig& config) {
  std::vector<std::string> issues;
  const int n = config.n_states;
  const int T = config.horizon;

  if (n < 1) issues.push_back("n_states must be at least 1");
  if (T < 1) issues.push_back("horizon_T must be at least 1");
  if (!(config.period_days > 0.0)) issues.push_back("period_days must be positive");
  if (!issues.empty()) throw ValidationError(std::move(issues));

  const int m = n + 1;
  if (static_cast<int>(config.transition.size()) != T)
    issues.push_back("transition must have horizon_T period matrices, got " +
                     std::to_string(config.transition.size()));
  if (static_cast<int>(config.initial_dist.size()) != n)
    issues.push_back("initial_dist must have n_states entries, got " +
                     std::to_string(config.initial_dist.size()));
  auto check_table = [&](const std::vector<std::vector<double>>& table, const char* name) {
    if (static_cast<int>(table.size()) != T) {
      issues.push_back(std::string(name) + " must have horizon_T rows, got " +
                       std::to_string(table.size()));
      return;
    }
    for (int s = 0; s < T; ++s)
      if (static_cast<int>(table[s].size()) != n)
        issues.push_back(std::string(name) + " row " + std::to_string(s) +
                         " must have n_states entries, got " + std::to_string(table[s].size()));
  };
  check_table(config.life_gain, "life_gain");
  check_table(config.pt_life, "pt_life");

  if (static_cast<int>(config.transition.size()) == T) {
    for (int s = 0; s < T; ++s) {
      const auto& mat = config.transition[s];
      if (static_cast<int>(mat.size()) != m) {
        issues.push_back("transition matrix for period " + std::to_string(s) + " must be " +
                         std::to_string(m) + "x" + std::to_string(m));
        continue;
      }
      for (int i = 0; i < m; ++i) {
        if (static_cast<int>(mat[i].size()) != m) {
          issues.push_back("transition row (period " + std::to_string(s) + ", state " +
                           std::to_string(i) + ") must have " + std::to_string(m) + " entries");
          continue;
        }
        double sum = 0.0;
        for (int j = 0; j < m; ++j) {
          if (mat[i][j] < 0.0)
            issues.push_back("negative probability at transition (period " + std::to_string(s) +
                             ", state " + std::to_string(i) + " -> " + std::to_string(j) + ")");
          sum += mat[i][j];
        }
        if (std::abs(sum - 1.0) > kProbTol)
          issues.push_back("transition row (period " + std::to_string(s) + ", state " +
                           std::to_string(i) + ") sums to " + fmt(sum) + ", expected 1");
      }
      if (s == T - 1 && static_cast<int>(mat.size()) == m) {
        for (int i = 1; i < m; ++i)
          if (static_cast<int>(mat[i].size()) == m && std::abs(mat[i][0] - 1.0) > kProbTol)
            issues.push_back("horizon without certain death: transition row (period " +
                             std::to_string(s) + ", state " + std::to_string(i) +
                             ") puts mass " + fmt(mat[i][0]) + " on death, expected 1");
      }
    }
  }

  if (static_cast<int>(config.initial_dist.size()) == n) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      if (config.initial_dist[i] < 0.0)
        issues.push_back("negative probability in initial_dist at state " + std::to_string(i + 1));
      sum += config.initial_dist[i];
    }
    if (std::abs(sum - 1.0) > kProbTol)
      issues.push_back("initial_dist sums to " + fmt(sum) + ", expected 1");
  }

  if (static_cast<int>(config.pt_life.size()) == T) {
    for (int s = 0; s < T; ++s)
      if (static_cast<int>(config.pt_life[s].size()) == n)
        for (int i = 0; i < n; ++i)
          if (config.pt_life[s][i] < 0.0)
            issues.push_back("pt_life must be nonnegative, got " + fmt(config.pt_life[s][i]) +
                             " at (period " + std::to_string(s) + ", state " +
                             std::to_string(i + 1) + ")");
  }

  if (!(config.organ_rate >= 0.0)) issues.push_back("organ_rate must be nonnegative");
  if (!(config.patient_rate > 0.0)) issues.push_back("patient_rate must be positive");
  if (config.organ_rate >= config.patient_rate)
    issues.push_back("organ_rate must be below patient_rate (got rho = " + fmt(config.organ_rate) +
                     ", tau = " + fmt(config.patient_rate) + ")");

  if (!issues.empty()) throw ValidationError(std::move(issues));

  Model model;
  model.n_states_ = n;
  model.horizon_ = T;
  model.period_days_ = config.period_days;
  model.organ_rate_ = config.organ_rate;
  model.patient_rate_ = config.patient_rate;
  model.initial_dist_ = config.initial_dist;
  model.trans_.resize(static_cast<size_t>(T) * m * m);
  for (int s = 0; s < T; ++s)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        model.trans_[(static_cast<size_t>(s) * m + i) * m + j] = config.transition[s][i][j];
  model.life_gain_ = Grid(T, n);
  model.pt_life_ = Grid(T, n);
  for (int s = 0; s < T; ++s)
    for (int i = 0; i < n; ++i) {
      model.life_gain_(s, i) = config.life_gain[s][i];
      model.pt_life_(s, i) = config.pt_life[s][i];
    }
  return model;
}

OccupancyTrajectory propagate_occupancy(const Model& model, const Policy& policy) {
  const int n = model.n_states();
  const int T = model.horizon();
  if (policy.lambda.periods() != T || policy.lambda.states() != n)
    throw std::invalid_argument("policy dimensions do not match model");

  OccupancyTrajectory traj;
  traj.pi_pre = Grid(T + 1, n);
  traj.pi_post = Grid(T, n);
  traj.psi = Grid(T, n);
  traj.death_mass.assign(T + 1, 0.0);

  for (int i = 0; i < n; ++i) traj.pi_pre(0, i) = model.initial(i);

  for (int s = 0; s < T; ++s) {
    for (int i = 0; i < n; ++i) {
      const double lam = policy.lambda(s, i);
      const double pre = traj.pi_pre(s, i);
      traj.psi(s, i) = pre * lam;
      traj.pi_post(s, i) = pre * (1.0 - lam);
    }
    double died = 0.0;
    for (int i = 0; i < n; ++i) {
      const double post = traj.pi_post(s, i);
      if (post == 0.0) continue;
      for (int j = 0; j < n; ++j) traj.pi_pre(s + 1, j) += post * model.p_alive(s, i, j);
      died += post * model.death_prob(s, i);
    }
    traj.death_mass[s + 1] = traj.death_mass[s] + died;
  }
  return traj;
}

double objective_life_gain(const OccupancyTrajectory& traj, const Model& model) {
  if (!traj.psi.same_shape(model.life_gain()))
    throw std::invalid_argument("trajectory dimensions do not match model");
  double total = 0.0;
  for (int s = 0; s < traj.psi.periods(); ++s)
    for (int i = 0; i < traj.psi.states(); ++i) total += traj.psi(s, i) * model.life_gain()(s, i);
  return total;
}

double transplant_fraction(const OccupancyTrajectory& traj) {
  double total = 0.0;
  for (double v : traj.psi.data()) total += v;
  return total;
}

Grid residual_waitlist_days(const Model& model) {
  const int n = model.n_states();
  const int T = model.horizon();
  Grid r(T, n);
  for (int i = 0; i < n; ++i) r(T - 1, i) = model.period_days();
  for (int s = T - 2; s >= 0; --s)
    for (int i = 0; i < n; ++i) {
      double rest = 0.0;
      for (int j = 0; j < n; ++j) rest += model.p_alive(s, i, j) * r(s + 1, j);
      r(s, i) = model.period_days() + rest;
    }
  return r;
}

FeasibilityReport check_feasibility(const OccupancyTrajectory& traj, const Model& model) {
  FeasibilityReport report;
  using Kind = FeasibilityViolation::Kind;
  const int T = traj.psi.periods();
  const int n = traj.psi.states();
  for (int s = 0; s < T; ++s) {
    for (int i = 0; i < n; ++i) {
      const double pre = traj.pi_pre(s, i);
      const double psi = traj.psi(s, i);
      if (pre < -kProbTol)
        report.violations.push_back({Kind::NegativeOccupancy, s, i, pre, 0.0});
      if (psi < -kProbTol)
        report.violations.push_back({Kind::NegativePsi, s, i, psi, 0.0});
      if (psi > pre + kProbTol)
        report.violations.push_back({Kind::PsiAboveOccupancy, s, i, psi, pre});
    }
  }
  report.fraction = transplant_fraction(traj);
  if (report.fraction > model.budget() + kProbTol)
    report.violations.push_back({Kind::BudgetExceeded, -1, -1, report.fraction, model.budget()});
  return report;
}

}  // namespace lungalloc
