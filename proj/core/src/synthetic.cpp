#include "lungalloc/synthetic.hpp"

#include <cmath>
#include <stdexcept>

namespace lungalloc {

namespace {

std::vector<double> bin_values(int bins) {
  std::vector<double> values(bins);
  for (int k = 0; k < bins; ++k) values[k] = 0.5 * (k - 0.5 * (bins - 1));
  return values;
}

std::vector<double> bin_initial_weights(int bins) {
  std::vector<double> w(bins);
  double sum = 0.0;
  for (int k = 0; k < bins; ++k) {
    w[k] = 1.0 / (1.0 + 0.3 * k);
    sum += w[k];
  }
  for (double& v : w) v /= sum;
  return w;
}

/// One-step kernel of a lazy walk on 1..bins with worsen/improve
/// probabilities; mass that would step outside folds into staying.
std::vector<double> walk_row(int bin, int bins, double up, double down) {
  std::vector<double> row(bins, 0.0);
  double stay = 1.0 - up - down;
  if (bin + 1 < bins)
    row[bin + 1] = up;
  else
    stay += up;
  if (bin - 1 >= 0)
    row[bin - 1] = down;
  else
    stay += down;
  row[bin] = stay;
  return row;
}

}  // namespace

int grid_state_index(int wl_bin, int mu_bin, int mu_bins) {
  return (wl_bin - 1) * mu_bins + (mu_bin - 1);
}

SyntheticBundle make_synthetic(const SyntheticSpec& spec) {
  if (spec.wl_bins < 1 || spec.mu_bins < 1) throw std::invalid_argument("bins must be positive");
  if (spec.periods < 2) throw std::invalid_argument("need at least 2 periods");
  const int W = spec.wl_bins;
  const int M = spec.mu_bins;
  const int n = W * M;
  const int T = spec.periods;

  SyntheticBundle bundle;
  bundle.wl_values = bin_values(W);
  bundle.mu_values = bin_values(M);

  ModelConfig config;
  config.n_states = n;
  config.horizon = T;
  config.period_days = spec.period_days;
  config.organ_rate = spec.organ_rate;
  config.patient_rate = spec.patient_rate;

  config.transition.assign(T, std::vector<std::vector<double>>(n + 1, std::vector<double>(n + 1, 0.0)));
  for (int s = 0; s < T; ++s) {
    auto& mat = config.transition[s];
    mat[0][0] = 1.0;  // death absorbs
    const double ramp = static_cast<double>(s) / (T - 1);
    for (int w = 0; w < W; ++w) {
      const double hazard =
          spec.base_period_death * std::exp(spec.wl_hazard_slope * bundle.wl_values[w]) *
          (1.0 + spec.hazard_ramp * ramp);
      const double death = s == T - 1 ? 1.0 : 1.0 - std::exp(-hazard);
      const std::vector<double> w_row =
          walk_row(w, W, spec.wl_worsen * (1.0 + spec.wl_worsen_ramp * ramp), spec.wl_improve);
      for (int m = 0; m < M; ++m) {
        const int i = grid_state_index(w + 1, m + 1, M);
        mat[i + 1][0] = death;
        if (s == T - 1) continue;
        const std::vector<double> m_row = walk_row(m, M, spec.mu_worsen, spec.mu_improve);
        for (int w2 = 0; w2 < W; ++w2)
          for (int m2 = 0; m2 < M; ++m2) {
            const int j = grid_state_index(w2 + 1, m2 + 1, M);
            mat[i + 1][j + 1] = (1.0 - death) * w_row[w2] * m_row[m2];
          }
      }
    }
  }

  const std::vector<double> w_init = bin_initial_weights(W);
  const std::vector<double> m_init = bin_initial_weights(M);
  config.initial_dist.assign(n, 0.0);
  for (int w = 0; w < W; ++w)
    for (int m = 0; m < M; ++m)
      config.initial_dist[grid_state_index(w + 1, m + 1, M)] = w_init[w] * m_init[m];

  config.pt_life.assign(T, std::vector<double>(n, 0.0));
  for (int s = 0; s < T; ++s) {
    const double decay = 1.0 - spec.pt_waiting_decay * static_cast<double>(s) / (T - 1);
    for (int w = 0; w < W; ++w)
      for (int m = 0; m < M; ++m)
        config.pt_life[s][grid_state_index(w + 1, m + 1, M)] =
            spec.pt_base_days * std::exp(-spec.pt_slope * bundle.mu_values[m]) * decay;
  }

  // Life gain nets the counterfactual waiting-list residual out of the
  // post-transplant life, so the solver's objective matches the simulator's
  // accounting.
  config.life_gain.assign(T, std::vector<double>(n, 0.0));
  {
    ModelConfig probe = config;
    Model without_gain = validate_model(probe);
    const Grid residual = residual_waitlist_days(without_gain);
    for (int s = 0; s < T; ++s)
      for (int i = 0; i < n; ++i)
        config.life_gain[s][i] = config.pt_life[s][i] - residual(s, i);
  }
  bundle.model = validate_model(config);

  // Score tables for the score-based strategies. The one-year scores use
  // waiting-time-invariant curves from each bin's representative predictor;
  // the refined scores use the model-conditional survival from (period,
  // state) with no one-year cap.
  const double daily_hazard = spec.base_period_death / spec.period_days;
  std::vector<double> wlauc(W), ptauc(M);
  {
    SurvivalCurve base;
    base.values.resize(365);
    for (int t = 0; t < 365; ++t) base.values[t] = std::exp(-daily_hazard * t);
    for (int w = 0; w < W; ++w)
      wlauc[w] = auc_one_year(
          proportional_curve(base, spec.wl_hazard_slope * bundle.wl_values[w], 0.0));
    for (int m = 0; m < M; ++m) {
      const double mean_pt = spec.pt_base_days * std::exp(-spec.pt_slope * bundle.mu_values[m]);
      SurvivalCurve pt;
      pt.values.resize(365);
      for (int t = 0; t < 365; ++t) pt.values[t] = std::exp(-t / mean_pt);
      ptauc[m] = auc_one_year(pt);
    }
  }
  bundle.las_scores = Grid(T, n);
  for (int s = 0; s < T; ++s)
    for (int w = 0; w < W; ++w)
      for (int m = 0; m < M; ++m)
        bundle.las_scores(s, grid_state_index(w + 1, m + 1, M)) = las_score(wlauc[w], ptauc[m]);

  bundle.refined_scores = Grid(T, n);
  const int period_len = static_cast<int>(spec.period_days);
  for (int s = 0; s < T; ++s) {
    for (int i = 0; i < n; ++i) {
      // Survival through future periods starting from (s, i).
      std::vector<double> alive(n, 0.0);
      alive[i] = 1.0;
      SurvivalCurve wl_curve;
      wl_curve.values.reserve(static_cast<size_t>(T - s) * period_len);
      for (int k = 0; s + k < T; ++k) {
        double q = 0.0;
        for (double v : alive) q += v;
        for (int d = 0; d < period_len; ++d) wl_curve.values.push_back(q);
        std::vector<double> next(n, 0.0);
        for (int a = 0; a < n; ++a) {
          if (alive[a] == 0.0) continue;
          for (int b = 0; b < n; ++b) next[b] += alive[a] * bundle.model.p_alive(s + k, a, b);
        }
        alive = std::move(next);
      }
      const double mean_pt = bundle.model.pt_life()(s, i);
      SurvivalCurve pt_curve;
      const int pt_len = std::max(10, static_cast<int>(2.0 * mean_pt));
      pt_curve.values.resize(pt_len);
      for (int t = 0; t < pt_len; ++t) pt_curve.values[t] = std::exp(-t / mean_pt);
      bundle.refined_scores(s, i) = refined_las(wl_curve, pt_curve).score;
    }
  }

  bundle.thresholds.wl_cuts.resize(W - 1);
  for (int w = 0; w + 1 < W; ++w)
    bundle.thresholds.wl_cuts[w] = 0.5 * (bundle.wl_values[w] + bundle.wl_values[w + 1]);
  bundle.thresholds.mu_cuts.resize(M - 1);
  for (int m = 0; m + 1 < M; ++m)
    bundle.thresholds.mu_cuts[m] = 0.5 * (bundle.mu_values[m] + bundle.mu_values[m + 1]);
  return bundle;
}

}  // namespace lungalloc
