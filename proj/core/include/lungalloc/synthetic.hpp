#pragma once

#include <vector>

#include "lungalloc/las.hpp"
#include "lungalloc/model.hpp"

namespace lungalloc {

/// Parameters of a synthetic grid-state waiting-list instance: alive states
/// are a wl_bins x mu_bins grid of (waiting-list risk, post-transplant risk)
/// bins, waiting time runs over `periods` 30-day periods, and hazards grow
/// with both the risk bin and the time already waited.
struct SyntheticSpec {
  int wl_bins = 4;
  int mu_bins = 4;
  int periods = 100;
  double period_days = 30.0;
  double organ_rate = 104.0;
  double patient_rate = 173.0;

  double base_period_death = 0.030;  // per-period death hazard at the central bin
  double wl_hazard_slope = 1.4;      // log-hazard increase per unit of the wl predictor
  double hazard_ramp = 1.0;          // relative hazard increase by the horizon
  double pt_base_days = 2200.0;      // post-transplant life at the central mu bin
  double pt_slope = 0.45;            // log pt-life decrease per unit of the mu predictor
  double pt_waiting_decay = 0.25;    // relative pt-life loss by the horizon
  double wl_worsen = 0.20;           // P(wl bin worsens per period) at s = 0
  double wl_worsen_ramp = 0.5;       // extra worsening probability by the horizon
  double wl_improve = 0.10;
  double mu_worsen = 0.15;
  double mu_improve = 0.10;
};

struct SyntheticBundle {
  Model model;
  Grid las_scores;      // per (period, state); constant over periods by construction
  Grid refined_scores;  // per (period, state)
  GridThresholds thresholds;
  std::vector<double> wl_values;  // representative predictor value per wl bin
  std::vector<double> mu_values;
};

/// 0-based alive state index of grid cell (wl_bin, mu_bin), both 1-based.
int grid_state_index(int wl_bin, int mu_bin, int mu_bins);

/// Builds the validated model plus score grids for the score-based
/// strategies. Deterministic; no randomness involved.
SyntheticBundle make_synthetic(const SyntheticSpec& spec = {});

}  // namespace lungalloc
