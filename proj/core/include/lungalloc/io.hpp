#pragma once

#include <string>
#include <vector>

#include "lungalloc/las.hpp"
#include "lungalloc/model.hpp"
#include "lungalloc/ranking.hpp"
#include "lungalloc/simulator.hpp"
#include "lungalloc/solver.hpp"

namespace lungalloc {

/// Parses the model JSON document
///   {n_states, horizon_T, period_days, transition: [T][n+1][n+1],
///    initial_dist: [n], life_gain: [T][n], pt_life: [T][n],
///    organ_rate, patient_rate}
/// (death = index 0 in transition rows/columns) and validates it.
Model load_model(const std::string& path);
ModelConfig model_config_from_json_text(const std::string& text);
void save_model(const Model& model, const std::string& path);

/// CSV with columns period,state,pi_pre,pi_post,psi (states 1-based).
void write_trajectory_csv(const OccupancyTrajectory& traj, const std::string& path);

/// CSV with columns period,state,phi,eta,gamma,lambda.
void write_solution_csv(const PolicySolution& solution, const std::string& path);
/// Full-precision JSON sidecar (penalty, objectives, tables, singular pairs).
void write_solution_json(const PolicySolution& solution, const std::string& path);

/// CSV with columns period,state,rank,c_entry,phi_at_c0, one row per pair in
/// total priority order.
void write_ranking_csv(const RankingTable& table, const std::string& path);
RankingTable load_ranking_csv(const std::string& path, int periods, int states);

/// Heatmap-ready JSON grid (periods x wl bins x mu bins). Requires
/// wl_bins * mu_bins == states; state index = (wl-1) * mu_bins + (mu-1).
void write_heatmap_json(const RankingTable& table, int wl_bins, int mu_bins,
                        const std::string& path);

/// CSV with one row per (period, state): period,state,score.
void write_score_grid_csv(const Grid& scores, const std::string& path);
Grid load_score_grid_csv(const std::string& path, int periods, int states);

void write_summary_csv(const SummaryTable& table, const std::string& path);
void write_summary_json(const SummaryTable& table, const std::string& path);

/// Newline-delimited JSON, one patient per line, for audit.
void write_patient_log_ndjson(const RunOutcome& outcome, const std::string& path);

/// Covariate records from CSV; all columns required, records validated.
std::vector<CovariateRecord> load_covariate_csv(const std::string& path);

struct BaselineCurves {
  SurvivalCurve waiting_list;
  SurvivalCurve post_transplant;
  double wl_reference = 0.0;  // linear predictor of the baseline profile
  double pt_reference = 0.0;
};

BaselineCurves load_baseline_curves(const std::string& path);

std::string format_double(double value);

}  // namespace lungalloc
