#pragma once

#include <string>
#include <vector>

namespace lungalloc {

enum class DiagnosisGroup { A, B, C, D };

enum class DetailedDiagnosis {
  None,
  Bronchiectasis,
  EisenmengerSyndrome,
  Lymphangioleiomyomatosis,
  ObliterativeBronchiolitis,
  PulmonaryFibrosisNotIdiopathic,
  SarcoidosisPaMeanOver30,
  SarcoidosisPaMeanAtMost30,
};

DiagnosisGroup diagnosis_group_from_string(const std::string& text);
DetailedDiagnosis detailed_diagnosis_from_string(const std::string& text);
std::string to_string(DiagnosisGroup group);
std::string to_string(DetailedDiagnosis detail);

/// One patient's covariates for the risk-score linear predictors.
struct CovariateRecord {
  double age = 0.0;              // years
  double bmi = 0.0;              // kg/m^2
  double creatinine = 0.0;       // mg/dL
  double fvc_percent = 0.0;      // % predicted
  double o2_rest = 0.0;          // L/min
  double pco2 = 0.0;             // mm Hg
  double pa_systolic = 0.0;      // mm Hg
  double six_minute_walk = 0.0;  // feet
  bool ventilation = false;      // continuous mechanical ventilation
  bool creatinine_increase_150 = false;
  bool diabetes = false;
  bool functional_status_no_assist = false;
  bool pco2_increase_15 = false;
  DiagnosisGroup diagnosis_group = DiagnosisGroup::A;
  DetailedDiagnosis detailed_diagnosis = DetailedDiagnosis::None;
};

/// Throws std::invalid_argument if the record violates a field invariant
/// (age below 12, negative physiological values).
void validate_record(const CovariateRecord& record);

/// A coefficient table row: covariate key, covariate group tag (1-4),
/// coefficient value, and the identifier of the conditional rule that decides
/// when and how the coefficient applies.
struct CoefficientRow {
  std::string covariate;
  int group = 0;
  double coefficient = 0.0;
  std::string rule;
};

struct CoefficientSet {
  int version = 0;
  std::vector<CoefficientRow> waiting_list;
  std::vector<CoefficientRow> post_transplant;
};

/// Loads a coefficient file (JSON; see data/las_coefficients_v1.json).
/// Unknown rule identifiers are rejected at load time.
CoefficientSet load_coefficients(const std::string& path);
CoefficientSet parse_coefficients(const std::string& json_text);

/// Contribution of a single table row for one record.
double apply_coefficient_rule(const CoefficientRow& row, const CovariateRecord& record);

/// Waiting-list linear predictor S_wl: sum of the waiting-list rows with all
/// conditional rules applied.
double wl_linear_predictor(const CovariateRecord& record, const CoefficientSet& coefficients);

/// Post-transplant linear predictor S_mu.
double pt_linear_predictor(const CovariateRecord& record, const CoefficientSet& coefficients);

/// Daily survival probabilities F(t), t = 0..values.size()-1.
struct SurvivalCurve {
  std::vector<double> values;

  int days() const { return static_cast<int>(values.size()); }
  /// Throws if the curve is empty, exceeds 1 at day 0, increases, or goes
  /// negative.
  void validate() const;
};

/// Covariate-specific curve baseline^exp(lp - lp_ref).
SurvivalCurve proportional_curve(const SurvivalCurve& baseline, double lp, double lp_ref);

/// Area under the curve over the first year: sum of F(t) for t = 0..364.
/// Requires at least 365 days of curve.
double auc_one_year(const SurvivalCurve& curve);

/// The priority score 100 * (ptauc - 2 * wlauc + 730) / 1095.
/// Inputs must lie in [0, 365]; the result lies in [0, 100].
double las_score(double wlauc, double ptauc);

struct RefinedScore {
  double score = 0.0;        // days; larger = higher priority
  double median_days = 0.0;  // post-transplant survival median
  /// True when the post-transplant curve never reaches 0.5 within its range;
  /// the median is then pinned at the curve end.
  bool median_censored = false;
};

/// Uncapped variant: median post-transplant survival minus twice the full-sum
/// waiting-list life expectancy. The waiting-list curve must be conditional
/// on survival to the current waiting time.
RefinedScore refined_las(const SurvivalCurve& wl_curve_from_now,
                         const SurvivalCurve& post_transplant_curve);

/// Cut points partitioning each predictor into bins (k cuts -> k+1 bins).
struct GridThresholds {
  std::vector<double> wl_cuts;
  std::vector<double> mu_cuts;
};

void validate_thresholds(const GridThresholds& thresholds);

struct GridState {
  int wl_bin = 1;  // 1-based; larger bin = shorter expected life
  int mu_bin = 1;
};

/// Bins (S_wl, S_mu) by the cut points. Values exactly on a cut go to the
/// higher bin; outer bins are open-ended.
GridState discretize_state(double s_wl, double s_mu, const GridThresholds& thresholds);

}  // namespace lungalloc
