#include "lungalloc/las.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lungalloc {

namespace {

bool in_group(const CovariateRecord& r, std::initializer_list<DiagnosisGroup> groups) {
  for (DiagnosisGroup g : groups)
    if (r.diagnosis_group == g) return true;
  return false;
}

bool detail_in_group(const CovariateRecord& r, DetailedDiagnosis detail, DiagnosisGroup group) {
  return r.detailed_diagnosis == detail && r.diagnosis_group == group;
}

}  // namespace

DiagnosisGroup diagnosis_group_from_string(const std::string& text) {
  if (text == "A" || text == "a") return DiagnosisGroup::A;
  if (text == "B" || text == "b") return DiagnosisGroup::B;
  if (text == "C" || text == "c") return DiagnosisGroup::C;
  if (text == "D" || text == "d") return DiagnosisGroup::D;
  throw std::invalid_argument("unknown diagnosis group: " + text);
}

DetailedDiagnosis detailed_diagnosis_from_string(const std::string& text) {
  if (text.empty() || text == "none") return DetailedDiagnosis::None;
  if (text == "bronchiectasis") return DetailedDiagnosis::Bronchiectasis;
  if (text == "eisenmenger") return DetailedDiagnosis::EisenmengerSyndrome;
  if (text == "lymphangioleiomyomatosis") return DetailedDiagnosis::Lymphangioleiomyomatosis;
  if (text == "obliterative_bronchiolitis") return DetailedDiagnosis::ObliterativeBronchiolitis;
  if (text == "pulmonary_fibrosis_not_idiopathic")
    return DetailedDiagnosis::PulmonaryFibrosisNotIdiopathic;
  if (text == "sarcoidosis_pa_over_30") return DetailedDiagnosis::SarcoidosisPaMeanOver30;
  if (text == "sarcoidosis_pa_at_most_30") return DetailedDiagnosis::SarcoidosisPaMeanAtMost30;
  throw std::invalid_argument("unknown detailed diagnosis: " + text);
}

std::string to_string(DiagnosisGroup group) {
  switch (group) {
    case DiagnosisGroup::A: return "A";
    case DiagnosisGroup::B: return "B";
    case DiagnosisGroup::C: return "C";
    case DiagnosisGroup::D: return "D";
  }
  return "?";
}

std::string to_string(DetailedDiagnosis detail) {
  switch (detail) {
    case DetailedDiagnosis::None: return "none";
    case DetailedDiagnosis::Bronchiectasis: return "bronchiectasis";
    case DetailedDiagnosis::EisenmengerSyndrome: return "eisenmenger";
    case DetailedDiagnosis::Lymphangioleiomyomatosis: return "lymphangioleiomyomatosis";
    case DetailedDiagnosis::ObliterativeBronchiolitis: return "obliterative_bronchiolitis";
    case DetailedDiagnosis::PulmonaryFibrosisNotIdiopathic:
      return "pulmonary_fibrosis_not_idiopathic";
    case DetailedDiagnosis::SarcoidosisPaMeanOver30: return "sarcoidosis_pa_over_30";
    case DetailedDiagnosis::SarcoidosisPaMeanAtMost30: return "sarcoidosis_pa_at_most_30";
  }
  return "?";
}

void validate_record(const CovariateRecord& r) {
  if (r.age < 12.0)
    throw std::invalid_argument("record age " + std::to_string(r.age) + " below minimum of 12");
  auto nonneg = [](double v, const char* name) {
    if (v < 0.0) throw std::invalid_argument(std::string(name) + " must be nonnegative");
  };
  nonneg(r.bmi, "bmi");
  nonneg(r.creatinine, "creatinine");
  nonneg(r.fvc_percent, "fvc_percent");
  nonneg(r.o2_rest, "o2_rest");
  nonneg(r.pco2, "pco2");
  nonneg(r.pa_systolic, "pa_systolic");
  nonneg(r.six_minute_walk, "six_minute_walk");
}

double apply_coefficient_rule(const CoefficientRow& row, const CovariateRecord& r) {
  const double b = row.coefficient;
  const std::string& rule = row.rule;

  if (rule == "linear_per_year") return b * r.age;
  if (rule == "deficit_below_20") return r.bmi < 20.0 ? b * (20.0 - r.bmi) : 0.0;
  if (rule == "flag_continuous_ventilation") return r.ventilation ? b : 0.0;
  if (rule == "linear_if_age_18plus") return r.age >= 18.0 ? b * r.creatinine : 0.0;
  if (rule == "flag_diabetes") return r.diabetes ? b : 0.0;
  if (rule == "indicator_group_a") return in_group(r, {DiagnosisGroup::A}) ? b : 0.0;
  if (rule == "indicator_group_b") return in_group(r, {DiagnosisGroup::B}) ? b : 0.0;
  if (rule == "indicator_group_c") return in_group(r, {DiagnosisGroup::C}) ? b : 0.0;
  if (rule == "indicator_group_d") return in_group(r, {DiagnosisGroup::D}) ? b : 0.0;
  if (rule == "indicator_bronchiectasis_group_a")
    return detail_in_group(r, DetailedDiagnosis::Bronchiectasis, DiagnosisGroup::A) ? b : 0.0;
  if (rule == "indicator_eisenmenger_group_b")
    return detail_in_group(r, DetailedDiagnosis::EisenmengerSyndrome, DiagnosisGroup::B) ? b : 0.0;
  if (rule == "indicator_lam_group_a")
    return detail_in_group(r, DetailedDiagnosis::Lymphangioleiomyomatosis, DiagnosisGroup::A)
               ? b
               : 0.0;
  if (rule == "indicator_ob_group_d")
    return detail_in_group(r, DetailedDiagnosis::ObliterativeBronchiolitis, DiagnosisGroup::D)
               ? b
               : 0.0;
  if (rule == "indicator_fibrosis_not_idiopathic_group_d")
    return detail_in_group(r, DetailedDiagnosis::PulmonaryFibrosisNotIdiopathic, DiagnosisGroup::D)
               ? b
               : 0.0;
  if (rule == "indicator_sarcoidosis_pa_over_30_group_d")
    return detail_in_group(r, DetailedDiagnosis::SarcoidosisPaMeanOver30, DiagnosisGroup::D)
               ? b
               : 0.0;
  if (rule == "indicator_sarcoidosis_pa_at_most_30_group_a")
    return detail_in_group(r, DetailedDiagnosis::SarcoidosisPaMeanAtMost30, DiagnosisGroup::A)
               ? b
               : 0.0;
  if (rule == "deficit_below_80_per_10_group_d")
    return in_group(r, {DiagnosisGroup::D}) && r.fvc_percent < 80.0
               ? b * (80.0 - r.fvc_percent) / 10.0
               : 0.0;
  if (rule == "flag_no_assistance") return r.functional_status_no_assist ? b : 0.0;
  if (rule == "linear_group_a") return in_group(r, {DiagnosisGroup::A}) ? b * r.o2_rest : 0.0;
  if (rule == "linear_group_b") return in_group(r, {DiagnosisGroup::B}) ? b * r.o2_rest : 0.0;
  if (rule == "linear_groups_acd")
    return in_group(r, {DiagnosisGroup::A, DiagnosisGroup::C, DiagnosisGroup::D}) ? b * r.o2_rest
                                                                                  : 0.0;
  if (rule == "linear_groups_bcd")
    return in_group(r, {DiagnosisGroup::B, DiagnosisGroup::C, DiagnosisGroup::D}) ? b * r.o2_rest
                                                                                  : 0.0;
  if (rule == "flag_at_least_40") return r.pco2 >= 40.0 ? b : 0.0;
  if (rule == "flag_pco2_increase") return r.pco2_increase_15 ? b : 0.0;
  if (rule == "per_10mmhg_group_a_over_40")
    return in_group(r, {DiagnosisGroup::A}) && r.pa_systolic > 40.0 ? b * r.pa_systolic / 10.0
                                                                    : 0.0;
  if (rule == "per_10mmhg_groups_bcd")
    return in_group(r, {DiagnosisGroup::B, DiagnosisGroup::C, DiagnosisGroup::D})
               ? b * r.pa_systolic / 10.0
               : 0.0;
  if (rule == "linear_per_100_feet") return b * r.six_minute_walk / 100.0;
  if (rule == "excess_over_45_per_year") return r.age > 45.0 ? b * (r.age - 45.0) : 0.0;
  if (rule == "flag_creatinine_increase") return r.creatinine_increase_150 ? b : 0.0;
  if (rule == "deficit_below_1200_feet")
    return r.six_minute_walk < 1200.0 ? b * (1200.0 - r.six_minute_walk) : 0.0;

  throw std::invalid_argument("unknown coefficient rule: " + rule);
}

namespace {

std::vector<CoefficientRow> parse_rows(const nlohmann::json& rows, const char* section) {
  std::vector<CoefficientRow> out;
  for (const auto& item : rows) {
    CoefficientRow row;
    row.covariate = item.at("covariate").get<std::string>();
    row.group = item.at("group").get<int>();
    row.coefficient = item.at("coefficient").get<double>();
    row.rule = item.at("rule").get<std::string>();
    if (row.group < 1 || row.group > 4)
      throw std::invalid_argument(std::string(section) + " row for " + row.covariate +
                                  " has group tag outside 1-4");
    // Reject unknown rules now rather than at first scoring call.
    apply_coefficient_rule(row, CovariateRecord{});
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

CoefficientSet parse_coefficients(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  CoefficientSet set;
  set.version = doc.at("version").get<int>();
  set.waiting_list = parse_rows(doc.at("waiting_list"), "waiting_list");
  set.post_transplant = parse_rows(doc.at("post_transplant"), "post_transplant");
  return set;
}

CoefficientSet load_coefficients(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open coefficient file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_coefficients(buffer.str());
}

double wl_linear_predictor(const CovariateRecord& record, const CoefficientSet& coefficients) {
  double sum = 0.0;
  for (const CoefficientRow& row : coefficients.waiting_list)
    sum += apply_coefficient_rule(row, record);
  return sum;
}

double pt_linear_predictor(const CovariateRecord& record, const CoefficientSet& coefficients) {
  double sum = 0.0;
  for (const CoefficientRow& row : coefficients.post_transplant)
    sum += apply_coefficient_rule(row, record);
  return sum;
}

void SurvivalCurve::validate() const {
  if (values.empty()) throw std::invalid_argument("survival curve is empty");
  if (values.front() > 1.0 + 1e-12)
    throw std::invalid_argument("survival curve exceeds 1 at day 0");
  for (size_t t = 0; t < values.size(); ++t) {
    if (values[t] < 0.0) throw std::invalid_argument("survival curve goes negative");
    if (t > 0 && values[t] > values[t - 1] + 1e-12)
      throw std::invalid_argument("survival curve increases at day " + std::to_string(t));
  }
}

SurvivalCurve proportional_curve(const SurvivalCurve& baseline, double lp, double lp_ref) {
  baseline.validate();
  const double hazard_ratio = std::exp(lp - lp_ref);
  SurvivalCurve curve;
  curve.values.reserve(baseline.values.size());
  for (double v : baseline.values) curve.values.push_back(std::pow(v, hazard_ratio));
  return curve;
}

double auc_one_year(const SurvivalCurve& curve) {
  if (curve.days() < 365)
    throw std::invalid_argument("survival curve must cover at least 365 days, got " +
                                std::to_string(curve.days()));
  double sum = 0.0;
  for (int t = 0; t < 365; ++t) sum += curve.values[t];
  return sum;
}

double las_score(double wlauc, double ptauc) {
  if (wlauc < 0.0 || wlauc > 365.0)
    throw std::invalid_argument("wlauc outside [0, 365]: " + std::to_string(wlauc));
  if (ptauc < 0.0 || ptauc > 365.0)
    throw std::invalid_argument("ptauc outside [0, 365]: " + std::to_string(ptauc));
  return 100.0 * (ptauc - 2.0 * wlauc + 730.0) / 1095.0;
}

RefinedScore refined_las(const SurvivalCurve& wl_curve_from_now,
                         const SurvivalCurve& post_transplant_curve) {
  wl_curve_from_now.validate();
  post_transplant_curve.validate();

  RefinedScore result;
  result.median_censored = true;
  result.median_days = static_cast<double>(post_transplant_curve.days());
  for (int t = 0; t < post_transplant_curve.days(); ++t) {
    if (post_transplant_curve.values[t] <= 0.5) {
      result.median_days = static_cast<double>(t);
      result.median_censored = false;
      break;
    }
  }

  double wl_expectancy = 0.0;
  for (double v : wl_curve_from_now.values) wl_expectancy += v;
  result.score = result.median_days - 2.0 * wl_expectancy;
  return result;
}

void validate_thresholds(const GridThresholds& thresholds) {
  auto check = [](const std::vector<double>& cuts, const char* name) {
    if (cuts.empty()) throw std::invalid_argument(std::string(name) + " cut points are empty");
    for (size_t k = 1; k < cuts.size(); ++k)
      if (!(cuts[k] > cuts[k - 1]))
        throw std::invalid_argument(std::string(name) + " cut points must strictly increase");
  };
  check(thresholds.wl_cuts, "wl");
  check(thresholds.mu_cuts, "mu");
}

namespace {

int bin_of(double value, const std::vector<double>& cuts) {
  int bin = 1;
  for (double cut : cuts)
    if (value >= cut) ++bin;
  return bin;
}

}  // namespace

GridState discretize_state(double s_wl, double s_mu, const GridThresholds& thresholds) {
  validate_thresholds(thresholds);
  return {bin_of(s_wl, thresholds.wl_cuts), bin_of(s_mu, thresholds.mu_cuts)};
}

}  // namespace lungalloc
