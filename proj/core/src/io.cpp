#include "lungalloc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lungalloc {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

json grid_to_json(const Grid& grid) {
  json rows = json::array();
  for (int s = 0; s < grid.periods(); ++s) {
    json row = json::array();
    for (int i = 0; i < grid.states(); ++i) row.push_back(grid(s, i));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

ModelConfig model_config_from_json_text(const std::string& text) {
  json doc = json::parse(text);
  ModelConfig config;
  config.n_states = doc.at("n_states").get<int>();
  config.horizon = doc.at("horizon_T").get<int>();
  config.period_days = doc.value("period_days", 30.0);
  config.transition = doc.at("transition").get<std::vector<std::vector<std::vector<double>>>>();
  config.initial_dist = doc.at("initial_dist").get<std::vector<double>>();
  config.life_gain = doc.at("life_gain").get<std::vector<std::vector<double>>>();
  config.pt_life = doc.at("pt_life").get<std::vector<std::vector<double>>>();
  config.organ_rate = doc.at("organ_rate").get<double>();
  config.patient_rate = doc.at("patient_rate").get<double>();
  return config;
}

Model load_model(const std::string& path) {
  return validate_model(model_config_from_json_text(read_file(path)));
}

void save_model(const Model& model, const std::string& path) {
  const int n = model.n_states();
  const int T = model.horizon();
  json doc;
  doc["n_states"] = n;
  doc["horizon_T"] = T;
  doc["period_days"] = model.period_days();
  doc["organ_rate"] = model.organ_rate();
  doc["patient_rate"] = model.patient_rate();
  doc["initial_dist"] = model.initial_dist();
  json trans = json::array();
  for (int s = 0; s < T; ++s) {
    json mat = json::array();
    for (int i = 0; i <= n; ++i) {
      json row = json::array();
      for (int j = 0; j <= n; ++j) row.push_back(model.transition(s, i, j));
      mat.push_back(std::move(row));
    }
    trans.push_back(std::move(mat));
  }
  doc["transition"] = std::move(trans);
  doc["life_gain"] = grid_to_json(model.life_gain());
  doc["pt_life"] = grid_to_json(model.pt_life());
  open_out(path) << doc.dump(1) << "\n";
}

void write_trajectory_csv(const OccupancyTrajectory& traj, const std::string& path) {
  auto out = open_out(path);
  out << "period,state,pi_pre,pi_post,psi\n";
  for (int s = 0; s < traj.psi.periods(); ++s)
    for (int i = 0; i < traj.psi.states(); ++i)
      out << s << ',' << i + 1 << ',' << format_double(traj.pi_pre(s, i)) << ','
          << format_double(traj.pi_post(s, i)) << ',' << format_double(traj.psi(s, i)) << '\n';
}

void write_solution_csv(const PolicySolution& solution, const std::string& path) {
  auto out = open_out(path);
  out << "period,state,phi,eta,gamma,lambda\n";
  const Grid& phi = solution.phi;
  for (int s = 0; s < phi.periods(); ++s)
    for (int i = 0; i < phi.states(); ++i)
      out << s << ',' << i + 1 << ',' << format_double(phi(s, i)) << ','
          << format_double(solution.eta(s, i)) << ',' << format_double(solution.gamma(s, i)) << ','
          << format_double(solution.policy.lambda(s, i)) << '\n';
}

void write_solution_json(const PolicySolution& solution, const std::string& path) {
  json doc;
  doc["penalty"] = solution.penalty;
  doc["penalized_objective"] = solution.penalized_objective;
  doc["life_gain_objective"] = solution.life_gain;
  doc["transplant_fraction"] = solution.fraction;
  doc["phi"] = grid_to_json(solution.phi);
  doc["eta"] = grid_to_json(solution.eta);
  doc["gamma"] = grid_to_json(solution.gamma);
  doc["lambda"] = grid_to_json(solution.policy.lambda);
  json singular = json::array();
  for (const auto& [s, i] : solution.singular_pairs) singular.push_back({{"period", s}, {"state", i + 1}});
  doc["singular_pairs"] = std::move(singular);
  open_out(path) << doc.dump(1) << "\n";
}

void write_ranking_csv(const RankingTable& table, const std::string& path) {
  auto out = open_out(path);
  out << "period,state,rank,c_entry,phi_at_c0\n";
  for (const RankEntry& e : table.entries())
    out << e.period << ',' << e.state + 1 << ',' << e.rank << ','
        << format_double(e.entry_penalty) << ',' << format_double(e.phi_at_zero) << '\n';
}

RankingTable load_ranking_csv(const std::string& path, int periods, int states) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ranking file: " + path);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) !=
          std::vector<std::string>{"period", "state", "rank", "c_entry", "phi_at_c0"})
    throw std::runtime_error("bad ranking header in " + path);
  std::vector<RankEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) throw std::runtime_error("bad ranking row: " + line);
    RankEntry e;
    e.period = std::stoi(fields[0]);
    e.state = std::stoi(fields[1]) - 1;
    e.rank = std::stoi(fields[2]);
    e.entry_penalty = std::strtod(fields[3].c_str(), nullptr);
    e.phi_at_zero = std::strtod(fields[4].c_str(), nullptr);
    e.allocable = !std::isnan(e.entry_penalty);
    entries.push_back(e);
  }
  return RankingTable(periods, states, std::move(entries));
}

void write_heatmap_json(const RankingTable& table, int wl_bins, int mu_bins,
                        const std::string& path) {
  if (wl_bins * mu_bins != table.states())
    throw std::invalid_argument("grid dimensions do not factor the state count");
  json rank_grid = json::array();
  json entry_grid = json::array();
  json phi_grid = json::array();
  for (int s = 0; s < table.periods(); ++s) {
    json rank_w = json::array(), entry_w = json::array(), phi_w = json::array();
    for (int w = 0; w < wl_bins; ++w) {
      json rank_m = json::array(), entry_m = json::array(), phi_m = json::array();
      for (int m = 0; m < mu_bins; ++m) {
        const RankEntry& e = table.entry(s, w * mu_bins + m);
        rank_m.push_back(e.rank);
        if (std::isnan(e.entry_penalty))
          entry_m.push_back(nullptr);
        else
          entry_m.push_back(e.entry_penalty);
        phi_m.push_back(e.phi_at_zero);
      }
      rank_w.push_back(std::move(rank_m));
      entry_w.push_back(std::move(entry_m));
      phi_w.push_back(std::move(phi_m));
    }
    rank_grid.push_back(std::move(rank_w));
    entry_grid.push_back(std::move(entry_w));
    phi_grid.push_back(std::move(phi_w));
  }
  json doc;
  doc["periods"] = table.periods();
  doc["wl_bins"] = wl_bins;
  doc["mu_bins"] = mu_bins;
  doc["rank"] = std::move(rank_grid);
  doc["entry_penalty"] = std::move(entry_grid);
  doc["phi_at_zero"] = std::move(phi_grid);
  open_out(path) << doc.dump(1) << "\n";
}

void write_score_grid_csv(const Grid& scores, const std::string& path) {
  auto out = open_out(path);
  out << "period,state,score\n";
  for (int s = 0; s < scores.periods(); ++s)
    for (int i = 0; i < scores.states(); ++i)
      out << s << ',' << i + 1 << ',' << format_double(scores(s, i)) << '\n';
}

Grid load_score_grid_csv(const std::string& path, int periods, int states) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open score file: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) != std::vector<std::string>{"period", "state", "score"})
    throw std::runtime_error("bad score grid header in " + path);
  Grid scores(periods, states, std::numeric_limits<double>::quiet_NaN());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) throw std::runtime_error("bad score row: " + line);
    const int s = std::stoi(fields[0]);
    const int i = std::stoi(fields[1]) - 1;
    if (s < 0 || s >= periods || i < 0 || i >= states)
      throw std::runtime_error("score row out of range: " + line);
    scores(s, i) = std::strtod(fields[2].c_str(), nullptr);
  }
  for (double v : scores.data())
    if (std::isnan(v)) throw std::runtime_error("score grid has missing (period, state) pairs");
  return scores;
}

void write_summary_csv(const SummaryTable& table, const std::string& path) {
  auto out = open_out(path);
  out << "strategy,replications,mean_total,sd_total,mean_waiting,sd_waiting,"
         "mean_post_transplant,sd_post_transplant,mean_wait_transplanted,"
         "sd_wait_transplanted,mean_wait_untransplanted,sd_wait_untransplanted\n";
  for (const StrategySummary& row : table.rows)
    out << row.name << ',' << table.replications << ',' << format_double(row.mean_total) << ','
        << format_double(row.sd_total) << ',' << format_double(row.mean_waiting) << ','
        << format_double(row.sd_waiting) << ',' << format_double(row.mean_post_transplant) << ','
        << format_double(row.sd_post_transplant) << ','
        << format_double(row.mean_wait_transplanted) << ','
        << format_double(row.sd_wait_transplanted) << ','
        << format_double(row.mean_wait_untransplanted) << ','
        << format_double(row.sd_wait_untransplanted) << '\n';
}

void write_summary_json(const SummaryTable& table, const std::string& path) {
  json doc;
  doc["replications"] = table.replications;
  json rows = json::array();
  for (size_t j = 0; j < table.rows.size(); ++j) {
    const StrategySummary& row = table.rows[j];
    json r;
    r["strategy"] = row.name;
    r["mean_total"] = row.mean_total;
    r["sd_total"] = row.sd_total;
    r["mean_waiting"] = row.mean_waiting;
    r["sd_waiting"] = row.sd_waiting;
    r["mean_post_transplant"] = row.mean_post_transplant;
    r["sd_post_transplant"] = row.sd_post_transplant;
    r["mean_wait_transplanted"] = row.mean_wait_transplanted;
    r["sd_wait_transplanted"] = row.sd_wait_transplanted;
    r["mean_wait_untransplanted"] = row.mean_wait_untransplanted;
    r["sd_wait_untransplanted"] = row.sd_wait_untransplanted;
    r["total_by_replication"] = table.total_by_replication[j];
    rows.push_back(std::move(r));
  }
  doc["strategies"] = std::move(rows);
  open_out(path) << doc.dump(1) << "\n";
}

void write_patient_log_ndjson(const RunOutcome& outcome, const std::string& path) {
  auto out = open_out(path);
  for (const PatientRecord& rec : outcome.patients) {
    json line;
    line["arrival_period"] = rec.arrival_period;
    json path_states = json::array();
    for (int s : rec.path) path_states.push_back(s + 1);
    line["path"] = std::move(path_states);
    line["transplanted"] = rec.transplanted;
    if (rec.transplanted) {
      line["transplant_period"] = rec.transplant_period;
      line["transplant_state"] = rec.transplant_state + 1;
    }
    line["waiting_days"] = rec.waiting_days;
    line["post_transplant_days"] = rec.post_transplant_days;
    out << line.dump() << '\n';
  }
}

namespace {

bool parse_bool(const std::string& text, const std::string& column) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw std::runtime_error("bad boolean '" + text + "' in column " + column);
}

double parse_number(const std::string& text, const std::string& column) {
  if (text.empty()) throw std::runtime_error("missing value in column " + column);
  size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::runtime_error("bad number '" + text + "' in column " + column);
  return v;
}

}  // namespace

std::vector<CovariateRecord> load_covariate_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open covariate file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty covariate file: " + path);
  const auto header = split_csv_line(line);
  std::map<std::string, size_t> column;
  for (size_t k = 0; k < header.size(); ++k) column[header[k]] = k;
  const std::vector<std::string> required = {
      "age",       "bmi",       "ventilation",   "creatinine", "creatinine_increase_150",
      "diabetes",  "diagnosis_group", "detailed_diagnosis", "fvc_percent",
      "functional_status_no_assist", "o2_rest", "pco2", "pco2_increase_15",
      "pa_systolic", "six_minute_walk"};
  for (const auto& name : required)
    if (!column.count(name))
      throw std::runtime_error("covariate file missing column " + name);

  std::vector<CovariateRecord> records;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("row " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(header.size()));
    auto field = [&](const std::string& name) -> const std::string& {
      return fields[column.at(name)];
    };
    CovariateRecord rec;
    rec.age = parse_number(field("age"), "age");
    rec.bmi = parse_number(field("bmi"), "bmi");
    rec.ventilation = parse_bool(field("ventilation"), "ventilation");
    rec.creatinine = parse_number(field("creatinine"), "creatinine");
    rec.creatinine_increase_150 =
        parse_bool(field("creatinine_increase_150"), "creatinine_increase_150");
    rec.diabetes = parse_bool(field("diabetes"), "diabetes");
    rec.diagnosis_group = diagnosis_group_from_string(field("diagnosis_group"));
    rec.detailed_diagnosis = detailed_diagnosis_from_string(field("detailed_diagnosis"));
    rec.fvc_percent = parse_number(field("fvc_percent"), "fvc_percent");
    rec.functional_status_no_assist =
        parse_bool(field("functional_status_no_assist"), "functional_status_no_assist");
    rec.o2_rest = parse_number(field("o2_rest"), "o2_rest");
    rec.pco2 = parse_number(field("pco2"), "pco2");
    rec.pco2_increase_15 = parse_bool(field("pco2_increase_15"), "pco2_increase_15");
    rec.pa_systolic = parse_number(field("pa_systolic"), "pa_systolic");
    rec.six_minute_walk = parse_number(field("six_minute_walk"), "six_minute_walk");
    validate_record(rec);
    records.push_back(rec);
  }
  return records;
}

BaselineCurves load_baseline_curves(const std::string& path) {
  json doc = json::parse(read_file(path));
  BaselineCurves curves;
  curves.waiting_list.values = doc.at("waiting_list").get<std::vector<double>>();
  curves.post_transplant.values = doc.at("post_transplant").get<std::vector<double>>();
  curves.wl_reference = doc.value("wl_reference", 0.0);
  curves.pt_reference = doc.value("pt_reference", 0.0);
  curves.waiting_list.validate();
  curves.post_transplant.validate();
  return curves;
}

}  // namespace lungalloc
