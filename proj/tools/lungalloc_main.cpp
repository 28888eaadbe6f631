// Command-line front end: model validation, penalized solving, priority
// ranking, covariate scoring, strategy comparison, and synthetic instance
// generation.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lungalloc/io.hpp"
#include "lungalloc/las.hpp"
#include "lungalloc/model.hpp"
#include "lungalloc/ranking.hpp"
#include "lungalloc/simulator.hpp"
#include "lungalloc/solver.hpp"
#include "lungalloc/synthetic.hpp"

namespace fs = std::filesystem;
using namespace lungalloc;

namespace {

struct SolveArgs {
  std::string model_path;
  std::string out_dir = "out";
  double penalty = -1.0;  // < 0 means solve the budget instead
  double tol = 1e-6;
  bool topup = false;
  std::string ranking_path;
  double alpha = 1e-4;
  int steps = 0;  // 0 = default 10 * n * T
};

struct RankArgs {
  std::string model_path;
  std::string out_dir = "out";
  double alpha = 1e-4;
  int steps = 0;
  std::string grid;  // "WxM" heatmap factorization; default 1 x n
  int nesting_points = 20;
};

struct ScoreArgs {
  std::string records_path;
  std::string coeffs_path;
  std::string baselines_path;
  std::string out_dir = "out";
  std::vector<double> wl_cuts;
  std::vector<double> mu_cuts;
};

struct CompareArgs {
  std::string model_path;
  std::string out_dir = "out";
  std::vector<std::string> strategies{"proposed", "random", "worst"};
  int runs = 200;
  uint64_t seed = 1;
  int arrival_periods = 10;
  std::string ranking_path;
  std::string las_scores_path;
  std::string refined_scores_path;
  double alpha = 1e-4;
  int steps = 0;
  bool patient_log = false;
  bool sample_pt = false;
};

struct SynthArgs {
  std::string out_dir = "out";
  SyntheticSpec spec;
};

std::pair<int, int> parse_grid(const std::string& text, int states) {
  if (text.empty()) return {1, states};
  const auto x = text.find('x');
  if (x == std::string::npos)
    throw std::invalid_argument("--grid must look like WxM, got " + text);
  const int wl = std::stoi(text.substr(0, x));
  const int mu = std::stoi(text.substr(x + 1));
  if (wl * mu != states)
    throw std::invalid_argument("--grid " + text + " does not factor " + std::to_string(states) +
                                " states");
  return {wl, mu};
}

int rank_steps(const Model& model, int requested) {
  return requested > 0 ? requested : default_rank_steps(model);
}

RankingTable obtain_ranking(const Model& model, const std::string& ranking_path, double alpha,
                            int steps) {
  if (!ranking_path.empty())
    return load_ranking_csv(ranking_path, model.horizon(), model.n_states());
  return rank_pairs(model, alpha, rank_steps(model, steps));
}

int cmd_validate(const std::string& model_path) {
  const Model model = load_model(model_path);
  std::cout << "ok: " << model.n_states() << " states, " << model.horizon() << " periods, budget "
            << format_double(model.budget()) << " transplants per arrival\n";
  return 0;
}

int cmd_solve(const SolveArgs& args) {
  const Model model = load_model(args.model_path);
  fs::create_directories(args.out_dir);

  PolicySolution solution;
  if (args.penalty >= 0.0) {
    solution = backward_pass(model, args.penalty);
    std::cout << "penalty " << format_double(args.penalty);
  } else {
    const BudgetResult result = solve_budget(model, args.tol);
    solution = std::move(result.solution);
    std::cout << "c* = " << format_double(result.c_star);
  }
  if (args.topup) {
    const RankingTable ranking = obtain_ranking(model, args.ranking_path, args.alpha, args.steps);
    solution = fractional_topup(model, solution, ranking);
  }
  std::cout << ", transplant fraction " << format_double(solution.fraction)
            << " (budget " << format_double(model.budget()) << ")"
            << ", life gain per arrival (upper bound at this availability) "
            << format_double(solution.life_gain) << " days\n";

  write_solution_csv(solution, (fs::path(args.out_dir) / "solution.csv").string());
  write_solution_json(solution, (fs::path(args.out_dir) / "solution.json").string());
  return 0;
}

int cmd_rank(const RankArgs& args) {
  const Model model = load_model(args.model_path);
  fs::create_directories(args.out_dir);
  const RankingTable table = rank_pairs(model, args.alpha, rank_steps(model, args.steps));
  write_ranking_csv(table, (fs::path(args.out_dir) / "ranking.csv").string());
  const auto [wl_bins, mu_bins] = parse_grid(args.grid, model.n_states());
  write_heatmap_json(table, wl_bins, mu_bins, (fs::path(args.out_dir) / "heatmap.json").string());

  // Nesting check over a descending penalty grid, attached as a report.
  std::vector<double> grid;
  const double c_hi = bisection_upper_bracket(model);
  for (int k = 0; k < args.nesting_points; ++k)
    grid.push_back(c_hi * (args.nesting_points - 1 - k) / std::max(1, args.nesting_points - 1));
  const NestingReport report = verify_nesting(model, grid);
  nlohmann::json doc;
  doc["penalties"] = grid;
  doc["ok"] = report.ok();
  nlohmann::json violations = nlohmann::json::array();
  for (const NestingViolation& v : report.violations) {
    nlohmann::json item;
    item["penalty_outer"] = v.penalty_outer;
    item["penalty_inner"] = v.penalty_inner;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [s, i] : v.escaped) pairs.push_back({{"period", s}, {"state", i + 1}});
    item["escaped"] = std::move(pairs);
    violations.push_back(std::move(item));
  }
  doc["violations"] = std::move(violations);
  std::ofstream nesting((fs::path(args.out_dir) / "nesting.json").string());
  nesting << doc.dump(1) << "\n";

  std::cout << "ranked " << table.entries().size() << " (period, state) pairs; nesting "
            << (report.ok() ? "ok" : "VIOLATED") << "\n";
  return report.ok() ? 0 : 2;
}

int cmd_score(const ScoreArgs& args) {
  const CoefficientSet coeffs = load_coefficients(args.coeffs_path);
  const BaselineCurves baselines = load_baseline_curves(args.baselines_path);
  const std::vector<CovariateRecord> records = load_covariate_csv(args.records_path);
  fs::create_directories(args.out_dir);

  const bool with_bins = !args.wl_cuts.empty() && !args.mu_cuts.empty();
  GridThresholds thresholds{args.wl_cuts, args.mu_cuts};

  std::ofstream out((fs::path(args.out_dir) / "scores.csv").string());
  out << "s_wl,s_mu,wlauc,ptauc,las,refined,refined_median,refined_median_censored";
  if (with_bins) out << ",wl_bin,mu_bin";
  out << "\n";
  for (const CovariateRecord& rec : records) {
    const double s_wl = wl_linear_predictor(rec, coeffs);
    const double s_mu = pt_linear_predictor(rec, coeffs);
    const SurvivalCurve wl_curve =
        proportional_curve(baselines.waiting_list, s_wl, baselines.wl_reference);
    const SurvivalCurve pt_curve =
        proportional_curve(baselines.post_transplant, s_mu, baselines.pt_reference);
    const double wlauc = auc_one_year(wl_curve);
    const double ptauc = auc_one_year(pt_curve);
    const RefinedScore refined = refined_las(wl_curve, pt_curve);
    out << format_double(s_wl) << ',' << format_double(s_mu) << ',' << format_double(wlauc) << ','
        << format_double(ptauc) << ',' << format_double(las_score(wlauc, ptauc)) << ','
        << format_double(refined.score) << ',' << format_double(refined.median_days) << ','
        << (refined.median_censored ? 1 : 0);
    if (with_bins) {
      const GridState bin = discretize_state(s_wl, s_mu, thresholds);
      out << ',' << bin.wl_bin << ',' << bin.mu_bin;
    }
    out << '\n';
  }
  std::cout << "scored " << records.size() << " records\n";
  return 0;
}

int cmd_compare(const CompareArgs& args) {
  const Model model = load_model(args.model_path);
  fs::create_directories(args.out_dir);

  RankingTable ranking;
  bool have_ranking = false;
  auto ensure_ranking = [&]() {
    if (!have_ranking) {
      ranking = obtain_ranking(model, args.ranking_path, args.alpha, args.steps);
      have_ranking = true;
    }
    return ranking;
  };

  std::vector<StrategySpec> strategies;
  for (const std::string& name : args.strategies) {
    if (name == "proposed" || name == "ranking") {
      strategies.push_back(StrategySpec::ranking_strategy(ensure_ranking(), name));
    } else if (name == "worst") {
      strategies.push_back(StrategySpec::worst_strategy(ensure_ranking(), name));
    } else if (name == "las") {
      if (args.las_scores_path.empty())
        throw std::invalid_argument("strategy 'las' needs --las-scores");
      strategies.push_back(StrategySpec::las_strategy(
          load_score_grid_csv(args.las_scores_path, model.horizon(), model.n_states()), name));
    } else if (name == "refined_las" || name == "refined") {
      if (args.refined_scores_path.empty())
        throw std::invalid_argument("strategy 'refined_las' needs --refined-scores");
      strategies.push_back(StrategySpec::refined_las_strategy(
          load_score_grid_csv(args.refined_scores_path, model.horizon(), model.n_states()), name));
    } else if (name == "random") {
      strategies.push_back(StrategySpec::random_strategy(name));
    } else {
      throw std::invalid_argument("unknown strategy: " + name);
    }
  }

  const PostTransplantCredit credit =
      args.sample_pt ? PostTransplantCredit::ExponentialSample : PostTransplantCredit::Expected;
  const SummaryTable table =
      replicate(model, strategies, args.runs, args.seed, args.arrival_periods, credit);

  write_summary_csv(table, (fs::path(args.out_dir) / "summary.csv").string());
  write_summary_json(table, (fs::path(args.out_dir) / "summary.json").string());

  if (args.patient_log) {
    const ReplicationDraw draw = generate_draw(model, args.seed, 0, args.arrival_periods);
    for (size_t j = 0; j < strategies.size(); ++j) {
      Substream alloc(args.seed, 0, StreamPurpose::Allocation);
      Substream pt(args.seed, 0, StreamPurpose::PostTransplant);
      const RunOutcome outcome = simulate_prepared(
          model, draw, strategy_order(strategies[j], model.horizon(), model.n_states()), alloc,
          credit, &pt);
      write_patient_log_ndjson(
          outcome, (fs::path(args.out_dir) / (strategies[j].name + "_patients.ndjson")).string());
    }
  }

  std::cout << "strategy            mean_total  mean_waiting  mean_post\n";
  for (const StrategySummary& row : table.rows) {
    std::printf("%-18s %10.1f %12.1f %10.1f\n", row.name.c_str(), row.mean_total,
                row.mean_waiting, row.mean_post_transplant);
  }
  return 0;
}

int cmd_synth(const SynthArgs& args) {
  const SyntheticBundle bundle = make_synthetic(args.spec);
  fs::create_directories(args.out_dir);
  save_model(bundle.model, (fs::path(args.out_dir) / "model.json").string());
  write_score_grid_csv(bundle.las_scores, (fs::path(args.out_dir) / "las_scores.csv").string());
  write_score_grid_csv(bundle.refined_scores,
                       (fs::path(args.out_dir) / "refined_scores.csv").string());
  nlohmann::json meta;
  meta["wl_bins"] = args.spec.wl_bins;
  meta["mu_bins"] = args.spec.mu_bins;
  meta["wl_values"] = bundle.wl_values;
  meta["mu_values"] = bundle.mu_values;
  meta["wl_cuts"] = bundle.thresholds.wl_cuts;
  meta["mu_cuts"] = bundle.thresholds.mu_cuts;
  std::ofstream out((fs::path(args.out_dir) / "grid_meta.json").string());
  out << meta.dump(1) << "\n";
  std::cout << "wrote model.json, las_scores.csv, refined_scores.csv, grid_meta.json to "
            << args.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"waiting-list allocation solver and simulator"};
  app.require_subcommand(1);

  std::string validate_model_path;
  CLI::App* validate = app.add_subcommand("validate", "check a model file against all invariants");
  validate->add_option("--model", validate_model_path, "model JSON file")->required();

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "optimal allocation at a penalty or at the budget");
  solve->add_option("--model", solve_args.model_path, "model JSON file")->required();
  solve->add_option("--c", solve_args.penalty, "penalty (days); omit to solve for the budget");
  solve->add_option("--tol", solve_args.tol, "bisection tolerance for the budget solve");
  solve->add_flag("--topup", solve_args.topup, "close the budget gap fractionally along the ranking");
  solve->add_option("--ranking", solve_args.ranking_path, "ranking CSV (else computed when needed)");
  solve->add_option("--alpha", solve_args.alpha, "ranking resolution");
  solve->add_option("--steps", solve_args.steps, "ranking step budget (0 = auto)");
  solve->add_option("--out", solve_args.out_dir, "output directory");

  RankArgs rank_args;
  CLI::App* rank = app.add_subcommand("rank", "priority ranking of (period, state) pairs");
  rank->add_option("--model", rank_args.model_path, "model JSON file")->required();
  rank->add_option("--alpha", rank_args.alpha, "penalty resolution");
  rank->add_option("--steps", rank_args.steps, "step budget (0 = auto)");
  rank->add_option("--grid", rank_args.grid, "heatmap factorization WxM (default 1xN)");
  rank->add_option("--nesting-points", rank_args.nesting_points, "penalty grid size for the nesting report");
  rank->add_option("--out", rank_args.out_dir, "output directory");

  ScoreArgs score_args;
  CLI::App* score = app.add_subcommand("score", "score a CSV of covariate records");
  score->add_option("--records", score_args.records_path, "covariate CSV")->required();
  score->add_option("--coeffs", score_args.coeffs_path, "coefficient JSON")->required();
  score->add_option("--baselines", score_args.baselines_path, "baseline survival JSON")->required();
  score->add_option("--wl-cuts", score_args.wl_cuts, "cut points for the wl bins");
  score->add_option("--mu-cuts", score_args.mu_cuts, "cut points for the mu bins");
  score->add_option("--out", score_args.out_dir, "output directory");

  CompareArgs compare_args;
  CLI::App* compare = app.add_subcommand("compare", "replicate strategies over paired simulations");
  compare->add_option("--model", compare_args.model_path, "model JSON file")->required();
  compare->add_option("--strategies", compare_args.strategies,
                      "comma-separated list: proposed,las,refined_las,random,worst")
      ->delimiter(',');
  compare->add_option("--runs", compare_args.runs, "replications");
  compare->add_option("--seed", compare_args.seed, "root seed");
  compare->add_option("--arrival-periods", compare_args.arrival_periods,
                      "periods with patient and organ arrivals before the drain");
  compare->add_option("--ranking", compare_args.ranking_path, "ranking CSV (else computed)");
  compare->add_option("--las-scores", compare_args.las_scores_path, "score grid CSV for 'las'");
  compare->add_option("--refined-scores", compare_args.refined_scores_path,
                      "score grid CSV for 'refined_las'");
  compare->add_option("--alpha", compare_args.alpha, "ranking resolution when computing");
  compare->add_option("--steps", compare_args.steps, "ranking step budget (0 = auto)");
  compare->add_flag("--patient-log", compare_args.patient_log,
                    "write per-patient NDJSON logs for the first replication");
  compare->add_flag("--sample-pt", compare_args.sample_pt,
                    "sample exponential post-transplant life instead of crediting the mean");
  compare->add_option("--out", compare_args.out_dir, "output directory");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic grid-state instance");
  synth->add_option("--wl-bins", synth_args.spec.wl_bins, "waiting-list risk bins");
  synth->add_option("--mu-bins", synth_args.spec.mu_bins, "post-transplant risk bins");
  synth->add_option("--periods", synth_args.spec.periods, "waiting-time periods");
  synth->add_option("--organ-rate", synth_args.spec.organ_rate, "organ arrivals per period");
  synth->add_option("--patient-rate", synth_args.spec.patient_rate, "patient arrivals per period");
  synth->add_option("--out", synth_args.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(validate_model_path);
    if (solve->parsed()) return cmd_solve(solve_args);
    if (rank->parsed()) return cmd_rank(rank_args);
    if (score->parsed()) return cmd_score(score_args);
    if (compare->parsed()) return cmd_compare(compare_args);
    if (synth->parsed()) return cmd_synth(synth_args);
  } catch (const ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
