// cate_sim: run the simulation grid, render tables, export data and folds.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cate/dgp.hpp"
#include "cate/experiment.hpp"
#include "cate/splitter.hpp"

namespace {

int report_errors(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "error: " << e << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation study of sample splitting for CATE meta-learners"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the Monte Carlo grid");
  std::string config_path, scenarios, learners, strategies, out_dir;
  int replications = 0, workers = 0, b_iterations = 0;
  std::uint64_t seed = 0;
  bool exclude_linear = false, emit_curve = false, grid = false, skip_pairs = false;
  run_cmd->add_option("--config", config_path, "JSON config file");
  run_cmd->add_flag("--full-grid", grid, "Start from the full grid (all scenarios, learners, strategies)");
  run_cmd->add_flag("--skip-unsupported", skip_pairs, "Drop learner/strategy pairs the learner cannot run");
  run_cmd->add_option("--scenarios", scenarios, "Comma-separated scenario ids, e.g. A,B");
  run_cmd->add_option("--learners", learners, "Comma-separated learners: t,dr,r,x");
  run_cmd->add_option("--strategies", strategies, "Comma-separated strategies, e.g. naive,fold5cf");
  run_cmd->add_option("--replications", replications, "Replications per cell")->check(CLI::PositiveNumber);
  run_cmd->add_option("--b-iterations", b_iterations, "Median iterations B")->check(CLI::PositiveNumber);
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Master seed");
  run_cmd->add_flag("--exclude-linear", exclude_linear, "Drop linear and lasso from the ensemble library");
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--emit-median-curve", emit_curve, "Write MSE against B for median strategies");

  // render
  auto* render_cmd = app.add_subcommand("render", "Render results.csv as Markdown tables");
  std::string render_in, render_out;
  int decimals = 3;
  double tie = 0.005;
  render_cmd->add_option("--in", render_in, "results.csv")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--out", render_out, "Markdown output")->required();
  render_cmd->add_option("--decimals", decimals, "Decimal places");
  render_cmd->add_option("--tie", tie, "Tie tolerance for emphasis");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Draw one training set as CSV");
  std::string sim_scenario, sim_out, sim_test_out;
  std::uint64_t sim_seed = 0, sim_rep = 0;
  sim_cmd->add_option("--scenario", sim_scenario, "Scenario id A-L")->required();
  sim_cmd->add_option("--seed", sim_seed, "Seed")->required();
  sim_cmd->add_option("--replication", sim_rep, "Replication index");
  sim_cmd->add_option("--out", sim_out, "Training CSV")->required();
  sim_cmd->add_option("--test-out", sim_test_out, "Also write the test set");

  // folds
  auto* folds_cmd = app.add_subcommand("folds", "Write a random fold assignment");
  cate::Index folds_n = 0;
  int folds_k = 5;
  std::uint64_t folds_seed = 0;
  std::string folds_out;
  folds_cmd->add_option("--n", folds_n, "Rows")->required();
  folds_cmd->add_option("--k", folds_k, "Folds")->required();
  folds_cmd->add_option("--seed", folds_seed, "Seed")->required();
  folds_cmd->add_option("--out", folds_out, "CSV output")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      std::vector<std::string> errors;
      cate::RunConfig config = grid ? cate::full_grid_config() : cate::RunConfig{};
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) return report_errors({"cannot open config " + config_path});
        nlohmann::json doc;
        try {
          in >> doc;
        } catch (const nlohmann::json::exception& e) {
          return report_errors({std::string("config: ") + e.what()});
        }
        cate::RunConfig parsed = cate::config_from_json(doc, errors);
        if (grid) {
          if (!doc.contains("scenarios")) parsed.scenarios = config.scenarios;
          if (!doc.contains("learners")) parsed.learners = config.learners;
          if (!doc.contains("strategies")) parsed.strategies = config.strategies;
          if (!doc.contains("skip_unsupported_pairs")) parsed.skip_unsupported_pairs = true;
        }
        config = std::move(parsed);
      }
      if (!scenarios.empty()) config.scenarios = cate::parse_scenario_list(scenarios, errors);
      if (!learners.empty()) config.learners = cate::parse_learner_list(learners, errors);
      if (!strategies.empty()) config.strategies = cate::parse_strategy_list(strategies, errors);
      if (replications > 0) config.replications = replications;
      if (b_iterations > 0) config.b_iterations = b_iterations;
      if (seed_opt->count() > 0) config.seed = seed;
      if (exclude_linear) config.exclude_linear = true;
      if (skip_pairs) config.skip_unsupported_pairs = true;
      if (!out_dir.empty()) config.output_dir = out_dir;
      if (workers > 0) config.workers = workers;
      if (emit_curve) config.emit_median_curve = true;
      const auto invalid = cate::validate(config);
      errors.insert(errors.end(), invalid.begin(), invalid.end());
      if (!errors.empty()) return report_errors(errors);

      const auto summary = cate::run(config, [](const std::string& line) { std::cerr << line << '\n'; });
      std::cerr << "cells: " << summary.cells.size() << " computed=" << summary.computed_cells
                << " resumed=" << summary.resumed_cells << " empty=" << summary.empty_cells
                << " leakage=" << summary.leakage_violations << '\n';
      return summary.exit_status();
    }
    if (*render_cmd) {
      cate::render_table(render_in, render_out, cate::TableLayout{decimals, tie});
      return 0;
    }
    if (*sim_cmd) {
      if (sim_scenario.size() != 1 || !cate::dgp::is_scenario_id(sim_scenario[0]))
        return report_errors({"unknown scenario '" + sim_scenario + "'"});
      const auto [train, test] = cate::dgp::simulate(cate::dgp::scenario(sim_scenario[0]), sim_seed, sim_rep);
      std::ofstream out(sim_out);
      cate::dgp::write_csv(out, train);
      if (!sim_test_out.empty()) {
        std::ofstream tout(sim_test_out);
        cate::dgp::write_csv(tout, test);
      }
      return 0;
    }
    if (*folds_cmd) {
      const auto plan = cate::make_folds(folds_n, folds_k, folds_seed);
      std::ofstream out(folds_out);
      cate::write_folds_csv(out, plan);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
