#pragma once

// Monte Carlo driver: configuration, per-cell replication loop with
// checkpoints, and report files (results.csv, runlog.csv, config_echo.json,
// optional median_curve.csv).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cate/dgp.hpp"
#include "cate/engine.hpp"
#include "cate/evaluate.hpp"

namespace cate {

struct RunConfig {
  std::vector<char> scenarios;
  std::vector<MetaLearner> learners;
  std::vector<Strategy> strategies;
  // When set, learner/strategy pairs the learner cannot run are dropped from
  // the grid instead of being reported as validation errors.
  bool skip_unsupported_pairs = false;
  int replications = 30;
  int b_iterations = 20;
  std::uint64_t seed = 20201;
  bool exclude_linear = false;
  std::string output_dir = "results";
  int workers = 1;
  Index test_size = 2000;
  std::optional<Index> sample_size;  // overrides every scenario's n
  bool emit_median_curve = false;
  std::string profile = "full";     // "full" or "desk"
  LearnerProfile learner_profile;     // resolved from profile, then overridden field by field
  ClipBounds clip;
  dgp::LinearEffectReading linear_effect = dgp::LinearEffectReading::X1PlusIndicator;
  MedianMseMode median_mse_mode = MedianMseMode::PerReplication;
};

// The full grid: scenarios A-L, all learners, all strategies, unsupported
// pairs skipped.
RunConfig full_grid_config();

// Empty when the configuration is valid; otherwise one message per problem.
std::vector<std::string> validate(const RunConfig& config);

// Parses a structured config document. Unknown names are reported through
// `errors`; fields that are absent keep their defaults.
RunConfig config_from_json(const nlohmann::json& doc, std::vector<std::string>& errors);
nlohmann::json to_json(const RunConfig& config);

std::vector<char> parse_scenario_list(const std::string& csv, std::vector<std::string>& errors);
std::vector<MetaLearner> parse_learner_list(const std::string& csv, std::vector<std::string>& errors);
std::vector<Strategy> parse_strategy_list(const std::string& csv, std::vector<std::string>& errors);

struct Cell {
  char scenario;
  MetaLearner learner;
  Strategy strategy;
};

// Valid (scenario, learner, strategy) triples in canonical order.
std::vector<Cell> enumerate_cells(const RunConfig& config);

// Seeds derived from the master seed and the cell key only, so results do not
// depend on execution order or worker count.
std::uint64_t dgp_seed(const RunConfig& config, char scenario);
std::uint64_t data_seed(const RunConfig& config, char scenario, int replication);
std::uint64_t cell_seed(const RunConfig& config, const Cell& cell);
std::uint64_t replication_seed(const RunConfig& config, const Cell& cell, int replication);

EngineConfig engine_config(const RunConfig& config);

struct CellResult {
  Cell cell;
  EvalReport report;
  int successes = 0;
  int failures = 0;
  std::size_t leakage_violations = 0;
  std::vector<std::string> runlog_rows;
  std::vector<std::string> curve_rows;
};

struct RunSummary {
  std::vector<CellResult> cells;
  int computed_cells = 0;
  int resumed_cells = 0;
  int empty_cells = 0;
  std::size_t leakage_violations = 0;

  int exit_status() const { return empty_cells > 0 ? 1 : 0; }
};

using ProgressFn = std::function<void(const std::string&)>;

// Runs the grid, writing report files under config.output_dir. Cells with a
// matching checkpoint are loaded instead of recomputed.
RunSummary run(const RunConfig& config, const ProgressFn& progress = {});

inline constexpr const char* kResultsHeader =
    "scenario,learner,estimator,mean_mse,mean_abs_bias,mean_sd,median_mse,replications";

struct TableLayout {
  int decimals = 3;
  double tie_tolerance = 0.005;
};

struct ResultRow {
  std::string scenario;
  std::string learner;
  std::string estimator;
  double mean_mse = 0.0;
  double mean_abs_bias = 0.0;
  double mean_sd = 0.0;
  double median_mse = 0.0;
  int replications = 0;
};

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

// Markdown tables blocked by learner and scenario; the lowest mean MSE of each
// block (and anything within tie_tolerance of it) is emphasised.
std::string render_table(const std::vector<ResultRow>& rows, const TableLayout& layout = {});
void render_table(const std::filesystem::path& results_csv, const std::filesystem::path& out,
                  const TableLayout& layout = {});

}  // namespace cate
