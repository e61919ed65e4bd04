#include "cate/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "cate/seeding.hpp"

namespace cate {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    while (!cur.empty() && std::isspace(static_cast<unsigned char>(cur.front()))) cur.erase(cur.begin());
    while (!cur.empty() && std::isspace(static_cast<unsigned char>(cur.back()))) cur.pop_back();
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> string_list(const json& v) {
  if (v.is_string()) return split(v.get<std::string>(), ',');
  std::vector<std::string> out;
  for (const auto& item : v) out.push_back(item.get<std::string>());
  return out;
}

std::string linear_effect_name(dgp::LinearEffectReading r) {
  return r == dgp::LinearEffectReading::X1PlusIndicator ? "x1_plus_indicator" : "indicator_of_sum";
}

// Everything that changes the numbers of a cell. Grid lists, output
// location and worker count are deliberately left out so cells can be reused.
std::string fingerprint(const RunConfig& config) {
  json doc = to_json(config);
  for (const char* key : {"scenarios", "learners", "strategies", "skip_unsupported_pairs", "output_dir", "workers"}) doc.erase(key);
  std::ostringstream os;
  os << std::hex << hash_label(doc.dump());
  return os.str();
}

std::string cell_key(const Cell& c) {
  return std::string(1, c.scenario) + "_" + to_string(c.learner) + "_" + to_string(c.strategy);
}

std::string stack_field(const FitDiagnostics& diag) {
  std::ostringstream os;
  for (std::size_t s = 0; s < diag.stacks.size(); ++s) {
    if (s) os << ';';
    os << diag.stacks[s].label << '=';
    for (std::size_t j = 0; j < diag.stacks[s].members.size(); ++j) {
      if (j) os << '|';
      os << diag.stacks[s].members[j] << ':' << std::setprecision(4) << diag.stacks[s].weights[j];
    }
  }
  return os.str();
}

std::string psi_field(const FitDiagnostics& diag) {
  std::ostringstream os;
  os << std::setprecision(5);
  for (std::size_t s = 0; s < diag.psi.size(); ++s) {
    const auto& p = diag.psi[s];
    if (s) os << ';';
    os << p.label << '=' << p.n << '/' << p.mean << '/' << p.sd << '/' << p.min << '/' << p.max;
  }
  return os.str();
}

std::string seeds_field(const FitDiagnostics& diag) {
  std::ostringstream os;
  for (std::size_t s = 0; s < diag.fold_seeds.size(); ++s) os << (s ? ";" : "") << diag.fold_seeds[s];
  return os.str();
}

struct ReplicationOutcome {
  bool ok = false;
  Vector predictions;
  std::string runlog;
  std::vector<std::string> curve;
  std::size_t leakage = 0;
};

ReplicationOutcome run_replication(const RunConfig& config, const EngineConfig& engine, const dgp::Simulator& sim,
                                   const Cell& cell, int r) {
  ReplicationOutcome out;
  const std::uint64_t seed = replication_seed(config, cell, r);
  const dgp::SimulatedData train = sim.draw_train(data_seed(config, cell.scenario, r));
  const dgp::SimulatedData& test = sim.test();
  FitDiagnostics diag;
  std::string status = "ok";
  std::string message;
  double test_mse = std::numeric_limits<double>::quiet_NaN();
  try {
    const CateModel model =
        fit_estimator(DataView{train.x, train.d, train.y}, cell.learner, cell.strategy, engine, seed, &diag);
    out.predictions = predict(model, test.x);
    if (!out.predictions.allFinite()) throw Error("non-finite predictions");
    test_mse = (out.predictions - test.tau_true).squaredNorm() / static_cast<double>(test.size());
    out.ok = true;
    if (config.emit_median_curve && is_median(cell.strategy)) {
      const Matrix members = median_member_predictions(model, test.x);
      for (Index b = 1; b <= members.cols(); ++b) {
        const Vector med = row_medians(members.leftCols(b));
        const double mse = (med - test.tau_true).squaredNorm() / static_cast<double>(test.size());
        out.curve.push_back(std::string(1, cell.scenario) + "," + to_string(cell.learner) + "," +
                            to_string(cell.strategy) + "," + std::to_string(r) + "," + std::to_string(b) + "," +
                            format_number(mse));
      }
    }
  } catch (const Error& e) {
    status = "failed";
    message = e.what();
  }
  out.leakage = count_leakage(diag);
  std::ostringstream row;
  row << cell.scenario << ',' << to_string(cell.learner) << ',' << to_string(cell.strategy) << ',' << r << ',' << seed
      << ',' << status << ',' << diag.aborted_iterations << ',' << out.leakage << ',' << format_number(test_mse) << ','
      << seeds_field(diag) << ',' << sanitize(stack_field(diag)) << ',' << sanitize(psi_field(diag)) << ','
      << sanitize(message);
  out.runlog = row.str();
  return out;
}

CellResult compute_cell(const RunConfig& config, const EngineConfig& engine, const dgp::Simulator& sim,
                        const Cell& cell) {
  const int reps = config.replications;
  std::vector<ReplicationOutcome> outcomes(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < reps; r = next++) outcomes[static_cast<std::size_t>(r)] = run_replication(config, engine, sim, cell, r);
  };
  const int threads = std::max(1, std::min(config.workers, reps));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  CellResult res;
  res.cell = cell;
  std::vector<const Vector*> ok;
  for (const auto& o : outcomes) {
    res.runlog_rows.push_back(o.runlog);
    res.curve_rows.insert(res.curve_rows.end(), o.curve.begin(), o.curve.end());
    res.leakage_violations += o.leakage;
    if (o.ok) ok.push_back(&o.predictions);
  }
  res.successes = static_cast<int>(ok.size());
  res.failures = reps - res.successes;
  if (ok.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.report = {nan, nan, nan, nan, 0, {}, {}, {}};
    return res;
  }
  PredictionCube cube;
  cube.tau_true = sim.test().tau_true;
  cube.values.resize(static_cast<Index>(ok.size()), cube.tau_true.size());
  for (std::size_t r = 0; r < ok.size(); ++r) cube.values.row(static_cast<Index>(r)) = ok[r]->transpose();
  res.report = aggregate(cube, config.median_mse_mode);
  return res;
}

json to_json(const CellResult& c, const std::string& print) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return json{{"fingerprint", print},
              {"mean_mse", num(c.report.mean_mse)},
              {"mean_abs_bias", num(c.report.mean_abs_bias)},
              {"mean_sd", num(c.report.mean_sd)},
              {"median_mse", num(c.report.median_mse)},
              {"replications", c.report.replications},
              {"successes", c.successes},
              {"failures", c.failures},
              {"leakage", c.leakage_violations},
              {"runlog", c.runlog_rows},
              {"curve", c.curve_rows}};
}

std::optional<CellResult> load_checkpoint(const fs::path& path, const std::string& print, const Cell& cell) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json doc;
  try {
    in >> doc;
  } catch (const json::exception&) {
    return std::nullopt;
  }
  if (doc.value("fingerprint", std::string()) != print) return std::nullopt;
  auto num = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
  CellResult c;
  c.cell = cell;
  c.report.mean_mse = num(doc["mean_mse"]);
  c.report.mean_abs_bias = num(doc["mean_abs_bias"]);
  c.report.mean_sd = num(doc["mean_sd"]);
  c.report.median_mse = num(doc["median_mse"]);
  c.report.replications = doc["replications"].get<Index>();
  c.successes = doc["successes"].get<int>();
  c.failures = doc["failures"].get<int>();
  c.leakage_violations = doc["leakage"].get<std::size_t>();
  c.runlog_rows = doc["runlog"].get<std::vector<std::string>>();
  c.curve_rows = doc["curve"].get<std::vector<std::string>>();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

}  // namespace

RunConfig full_grid_config() {
  RunConfig c;
  for (char s = 'A'; s <= 'L'; ++s) c.scenarios.push_back(s);
  c.learners = {MetaLearner::T, MetaLearner::DR, MetaLearner::R, MetaLearner::X};
  c.strategies.assign(std::begin(kAllStrategies), std::end(kAllStrategies));
  c.skip_unsupported_pairs = true;
  return c;
}

std::vector<std::string> validate(const RunConfig& config) {
  std::vector<std::string> errors;
  if (config.scenarios.empty()) errors.push_back("scenarios: at least one scenario is required");
  for (char s : config.scenarios)
    if (!dgp::is_scenario_id(s)) errors.push_back(std::string("scenarios: unknown scenario id '") + s + "'");
  if (config.learners.empty()) errors.push_back("learners: at least one learner is required");
  if (config.strategies.empty()) errors.push_back("strategies: at least one strategy is required");
  if (!config.skip_unsupported_pairs) {
    for (MetaLearner l : config.learners)
      for (Strategy s : config.strategies)
        if (!supports(l, s))
          errors.push_back("strategies: learner '" + to_string(l) + "' cannot use strategy '" + to_string(s) + "'");
  } else if (!config.learners.empty() && !config.strategies.empty() && enumerate_cells(config).empty()) {
    errors.push_back("strategies: no selected learner supports any selected strategy");
  }
  if (config.replications < 1) errors.push_back("replications: must be >= 1");
  if (config.b_iterations < 1) errors.push_back("b_iterations: must be >= 1");
  if (config.workers < 1) errors.push_back("workers: must be >= 1");
  if (config.test_size < 1) errors.push_back("test_size: must be >= 1");
  if (config.sample_size && *config.sample_size < 30) errors.push_back("sample_size: must be >= 30");
  if (config.profile != "full" && config.profile != "desk") errors.push_back("profile: expected 'full' or 'desk'");
  if (!(config.clip.lo > 0.0 && config.clip.lo < config.clip.hi && config.clip.hi < 1.0))
    errors.push_back("clip: bounds must satisfy 0 < lo < hi < 1");
  for (const auto& spec : default_learner_config(false, config.learner_profile).candidates) {
    try {
      validate(spec);
    } catch (const InvalidArgument& e) {
      errors.push_back(std::string("learner_params: ") + e.what());
    }
  }
  return errors;
}

std::vector<char> parse_scenario_list(const std::string& csv, std::vector<std::string>& errors) {
  std::vector<char> out;
  for (const auto& item : split(csv, ',')) {
    if (item.size() == 1 && dgp::is_scenario_id(static_cast<char>(std::toupper(static_cast<unsigned char>(item[0]))))) {
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(item[0]))));
    } else {
      errors.push_back("scenarios: unknown scenario id '" + item + "'");
    }
  }
  return out;
}

std::vector<MetaLearner> parse_learner_list(const std::string& csv, std::vector<std::string>& errors) {
  std::vector<MetaLearner> out;
  for (const auto& item : split(csv, ',')) {
    if (auto l = parse_metalearner(lower(item))) {
      out.push_back(*l);
    } else {
      errors.push_back("learners: unknown learner '" + item + "'");
    }
  }
  return out;
}

std::vector<Strategy> parse_strategy_list(const std::string& csv, std::vector<std::string>& errors) {
  std::vector<Strategy> out;
  for (const auto& item : split(csv, ',')) {
    if (auto s = parse_strategy(lower(item))) {
      out.push_back(*s);
    } else {
      errors.push_back("strategies: unknown strategy '" + item + "'");
    }
  }
  return out;
}

RunConfig config_from_json(const json& doc, std::vector<std::string>& errors) {
  RunConfig c;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += x + ",";
    return s;
  };
  try {
    if (doc.contains("scenarios")) c.scenarios = parse_scenario_list(join(string_list(doc["scenarios"])), errors);
    if (doc.contains("learners")) c.learners = parse_learner_list(join(string_list(doc["learners"])), errors);
    if (doc.contains("strategies")) c.strategies = parse_strategy_list(join(string_list(doc["strategies"])), errors);
    c.skip_unsupported_pairs = doc.value("skip_unsupported_pairs", c.skip_unsupported_pairs);
    c.replications = doc.value("replications", c.replications);
    c.b_iterations = doc.value("b_iterations", c.b_iterations);
    c.seed = doc.value("seed", c.seed);
    c.exclude_linear = doc.value("exclude_linear", c.exclude_linear);
    c.output_dir = doc.value("output_dir", c.output_dir);
    c.workers = doc.value("workers", c.workers);
    c.test_size = doc.value("test_size", c.test_size);
    if (doc.contains("sample_size") && !doc["sample_size"].is_null()) c.sample_size = doc["sample_size"].get<Index>();
    c.emit_median_curve = doc.value("emit_median_curve", c.emit_median_curve);
    c.profile = doc.value("profile", c.profile);
    c.learner_profile = c.profile == "desk" ? desk_profile() : LearnerProfile{};
    if (doc.contains("forest")) {
      const auto& f = doc["forest"];
      auto& p = c.learner_profile.forest;
      p.trees = f.value("trees", p.trees);
      p.mtry = f.value("mtry", p.mtry);
      p.min_leaf = f.value("min_leaf", p.min_leaf);
      p.max_depth = f.value("max_depth", p.max_depth);
      p.bootstrap = f.value("bootstrap", p.bootstrap);
    }
    if (doc.contains("boosting")) {
      const auto& b = doc["boosting"];
      auto& p = c.learner_profile.boosting;
      p.rounds = b.value("rounds", p.rounds);
      p.max_depth = b.value("max_depth", p.max_depth);
      p.learning_rate = b.value("learning_rate", p.learning_rate);
      p.min_leaf = b.value("min_leaf", p.min_leaf);
      p.holdout_fraction = b.value("holdout_fraction", p.holdout_fraction);
      p.patience = b.value("patience", p.patience);
    }
    if (doc.contains("lasso")) {
      const auto& l = doc["lasso"];
      auto& p = c.learner_profile.lasso;
      p.n_lambda = l.value("n_lambda", p.n_lambda);
      p.lambda_min_ratio = l.value("lambda_min_ratio", p.lambda_min_ratio);
      p.cv_folds = l.value("cv_folds", p.cv_folds);
    }
    if (doc.contains("clip")) {
      const auto bounds = doc["clip"].get<std::vector<double>>();
      if (bounds.size() != 2) {
        errors.push_back("clip: expected [lo, hi]");
      } else {
        c.clip = {bounds[0], bounds[1]};
      }
    }
    if (doc.contains("linear_effect")) {
      const auto s = doc["linear_effect"].get<std::string>();
      if (s == "x1_plus_indicator") {
        c.linear_effect = dgp::LinearEffectReading::X1PlusIndicator;
      } else if (s == "indicator_of_sum") {
        c.linear_effect = dgp::LinearEffectReading::IndicatorOfSum;
      } else {
        errors.push_back("linear_effect: expected 'x1_plus_indicator' or 'indicator_of_sum'");
      }
    }
    if (doc.contains("median_mse_mode")) {
      if (auto m = parse_median_mse_mode(doc["median_mse_mode"].get<std::string>())) {
        c.median_mse_mode = *m;
      } else {
        errors.push_back("median_mse_mode: expected 'per_replication' or 'per_row'");
      }
    }
  } catch (const json::exception& e) {
    errors.push_back(std::string("config: ") + e.what());
  }
  return c;
}

json to_json(const RunConfig& c) {
  std::vector<std::string> scenarios, learners, strategies;
  for (char s : c.scenarios) scenarios.emplace_back(1, s);
  for (auto l : c.learners) learners.push_back(to_string(l));
  for (auto s : c.strategies) strategies.push_back(to_string(s));
  const auto& lp = c.learner_profile;
  return json{
      {"scenarios", scenarios},
      {"learners", learners},
      {"strategies", strategies},
      {"skip_unsupported_pairs", c.skip_unsupported_pairs},
      {"replications", c.replications},
      {"b_iterations", c.b_iterations},
      {"seed", c.seed},
      {"exclude_linear", c.exclude_linear},
      {"output_dir", c.output_dir},
      {"workers", c.workers},
      {"test_size", c.test_size},
      {"sample_size", c.sample_size ? json(*c.sample_size) : json(nullptr)},
      {"emit_median_curve", c.emit_median_curve},
      {"profile", c.profile},
      {"forest",
       {{"trees", lp.forest.trees},
        {"mtry", lp.forest.mtry},
        {"min_leaf", lp.forest.min_leaf},
        {"max_depth", lp.forest.max_depth},
        {"bootstrap", lp.forest.bootstrap}}},
      {"boosting",
       {{"rounds", lp.boosting.rounds},
        {"max_depth", lp.boosting.max_depth},
        {"learning_rate", lp.boosting.learning_rate},
        {"min_leaf", lp.boosting.min_leaf},
        {"holdout_fraction", lp.boosting.holdout_fraction},
        {"patience", lp.boosting.patience}}},
      {"lasso",
       {{"n_lambda", lp.lasso.n_lambda}, {"lambda_min_ratio", lp.lasso.lambda_min_ratio}, {"cv_folds", lp.lasso.cv_folds}}},
      {"clip", {c.clip.lo, c.clip.hi}},
      {"linear_effect", linear_effect_name(c.linear_effect)},
      {"median_mse_mode", to_string(c.median_mse_mode)},
  };
}

std::vector<Cell> enumerate_cells(const RunConfig& config) {
  std::vector<Cell> cells;
  for (char s : config.scenarios)
    for (MetaLearner l : config.learners)
      for (Strategy st : config.strategies)
        if (supports(l, st)) cells.push_back({s, l, st});
  return cells;
}

std::uint64_t dgp_seed(const RunConfig& config, char scenario) {
  return derive_seed(config.seed, {hash_label("dgp"), static_cast<std::uint64_t>(scenario)});
}

std::uint64_t data_seed(const RunConfig& config, char scenario, int replication) {
  return derive_seed(config.seed,
                     {hash_label("data"), static_cast<std::uint64_t>(scenario), static_cast<std::uint64_t>(replication)});
}

std::uint64_t cell_seed(const RunConfig& config, const Cell& cell) {
  return derive_seed(config.seed, {static_cast<std::uint64_t>(cell.scenario), hash_label(to_string(cell.learner)),
                                   hash_label(to_string(cell.strategy))});
}

std::uint64_t replication_seed(const RunConfig& config, const Cell& cell, int replication) {
  return derive_seed(cell_seed(config, cell), {static_cast<std::uint64_t>(replication)});
}

EngineConfig engine_config(const RunConfig& config) {
  EngineConfig e;
  e.learners = default_learner_config(config.exclude_linear, config.learner_profile);
  e.learners.clip = config.clip;
  e.b_iterations = config.b_iterations;
  return e;
}

RunSummary run(const RunConfig& config, const ProgressFn& progress) {
  if (const auto errors = validate(config); !errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw InvalidArgument(msg);
  }
  const fs::path out_dir(config.output_dir);
  const fs::path cell_dir = out_dir / "cells";
  fs::create_directories(cell_dir);

  json echo = to_json(config);
  echo["correlation_construction"] = "A with iid U(-1,1) entries; S = A'A + p*I; scaled to unit diagonal";
  echo["propensity_standardization"] = "mean and sd of a(X) on a 100000-row reference draw per scenario";
  write_text(out_dir / "config_echo.json", echo.dump(2) + "\n");

  const std::string print = fingerprint(config);
  const EngineConfig engine = engine_config(config);
  const auto cells = enumerate_cells(config);

  RunSummary summary;
  std::map<char, std::unique_ptr<dgp::Simulator>> simulators;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Cell& cell = cells[k];
    const fs::path checkpoint = cell_dir / (cell_key(cell) + ".json");
    std::optional<CellResult> result = load_checkpoint(checkpoint, print, cell);
    if (result) {
      ++summary.resumed_cells;
    } else {
      auto& sim = simulators[cell.scenario];
      if (!sim) {
        dgp::Scenario sc = dgp::scenario(cell.scenario);
        sc.test_size = config.test_size;
        if (config.sample_size) sc.n = *config.sample_size;
        dgp::DgpOptions opts;
        opts.linear_effect = config.linear_effect;
        sim = std::make_unique<dgp::Simulator>(sc, dgp_seed(config, cell.scenario), opts);
      }
      result = compute_cell(config, engine, *sim, cell);
      write_text(checkpoint, to_json(*result, print).dump() + "\n");
      ++summary.computed_cells;
    }
    if (result->successes == 0) ++summary.empty_cells;
    summary.leakage_violations += result->leakage_violations;
    if (progress) {
      std::ostringstream os;
      os << "[" << (k + 1) << "/" << cells.size() << "] " << cell.scenario << " " << to_string(cell.learner) << " "
         << to_string(cell.strategy) << ": ok=" << result->successes << " failed=" << result->failures
         << " mse=" << format_number(result->report.mean_mse);
      progress(os.str());
    }
    summary.cells.push_back(std::move(*result));
  }

  std::ostringstream results;
  results << kResultsHeader << '\n';
  std::ostringstream runlog;
  runlog << "scenario,learner,estimator,replication,seed,status,aborted_iterations,leakage,test_mse,fold_seeds,"
            "ensemble_weights,psi_summary,message\n";
  std::ostringstream curve;
  curve << "scenario,learner,estimator,replication,b,mse\n";
  for (const auto& c : summary.cells) {
    results << c.cell.scenario << ',' << to_string(c.cell.learner) << ',' << to_string(c.cell.strategy) << ','
            << format_number(c.report.mean_mse) << ',' << format_number(c.report.mean_abs_bias) << ','
            << format_number(c.report.mean_sd) << ',' << format_number(c.report.median_mse) << ',' << c.successes
            << '\n';
    for (const auto& row : c.runlog_rows) runlog << row << '\n';
    for (const auto& row : c.curve_rows) curve << row << '\n';
  }
  write_text(out_dir / "results.csv", results.str());
  write_text(out_dir / "runlog.csv", runlog.str());
  if (config.emit_median_curve) write_text(out_dir / "median_curve.csv", curve.str());
  return summary;
}

std::vector<ResultRow> read_results_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw InvalidArgument("unexpected results header in " + path.string());
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw InvalidArgument("malformed results row: " + line);
    auto num = [](const std::string& s) { return s == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(s); };
    rows.push_back({f[0], f[1], f[2], num(f[3]), num(f[4]), num(f[5]), num(f[6]), std::stoi(f[7])});
  }
  return rows;
}

std::string render_table(const std::vector<ResultRow>& rows, const TableLayout& layout) {
  auto fmt = [&](double v) {
    if (std::isnan(v)) return std::string("n/a");
    std::ostringstream os;
    os << std::fixed << std::setprecision(layout.decimals) << v;
    return os.str();
  };
  auto learner_title = [](const std::string& l) {
    std::string up = l;
    for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return up + "-learner";
  };
  std::vector<std::string> learners;
  for (const auto& r : rows)
    if (std::find(learners.begin(), learners.end(), r.learner) == learners.end()) learners.push_back(r.learner);

  std::ostringstream md;
  md << "# Performance measures\n";
  for (const auto& learner : learners) {
    md << "\n## " << learner_title(learner) << "\n";
    std::vector<std::string> scenarios;
    for (const auto& r : rows)
      if (r.learner == learner && std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end())
        scenarios.push_back(r.scenario);
    for (const auto& sc : scenarios) {
      std::vector<const ResultRow*> block;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : rows) {
        if (r.learner != learner || r.scenario != sc) continue;
        block.push_back(&r);
        if (!std::isnan(r.mean_mse)) best = std::min(best, r.mean_mse);
      }
      md << "\n### Scenario " << sc << "\n\n";
      md << "| Estimator | MSE | \\|Bias\\| | SD | Median MSE | Replications |\n";
      md << "|---|---:|---:|---:|---:|---:|\n";
      for (const ResultRow* r : block) {
        const auto strategy = parse_strategy(r->estimator);
        const std::string name = strategy ? display_name(*strategy) : r->estimator;
        std::string mse = fmt(r->mean_mse);
        if (!std::isnan(r->mean_mse) && r->mean_mse <= best + layout.tie_tolerance) mse = "_" + mse + "_";
        md << "| " << name << " | " << mse << " | " << fmt(r->mean_abs_bias) << " | " << fmt(r->mean_sd) << " | "
           << fmt(r->median_mse) << " | " << r->replications << " |\n";
      }
    }
  }
  return md.str();
}

void render_table(const fs::path& results_csv, const fs::path& out, const TableLayout& layout) {
  const auto rows = read_results_csv(results_csv);
  std::ofstream os(out);
  if (!os) throw InvalidArgument("cannot write " + out.string());
  os << render_table(rows, layout);
}

}  // namespace cate
