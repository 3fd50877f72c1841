#include "stackgame/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "stackgame/exact_solver.hpp"
#include "stackgame/rl_solver.hpp"
#include "stackgame/simulation.hpp"
#include "stackgame/strategy_table.hpp"
#include "stackgame/text.hpp"

namespace stackgame {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Configuration problems detected after CLI parsing; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GameOptions {
  std::string game = "security";
  std::optional<int> horizon;
  std::optional<double> discount;
};

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool strict = false;
  bool timing = false;
  std::string out = ".";
};

void add_game_options(CLI::App* app, GameOptions& g) {
  app->add_option("--game", g.game, "\"security\" or a path to a game JSON file");
  app->add_option("--horizon", g.horizon, "override the horizon T");
  app->add_option("--discount", g.discount, "override the discount factor");
}

void add_common_options(CLI::App* app, CommonOptions& c, bool with_seed) {
  if (with_seed) app->add_option("--seed", c.seed, "random seed (default: $STACKGAME_SEED or 0)");
  app->add_option("--threads", c.threads, "worker threads");
  app->add_flag("--strict", c.strict, "fail on flagged diagnostics");
  app->add_flag("--timing", c.timing, "record wall time in the report");
  app->add_option("--out", c.out, "output directory");
}

GameSpec resolve_game(const GameOptions& g) {
  GameSpec spec;
  if (g.game == "security") {
    spec = security_game();
  } else {
    if (!fs::exists(g.game)) throw UsageError("game file not found: " + g.game);
    try {
      spec = load_game(g.game);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  if (g.horizon) spec.horizon = *g.horizon;
  if (g.discount) spec.discount = *g.discount;
  try {
    require_valid(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return spec;
}

json game_echo(const GameOptions& g, const GameSpec& spec) {
  return {{"game", g.game},
          {"horizon", spec.horizon},
          {"discount", spec.discount},
          {"num_states", spec.num_states},
          {"num_leader_actions", spec.num_leader_actions},
          {"num_follower_actions", spec.num_follower_actions}};
}

std::uint64_t resolve_seed(const CommonOptions& c) {
  if (c.seed) return *c.seed;
  const char* env = std::getenv("STACKGAME_SEED");
  if (env == nullptr || *env == '\0') return 0;
  std::uint64_t seed = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, seed);
  if (ec != std::errc() || ptr != end) throw UsageError("STACKGAME_SEED is not an unsigned integer");
  return seed;
}

// Turns solver-config validation failures into usage errors.
template <typename Config>
void validate_config(const Config& cfg) {
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

std::string strategy_csv(const StrategyTable& table, const GameSpec& spec) {
  std::ostringstream s;
  write_strategy_csv(s, table, spec);
  return s.str();
}

json initial_values(const StrategyTable& table, const GameSpec& spec) {
  const BeliefState mu{spec.initial_dist};
  const ValueTable vl = table.leader_values(1);
  const ValueTable vf = table.follower_values(1);
  json follower = json::array();
  for (int x = 0; x < spec.num_states; ++x) follower.push_back(interpolate(vf, table.grid(), mu, x));
  return {{"leader", interpolate(vl, table.grid(), mu)}, {"follower", follower}};
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string off_path_name(OffPathRule r) {
  return r == OffPathRule::kThrow ? "throw" : "prior_predictive";
}

// ---------------------------------------------------------------------------

int cmd_solve_exact(const GameOptions& g, const CommonOptions& c, SolveConfig cfg,
                    std::ostream& out, std::ostream& err) {
  const GameSpec spec = resolve_game(g);
  cfg.threads = c.threads;
  validate_config(cfg);
  const auto start = Clock::now();
  const ExactSolution sol = backward_recursion(spec, cfg);

  json report;
  report["command"] = "solve-exact";
  json config = game_echo(g, spec);
  config["belief_resolution"] = cfg.belief_resolution;
  config["leader_resolution"] = cfg.leader_resolution;
  config["fp_max_iters"] = cfg.fp_max_iters;
  config["fp_tolerance"] = cfg.fp_tolerance;
  config["fp_damping"] = cfg.fp_damping;
  config["tie_break"] = cfg.tie_break == TieBreak::kLowestIndex ? "lowest_index" : "leader_favorable";
  config["off_path"] = off_path_name(cfg.off_path);
  config["threads"] = cfg.threads;
  config["strict"] = c.strict;
  report["config"] = config;
  json stages = json::array();
  for (const StageDiagnostics& s : sol.stages) {
    stages.push_back({{"t", s.t},
                      {"nonconverged_points", s.nonconverged_points},
                      {"nonconverged_candidates", s.nonconverged_candidates}});
  }
  report["stages"] = stages;
  report["all_converged"] = sol.all_converged();
  report["rows"] = static_cast<std::int64_t>(spec.horizon) * sol.table.grid().size();
  report["initial_values"] = initial_values(sol.table, spec);
  if (c.timing) report["wall_seconds"] = seconds_since(start);

  const fs::path dir(c.out);
  write_text(dir / "strategy_exact.csv", strategy_csv(sol.table, spec));
  write_text(dir / "report_exact.json", report.dump(2) + "\n");
  out << "wrote " << (dir / "strategy_exact.csv").string() << "\n";
  if (c.strict && !sol.all_converged()) {
    int points = 0;
    for (const StageDiagnostics& s : sol.stages) points += s.nonconverged_points;
    err << "error: follower best response did not converge at " << points << " grid points\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_solve_rl(const GameOptions& g, const CommonOptions& c, RLConfig cfg, std::ostream& out,
                 std::ostream& err) {
  const GameSpec spec = resolve_game(g);
  cfg.threads = c.threads;
  cfg.seed = resolve_seed(c);
  validate_config(cfg);
  const auto start = Clock::now();
  const RLSolution sol = solve_rl(spec, cfg);

  json report;
  report["command"] = "solve-rl";
  json config = game_echo(g, spec);
  config["belief_resolution"] = cfg.belief_resolution;
  config["leader_resolution"] = cfg.leader_resolution;
  config["follower_resolution"] = cfg.follower_resolution;
  config["alpha"] = cfg.alpha;
  config["alpha_schedule"] = cfg.alpha_schedule == AlphaSchedule::kConstant ? "constant" : "harmonic";
  config["sweeps"] = cfg.sweeps;
  config["particles"] = cfg.particle_count;
  config["pg_step"] = cfg.pg_step;
  config["pg_iters"] = cfg.pg_iters;
  config["fp_outer_iters"] = cfg.fp_outer_iters;
  config["purify"] = cfg.purify;
  config["off_path"] = off_path_name(cfg.off_path);
  config["seed"] = cfg.seed;
  config["threads"] = cfg.threads;
  config["strict"] = c.strict;
  report["config"] = config;
  json stages = json::array();
  std::int64_t violations = 0;
  for (const PolicyEvaluationReport& s : sol.stages) {
    violations += s.bound_violations;
    stages.push_back({{"t", s.t},
                      {"off_path_filter_steps", s.off_path_filter_steps},
                      {"bound_violations", s.bound_violations},
                      {"final_mean_abs_delta", s.mean_abs_delta.back()},
                      {"mean_abs_delta", s.mean_abs_delta}});
  }
  report["stages"] = stages;
  report["rows"] = static_cast<std::int64_t>(spec.horizon) * sol.table.grid().size();
  report["initial_values"] = initial_values(sol.table, spec);
  if (c.timing) report["wall_seconds"] = seconds_since(start);

  const fs::path dir(c.out);
  write_text(dir / "strategy_rl.csv", strategy_csv(sol.table, spec));
  write_text(dir / "report_rl.json", report.dump(2) + "\n");
  out << "wrote " << (dir / "strategy_rl.csv").string() << "\n";
  if (c.strict && violations > 0) {
    err << "error: Q-values left their bound " << violations << " times\n";
    return kExitFailure;
  }
  return kExitOk;
}

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvFile read_csv_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  CsvFile f;
  std::string line;
  if (!std::getline(in, line)) throw UsageError(path + " is empty");
  f.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != f.header.size()) throw UsageError(path + ": ragged row");
    std::vector<double> row;
    for (const std::string& cell : cells) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw UsageError(path + ": not a number: " + cell);
      }
      row.push_back(v);
    }
    f.rows.push_back(std::move(row));
  }
  return f;
}

bool is_key_column(const std::string& name) {
  return name == "t" || name.rfind("belief_coord_", 0) == 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b, double tolerance,
                std::optional<double> value_tolerance, std::ostream& out, std::ostream& err) {
  const CsvFile a = read_csv_numbers(path_a);
  const CsvFile b = read_csv_numbers(path_b);
  if (a.header != b.header) throw UsageError("the files have different columns");
  if (a.rows.size() != b.rows.size()) throw UsageError("the files have different (t, grid) keys");
  const std::size_t ncol = a.header.size();
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    for (std::size_t col = 0; col < ncol; ++col) {
      if (is_key_column(a.header[col]) && std::abs(a.rows[r][col] - b.rows[r][col]) > 1e-9) {
        throw UsageError("the files have different (t, grid) keys");
      }
    }
  }
  double policy_linf = 0.0, value_linf = 0.0;
  out << "column,linf,mean_abs\n";
  for (std::size_t col = 0; col < ncol; ++col) {
    if (is_key_column(a.header[col])) continue;
    double linf = 0.0, sum = 0.0;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      const double d = std::abs(a.rows[r][col] - b.rows[r][col]);
      linf = std::max(linf, d);
      sum += d;
    }
    const double mean = a.rows.empty() ? 0.0 : sum / a.rows.size();
    out << a.header[col] << ',' << format_double(linf) << ',' << format_double(mean) << '\n';
    if (a.header[col].rfind("V_", 0) == 0) {
      value_linf = std::max(value_linf, linf);
    } else {
      policy_linf = std::max(policy_linf, linf);
    }
  }
  const double vtol = value_tolerance.value_or(tolerance);
  out << "policy_linf," << format_double(policy_linf) << '\n';
  out << "value_linf," << format_double(value_linf) << '\n';
  if (policy_linf > tolerance || value_linf > vtol) {
    err << "differences exceed the tolerance\n";
    return kExitFailure;
  }
  return kExitOk;
}

json estimate_json(const ReturnEstimate& e) {
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"episodes", e.episodes}, {"failed", e.failed}};
}

json gap_json(const GapEstimate& g, double epsilon) {
  const double bound = epsilon + 3.0 * g.std_error;
  return {{"gap", g.gap},
          {"std_error", g.std_error},
          {"paired_std_error", g.paired_std_error},
          {"bound", bound},
          {"within_bound", g.gap <= bound},
          {"argmax", g.argmax},
          {"deviations", g.deviations},
          {"equilibrium", estimate_json(g.equilibrium)},
          {"deviation", estimate_json(g.deviation)}};
}

struct SimulateOptions {
  std::string strategy;
  std::int64_t episodes = 10000;
  std::string deviations = "none";
  int leader_resolution = 31;
  double tolerance = 0.05;
};

int cmd_simulate(const GameOptions& g, const CommonOptions& c, const SimulateOptions& s,
                 std::ostream& out, std::ostream& err) {
  const GameSpec spec = resolve_game(g);
  if (s.episodes < 1) throw UsageError("episodes must be at least 1");
  if (c.threads < 1) throw UsageError("threads must be at least 1");
  const std::uint64_t seed = resolve_seed(c);
  std::ifstream in(s.strategy);
  if (!in) throw UsageError("cannot open strategy file " + s.strategy);
  std::optional<StrategyTable> table;
  try {
    table.emplace(read_strategy_csv(in, spec));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (table->horizon() != spec.horizon) {
    throw UsageError("strategy horizon " + std::to_string(table->horizon()) +
                     " differs from the game horizon " + std::to_string(spec.horizon));
  }
  SolveConfig response_cfg;
  response_cfg.leader_resolution = s.leader_resolution;
  response_cfg.threads = c.threads;
  validate_config(response_cfg);

  const auto start = Clock::now();
  const DeployedProfile profile(*table, spec);
  std::ostringstream log;
  const ReturnEstimates returns = estimate_returns(profile, spec, s.episodes, seed, {}, &log, c.threads);

  json report;
  report["command"] = "simulate";
  json config = game_echo(g, spec);
  config["strategy"] = s.strategy;
  config["belief_resolution"] = table->grid().resolution();
  config["episodes"] = s.episodes;
  config["deviations"] = s.deviations;
  config["leader_resolution"] = s.leader_resolution;
  config["tolerance"] = s.tolerance;
  config["seed"] = seed;
  config["threads"] = c.threads;
  config["strict"] = c.strict;
  report["config"] = config;
  report["leader"] = estimate_json(returns.leader);
  report["follower"] = estimate_json(returns.follower);
  bool within = true;
  if (s.deviations == "pure") {
    std::vector<FollowerDeviation> follower_set;
    try {
      follower_set = pure_follower_deviations(spec);
    } catch (const std::length_error& e) {
      throw UsageError(e.what());
    }
    const GapEstimate gf =
        deviation_gap_follower(*table, spec, follower_set, s.episodes, seed, c.threads);
    const GapEstimate gl = deviation_gap_leader(
        *table, spec, leader_grid(spec.num_leader_actions, s.leader_resolution), s.episodes, seed,
        response_cfg, c.threads);
    report["epsilon_follower"] = gap_json(gf, s.tolerance);
    report["epsilon_leader"] = gap_json(gl, s.tolerance);
    within = report["epsilon_follower"]["within_bound"].get<bool>() &&
             report["epsilon_leader"]["within_bound"].get<bool>();
  }
  if (c.timing) report["wall_seconds"] = seconds_since(start);

  const fs::path dir(c.out);
  write_text(dir / "returns.json", report.dump(2) + "\n");
  write_text(dir / "episodes.jsonl", log.str());
  out << "wrote " << (dir / "returns.json").string() << "\n";
  if (c.strict && (!within || returns.leader.failed > 0)) {
    err << "error: deviation gap above bound or failed episodes\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_export_game(const GameOptions& g, const CommonOptions& c, std::ostream& out) {
  const GameSpec spec = resolve_game(g);
  const fs::path path = fs::path(c.out) / "game.json";
  write_text(path, game_to_json(spec) + "\n");
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stackelberg equilibrium solvers for games with a privately informed follower",
               "stackgame"};
  app.require_subcommand(1);

  GameOptions game;
  CommonOptions common;

  SolveConfig exact_cfg;
  CLI::App* exact = app.add_subcommand("solve-exact", "known-model backward recursion");
  add_game_options(exact, game);
  add_common_options(exact, common, false);
  exact->add_option("--belief-res", exact_cfg.belief_resolution, "belief grid points per axis");
  exact->add_option("--leader-res", exact_cfg.leader_resolution, "leader lattice points per axis");

  RLConfig rl_cfg;
  CLI::App* rl = app.add_subcommand("solve-rl", "model-free Expected Sarsa solver");
  add_game_options(rl, game);
  add_common_options(rl, common, true);
  rl->add_option("--belief-res", rl_cfg.belief_resolution, "belief grid points per axis");
  rl->add_option("--leader-res", rl_cfg.leader_resolution, "leader lattice points per axis");
  rl->add_option("--follower-res", rl_cfg.follower_resolution,
                 "follower lattice points per axis and state");
  rl->add_option("--alpha", rl_cfg.alpha, "learning rate in (0, 1]");
  rl->add_option("--sweeps", rl_cfg.sweeps, "Sarsa sweeps per stage");
  rl->add_option("--particles", rl_cfg.particle_count, "particles per filter step");
  rl->add_option("--pg-step", rl_cfg.pg_step, "gradient-ascent step size");
  rl->add_option("--pg-iters", rl_cfg.pg_iters, "gradient-ascent iterations");

  std::string path_a, path_b;
  double tolerance = 0.1;
  std::optional<double> value_tolerance;
  CLI::App* compare = app.add_subcommand("compare", "compare two strategy CSV files");
  compare->add_option("a", path_a, "first strategy CSV")->required();
  compare->add_option("b", path_b, "second strategy CSV")->required();
  compare->add_option("--tolerance", tolerance, "allowed L-infinity difference");
  compare->add_option("--value-tolerance", value_tolerance,
                      "allowed L-infinity difference on value columns (default: --tolerance)");

  SimulateOptions sim;
  CLI::App* simulate = app.add_subcommand("simulate", "roll out a strategy and measure gaps");
  add_game_options(simulate, game);
  add_common_options(simulate, common, true);
  simulate->add_option("--strategy", sim.strategy, "strategy CSV")->required();
  simulate->add_option("--episodes", sim.episodes, "episodes");
  simulate->add_option("--deviations", sim.deviations, "deviation sets to test")
      ->check(CLI::IsMember({"none", "pure"}));
  simulate->add_option("--leader-res", sim.leader_resolution, "leader deviation lattice");
  simulate->add_option("--tolerance", sim.tolerance, "epsilon budget for the deviation gaps");

  CLI::App* export_game = app.add_subcommand("export-game", "write the game as JSON");
  add_game_options(export_game, game);
  export_game->add_option("--out", common.out, "output directory");

  std::vector<std::string> argv_store{"stackgame"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (exact->parsed()) return cmd_solve_exact(game, common, exact_cfg, out, err);
    if (rl->parsed()) return cmd_solve_rl(game, common, rl_cfg, out, err);
    if (compare->parsed()) {
      return cmd_compare(path_a, path_b, tolerance, value_tolerance, out, err);
    }
    if (simulate->parsed()) return cmd_simulate(game, common, sim, out, err);
    if (export_game->parsed()) return cmd_export_game(game, common, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace stackgame
