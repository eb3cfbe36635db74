#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mstd/convergence.hpp"
#include "mstd/errors.hpp"
#include "mstd/harness.hpp"
#include "mstd/rng.hpp"

namespace {

struct StrOpt {
  const char* flag;
  const char* key;
  const char* help;
  std::string value;
};

// The experiment flags shared by train and sweep. Values stay strings so the
// config parser is the single place that converts and validates them.
std::vector<StrOpt> experiment_opts() {
  return {
      {"--env", "env", "environment name (pendulum, chain)", ""},
      {"--algo", "algo", "ddpg, mpddpg, msddpg, sac, mpsac, mssac", ""},
      {"--mode", "mode", "intermediate actions: loaded or generated", ""},
      {"--L", "L", "window length (number of averaged horizons)", ""},
      {"--steps", "steps", "total environment steps per seed", ""},
      {"--out", "out", "output directory", ""},
      {"--eval-every", "eval_every", "steps between evaluation rounds", ""},
      {"--eval-episodes", "eval_episodes", "episodes per evaluation round", ""},
      {"--discount", "discount", "discount factor", ""},
      {"--tau", "tau", "soft target update rate", ""},
      {"--batch-size", "batch_size", "minibatch size", ""},
      {"--lr", "lr", "learning rate (0 = family default)", ""},
      {"--alpha", "alpha", "entropy coefficient (stochastic family)", ""},
      {"--hidden", "hidden", "hidden layer width", ""},
      {"--buffer-capacity", "buffer_capacity", "replay buffer capacity", ""},
      {"--warmup", "warmup", "buffer size before updates start", ""},
      {"--ou-mu", "ou_mu", "exploration noise mean", ""},
      {"--ou-theta", "ou_theta", "exploration noise mean reversion", ""},
      {"--ou-sigma", "ou_sigma", "exploration noise scale", ""},
  };
}

void register_experiment_flags(CLI::App* sub, std::vector<StrOpt>& opts,
                               std::string& config_path,
                               std::vector<std::string>& seed_values) {
  sub->add_option("--config", config_path,
                  "config file (key = value lines, [section] headers)");
  sub->add_option("--seed", seed_values, "run seed (repeat for several)");
  for (StrOpt& o : opts) sub->add_option(o.flag, o.value, o.help);
}

mstd::ExperimentConfig gather_experiment(CLI::App* sub,
                                         std::vector<StrOpt>& opts,
                                         const std::string& config_path,
                                         const std::vector<std::string>& seeds) {
  std::map<std::string, std::string> overrides;
  for (StrOpt& o : opts)
    if (sub->count(o.flag)) overrides[o.key] = o.value;
  if (!seeds.empty()) {
    std::string joined;
    for (const std::string& s : seeds) {
      if (!joined.empty()) joined += ",";
      joined += s;
    }
    overrides["seeds"] = joined;
  }
  std::optional<std::string> file;
  if (sub->count("--config")) file = config_path;
  return mstd::parse_config(file, overrides);
}

void report_experiment(const mstd::ExperimentResult& result) {
  for (const mstd::SeedOutcome& o : result.outcomes) {
    if (o.failed)
      std::cout << "seed " << o.seed << " FAILED: " << o.error << "\n";
    else
      std::cout << "seed " << o.seed << " final return " << o.final_return
                << "  (" << o.eval_csv << ")\n";
  }
  std::cout << "final return over seeds: "
            << mstd::format_mean_std(result.summary) << "  (n="
            << result.summary.n << ")\n"
            << "summary: " << result.summary_path << "\n";
}

int run_train(CLI::App* sub, std::vector<StrOpt>& opts,
              const std::string& config_path,
              const std::vector<std::string>& seeds) {
  mstd::ExperimentConfig config =
      gather_experiment(sub, opts, config_path, seeds);
  mstd::ExperimentResult result = mstd::run_experiment(config);
  report_experiment(result);
  return 0;
}

int run_sweep(CLI::App* sub, std::vector<StrOpt>& opts,
              const std::string& config_path,
              const std::vector<std::string>& seeds) {
  // The sweep grid is fixed (window 1 plus 2..4 per family), so a window in
  // the base config can only contradict it.
  if (sub->count("--L"))
    throw mstd::ConfigError(
        "sweep runs the fixed window grid (1 and 2..4 per variant); drop --L");
  mstd::ExperimentConfig base =
      gather_experiment(sub, opts, config_path, seeds);
  std::vector<mstd::ExperimentConfig> grid = mstd::sweep_grid(base);

  nlohmann::json runs = nlohmann::json::object();
  std::map<std::string, std::map<int, std::string>> cells;
  std::map<std::string, std::string> baselines;
  for (const mstd::ExperimentConfig& cell : grid) {
    std::string label = mstd::run_label(cell);
    std::cout << "[sweep] " << label << "\n";
    mstd::ExperimentResult result = mstd::run_experiment(cell);
    report_experiment(result);
    std::string formatted = mstd::format_mean_std(result.summary);
    runs[label] = {{"mean", result.summary.mean},
                   {"std", result.summary.std},
                   {"n", result.summary.n},
                   {"formatted", formatted},
                   {"summary", result.summary_path}};
    std::string algo = mstd::algo_name(cell.agent.algo);
    std::string row = algo;
    if (mstd::target_kind(cell.agent.algo) == mstd::TargetKind::MultiState)
      row += cell.agent.action_mode == mstd::ActionMode::Loaded
                 ? " (loaded)"
                 : " (generated)";
    if (cell.agent.window == 1)
      baselines[row] = formatted;
    else
      cells[row][cell.agent.window] = formatted;
  }

  // One row per algorithm; the single-step baseline spans the window columns.
  nlohmann::json table = nlohmann::json::array();
  for (const auto& [row, value] : baselines) {
    nlohmann::json r;
    r["name"] = row;
    for (int window : {2, 3, 4}) r[std::to_string(window)] = value;
    table.push_back(std::move(r));
  }
  for (const auto& [row, by_window] : cells) {
    nlohmann::json r;
    r["name"] = row;
    for (const auto& [window, value] : by_window)
      r[std::to_string(window)] = value;
    table.push_back(std::move(r));
  }

  nlohmann::json doc;
  doc["runs"] = std::move(runs);
  doc["table"] = std::move(table);
  std::filesystem::create_directories(base.out_dir);
  std::string path = base.out_dir + "/sweep.json";
  std::ofstream out(path);
  if (!out) throw mstd::ConfigError("cannot open '" + path + "' for writing");
  out << doc.dump(2) << "\n";
  std::cout << "sweep table: " << path << "\n";
  return 0;
}

struct ConvergenceArgs {
  std::string mdp_path;
  int window = 1;
  std::uint64_t updates = 100000;
  std::uint64_t record_every = 1000;
  std::uint64_t seed = 1;
  double alpha0 = 0.5;
  double t0 = 2000.0;
  double kappa = 0.7;
  double tol = 1e-10;
  int trials = 50;
  double pass_frac = 0.05;
  std::string out_dir = "convergence-out";
};

int run_convergence(const ConvergenceArgs& args) {
  mstd::FiniteMdp mdp = mstd::load_mdp(args.mdp_path);
  mstd::BehaviorPolicy behavior =
      mstd::BehaviorPolicy::uniform(mdp.num_states, mdp.num_actions);
  mstd::LrSchedule schedule{args.alpha0, args.t0, args.kappa};
  try {
    mstd::validate_schedule(schedule);
  } catch (const std::exception& e) {
    throw mstd::ConfigError(e.what());
  }

  mstd::ConvergenceRunOptions opts;
  opts.window = args.window;
  opts.updates = args.updates;
  opts.record_every = args.record_every;
  opts.seed = args.seed;
  opts.fixed_point_tol = args.tol;
  mstd::ConvergenceTrace trace =
      mstd::run_tabular_convergence(mdp, behavior, schedule, opts);

  std::filesystem::create_directories(args.out_dir);
  std::string csv_path = args.out_dir + "/residuals.csv";
  {
    std::ofstream csv(csv_path);
    if (!csv)
      throw mstd::ConfigError("cannot open '" + csv_path + "' for writing");
    csv << "update,residual\n";
    char buf[64];
    for (const auto& [update, residual] : trace.residuals) {
      std::snprintf(buf, sizeof buf, "%llu,%.17g\n",
                    static_cast<unsigned long long>(update), residual);
      csv << buf;
    }
  }

  std::mt19937_64 cgen(mstd::derive_seed(args.seed, "contraction"));
  nlohmann::json contraction = nlohmann::json::array();
  for (int l = 1; l <= args.window; ++l) {
    double ratio = mstd::contraction_test(mdp, l, behavior, args.trials, cgen);
    double bound = std::pow(mdp.discount, l);
    contraction.push_back({{"l", l},
                           {"ratio", ratio},
                           {"bound", bound},
                           {"ok", ratio <= bound + 1e-9}});
  }

  mstd::QTable optimal = mstd::value_iteration(mdp, args.tol, 1000000);
  double norm = 0.0;
  for (double v : trace.q_fixed.values) norm = std::max(norm, std::fabs(v));
  double threshold = args.pass_frac * std::max(1.0, norm);
  bool passed = trace.final_residual <= threshold;

  auto table_json = [](const mstd::QTable& q) {
    nlohmann::json rows = nlohmann::json::array();
    for (int s = 0; s < q.num_states; ++s) {
      nlohmann::json row = nlohmann::json::array();
      for (int a = 0; a < q.num_actions; ++a) row.push_back(q.at(s, a));
      rows.push_back(std::move(row));
    }
    return rows;
  };

  nlohmann::json doc;
  doc["mdp"] = args.mdp_path;
  doc["L"] = args.window;
  doc["updates"] = args.updates;
  doc["schedule"] = {{"alpha0", args.alpha0}, {"t0", args.t0}, {"kappa", args.kappa}};
  doc["q_fixed"] = table_json(trace.q_fixed);
  doc["q_final"] = table_json(trace.q_final);
  doc["final_residual"] = trace.final_residual;
  doc["pass_threshold"] = threshold;
  doc["passed"] = passed;
  doc["contraction"] = std::move(contraction);
  doc["distance_to_optimal"] = mstd::max_abs_diff(trace.q_fixed, optimal);
  doc["residual_csv"] = csv_path;

  std::string report_path = args.out_dir + "/convergence.json";
  std::ofstream report(report_path);
  if (!report)
    throw mstd::ConfigError("cannot open '" + report_path + "' for writing");
  report << doc.dump(2) << "\n";

  std::cout << (passed ? "PASS" : "FAIL") << ": final residual "
            << trace.final_residual << " (threshold " << threshold << ")\n"
            << "report: " << report_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-state TD experiments"};
  app.require_subcommand(1);

  CLI::App* train = app.add_subcommand("train", "train one configuration");
  std::vector<StrOpt> train_opts = experiment_opts();
  std::string train_config;
  std::vector<std::string> train_seeds;
  register_experiment_flags(train, train_opts, train_config, train_seeds);

  CLI::App* sweep =
      app.add_subcommand("sweep", "window/mode grid for one algorithm family");
  std::vector<StrOpt> sweep_opts = experiment_opts();
  std::string sweep_config;
  std::vector<std::string> sweep_seeds;
  register_experiment_flags(sweep, sweep_opts, sweep_config, sweep_seeds);

  CLI::App* conv =
      app.add_subcommand("convergence", "tabular convergence laboratory");
  ConvergenceArgs cargs;
  conv->add_option("--mdp", cargs.mdp_path, "MDP description file")->required();
  conv->add_option("--L", cargs.window, "window length");
  conv->add_option("--updates", cargs.updates, "number of table updates");
  conv->add_option("--record-every", cargs.record_every,
                   "updates between residual samples");
  conv->add_option("--seed", cargs.seed, "run seed");
  conv->add_option("--alpha0", cargs.alpha0, "initial step size");
  conv->add_option("--t0", cargs.t0, "step size decay offset");
  conv->add_option("--kappa", cargs.kappa, "step size decay exponent (0.5,1]");
  conv->add_option("--tol", cargs.tol, "fixed point tolerance");
  conv->add_option("--trials", cargs.trials, "contraction test pairs per l");
  conv->add_option("--pass-frac", cargs.pass_frac,
                   "pass when residual <= frac * max(1, |Q^f|)");
  conv->add_option("--out", cargs.out_dir, "output directory");

  CLI::App* plot = app.add_subcommand("plot", "render metrics CSVs as an SVG");
  std::vector<std::string> plot_csvs;
  std::string plot_out = "curve.svg";
  plot->add_option("csvs", plot_csvs, "evaluation CSV files")->required();
  plot->add_option("--out", plot_out, "output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (train->parsed())
      return run_train(train, train_opts, train_config, train_seeds);
    if (sweep->parsed())
      return run_sweep(sweep, sweep_opts, sweep_config, sweep_seeds);
    if (conv->parsed()) return run_convergence(cargs);
    if (plot->parsed()) {
      mstd::emit_learning_curve(plot_csvs, plot_out);
      std::cout << "wrote " << plot_out << "\n";
      return 0;
    }
  } catch (const mstd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
