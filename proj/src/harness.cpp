#include "mstd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mstd/envs.hpp"
#include "mstd/errors.hpp"

namespace mstd {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long parse_long_field(const std::string& field, const std::string& text) {
  try {
    std::size_t pos = 0;
    long v = std::stol(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config field '" + field + "': expected an integer, got '" +
                      text + "'");
  }
}

double parse_double_field(const std::string& field, const std::string& text) {
  try {
    std::size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config field '" + field + "': expected a number, got '" +
                      text + "'");
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string piece;
  std::istringstream in(text);
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream words(normalized);
  while (words >> piece) {
    try {
      std::size_t pos = 0;
      unsigned long long v = std::stoull(piece, &pos);
      if (pos != piece.size()) throw std::invalid_argument("trailing characters");
      seeds.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("config field 'seeds': expected an integer, got '" +
                        piece + "'");
    }
  }
  return seeds;
}

}  // namespace

void validate_experiment(const ExperimentConfig& config) {
  try {
    make_env(config.env);
  } catch (const ConfigError&) {
    throw ConfigError("config field 'env': unknown environment '" + config.env +
                      "'");
  }
  if (config.agent.window < 1)
    throw ConfigError("config field 'L': must be at least 1");
  if (config.total_steps <= 0)
    throw ConfigError("config field 'steps': must be positive");
  if (config.eval_every < 1)
    throw ConfigError("config field 'eval_every': must be positive");
  if (config.eval_episodes < 1)
    throw ConfigError("config field 'eval_episodes': must be positive");
  if (config.seeds.empty())
    throw ConfigError("config field 'seeds': at least one seed required");
  std::set<std::uint64_t> distinct(config.seeds.begin(), config.seeds.end());
  if (distinct.size() != config.seeds.size())
    throw ConfigError("config field 'seeds': seeds must be distinct");
  if (config.out_dir.empty())
    throw ConfigError("config field 'out': output directory must be nonempty");
  try {
    validate_agent_config(config.agent);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid agent configuration: ") + e.what());
  }
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> entries;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": malformed section header");
      continue;  // sections group lines visually, keys are global
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    if (entries.count(key))
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    entries[key] = value;
  }
  return entries;
}

void apply_config_entries(ExperimentConfig& config,
                          const std::map<std::string, std::string>& entries) {
  for (const auto& [key, value] : entries) {
    if (key == "env") {
      config.env = value;
    } else if (key == "algo") {
      config.agent.algo = parse_algo(value);
    } else if (key == "mode") {
      if (value == "loaded")
        config.agent.action_mode = ActionMode::Loaded;
      else if (value == "generated")
        config.agent.action_mode = ActionMode::Generated;
      else
        throw ConfigError("config field 'mode': expected 'loaded' or "
                          "'generated', got '" + value + "'");
    } else if (key == "L") {
      config.agent.window = static_cast<int>(parse_long_field(key, value));
    } else if (key == "steps") {
      config.total_steps = parse_long_field(key, value);
    } else if (key == "seeds") {
      config.seeds = parse_seed_list(value);
    } else if (key == "out") {
      config.out_dir = value;
    } else if (key == "eval_every") {
      config.eval_every = parse_long_field(key, value);
    } else if (key == "eval_episodes") {
      config.eval_episodes = static_cast<int>(parse_long_field(key, value));
    } else if (key == "discount") {
      config.agent.discount = parse_double_field(key, value);
    } else if (key == "tau") {
      config.agent.tau = parse_double_field(key, value);
    } else if (key == "batch_size") {
      config.agent.batch_size = static_cast<int>(parse_long_field(key, value));
    } else if (key == "lr") {
      config.agent.lr = parse_double_field(key, value);
    } else if (key == "alpha") {
      config.agent.alpha = parse_double_field(key, value);
    } else if (key == "hidden") {
      config.agent.hidden = static_cast<int>(parse_long_field(key, value));
    } else if (key == "buffer_capacity") {
      long v = parse_long_field(key, value);
      if (v <= 0) throw ConfigError("config field 'buffer_capacity': must be positive");
      config.agent.buffer_capacity = static_cast<std::size_t>(v);
    } else if (key == "warmup") {
      config.agent.warmup = static_cast<int>(parse_long_field(key, value));
    } else if (key == "ou_mu") {
      config.agent.ou_mu = parse_double_field(key, value);
    } else if (key == "ou_theta") {
      config.agent.ou_theta = parse_double_field(key, value);
    } else if (key == "ou_sigma") {
      config.agent.ou_sigma = parse_double_field(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

ExperimentConfig parse_config(
    const std::optional<std::string>& file_path,
    const std::map<std::string, std::string>& overrides) {
  ExperimentConfig config;
  if (file_path) apply_config_entries(config, read_config_file(*file_path));
  apply_config_entries(config, overrides);
  validate_experiment(config);
  return config;
}

SummaryStat aggregate_seeds(const std::vector<double>& final_returns) {
  if (final_returns.empty())
    throw ContractError("aggregate_seeds: no returns to aggregate");
  SummaryStat stat;
  stat.n = static_cast<int>(final_returns.size());
  double sum = 0.0;
  for (double v : final_returns) sum += v;
  stat.mean = sum / stat.n;
  if (stat.n == 1) {
    stat.std = 0.0;
    stat.single_seed = true;
    return stat;
  }
  double sq = 0.0;
  for (double v : final_returns) sq += (v - stat.mean) * (v - stat.mean);
  stat.std = std::sqrt(sq / (stat.n - 1));
  return stat;
}

std::string format_mean_std(const SummaryStat& stat) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f±%.1f", stat.mean, stat.std);
  return buf;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "step,episode,episode_return,critic_loss,actor_loss,wall_ms\n";
  char buf[256];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%ld,%ld,%.17g,%.17g,%.17g,%ld\n", r.step,
                  r.episode, r.episode_return, r.critic_loss, r.actor_loss,
                  r.wall_ms);
    out << buf;
  }
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void csv_error(const std::string& path, int line_no,
                            const std::string& what) {
  throw ConfigError(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metrics file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) csv_error(path, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "step,episode,episode_return,critic_loss,actor_loss,wall_ms")
    csv_error(path, 1, "unexpected header '" + line + "'");

  std::vector<MetricsRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 6)
      csv_error(path, line_no,
                "expected 6 fields, got " + std::to_string(fields.size()));
    MetricsRow r;
    try {
      std::size_t pos = 0;
      r.step = std::stol(fields[0], &pos);
      if (pos != fields[0].size()) throw std::invalid_argument("step");
      r.episode = std::stol(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("episode");
      r.episode_return = std::stod(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("episode_return");
      r.critic_loss = std::stod(fields[3], &pos);
      if (pos != fields[3].size()) throw std::invalid_argument("critic_loss");
      r.actor_loss = std::stod(fields[4], &pos);
      if (pos != fields[4].size()) throw std::invalid_argument("actor_loss");
      r.wall_ms = std::stol(fields[5], &pos);
      if (pos != fields[5].size()) throw std::invalid_argument("wall_ms");
    } catch (const std::exception&) {
      csv_error(path, line_no, "malformed row '" + line + "'");
    }
    if (!rows.empty() && r.step < rows.back().step)
      csv_error(path, line_no, "step goes backwards");
    rows.push_back(r);
  }
  return rows;
}

std::string run_label(const ExperimentConfig& config) {
  std::string label = algo_name(config.agent.algo);
  if (target_kind(config.agent.algo) != TargetKind::SingleStep)
    label += "_L" + std::to_string(config.agent.window);
  if (target_kind(config.agent.algo) == TargetKind::MultiState)
    label += config.agent.action_mode == ActionMode::Loaded ? "_loaded"
                                                            : "_generated";
  return label;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_experiment(config);
  std::filesystem::create_directories(config.out_dir);
  const std::string label = run_label(config);

  ExperimentResult result;
  std::vector<double> finals;
  for (std::uint64_t seed : config.seeds) {
    SeedOutcome outcome;
    outcome.seed = seed;
    std::string stem =
        config.out_dir + "/" + label + "_seed" + std::to_string(seed);
    try {
      auto env = make_env(config.env);
      auto agent = make_agent(config.agent, *env, seed);
      TrainRunOptions opts;
      opts.total_steps = config.total_steps;
      opts.eval_every = static_cast<int>(config.eval_every);
      opts.eval_episodes = config.eval_episodes;
      opts.seed = seed;
      TrainRunResult run = run_training(*agent, *env, opts);
      if (run.eval_rows.empty())
        throw std::runtime_error("run produced no evaluation episodes");
      outcome.eval_csv = stem + "_eval.csv";
      outcome.train_csv = stem + "_train.csv";
      write_metrics_csv(outcome.eval_csv, run.eval_rows);
      write_metrics_csv(outcome.train_csv, run.train_rows);
      std::size_t tail = std::min<std::size_t>(20, run.eval_rows.size());
      double sum = 0.0;
      for (std::size_t i = run.eval_rows.size() - tail; i < run.eval_rows.size();
           ++i)
        sum += run.eval_rows[i].episode_return;
      outcome.final_return = sum / static_cast<double>(tail);
      finals.push_back(outcome.final_return);
    } catch (const std::exception& e) {
      outcome.failed = true;
      outcome.error = e.what();
    }
    result.outcomes.push_back(std::move(outcome));
  }

  if (finals.empty()) {
    throw std::runtime_error("run_experiment: every seed failed; first error: " +
                             result.outcomes.front().error);
  }
  result.summary = aggregate_seeds(finals);

  nlohmann::json doc;
  doc["env"] = config.env;
  doc["algo"] = algo_name(config.agent.algo);
  doc["mode"] = config.agent.action_mode == ActionMode::Loaded ? "loaded"
                                                               : "generated";
  doc["L"] = config.agent.window;
  doc["steps"] = config.total_steps;
  doc["eval_every"] = config.eval_every;
  doc["eval_episodes"] = config.eval_episodes;
  doc["seeds"] = config.seeds;
  doc["final_return"] = {{"mean", result.summary.mean},
                         {"std", result.summary.std},
                         {"n", result.summary.n},
                         {"single_seed", result.summary.single_seed},
                         {"formatted", format_mean_std(result.summary)}};
  nlohmann::json per_seed = nlohmann::json::array();
  nlohmann::json warnings = nlohmann::json::array();
  for (const SeedOutcome& o : result.outcomes) {
    nlohmann::json row;
    row["seed"] = o.seed;
    if (o.failed) {
      row["failed"] = true;
      row["error"] = o.error;
      warnings.push_back("seed " + std::to_string(o.seed) +
                         " failed and was excluded: " + o.error);
    } else {
      row["final_return"] = o.final_return;
      row["eval_csv"] = o.eval_csv;
      row["train_csv"] = o.train_csv;
    }
    per_seed.push_back(std::move(row));
  }
  doc["per_seed"] = std::move(per_seed);
  doc["warnings"] = std::move(warnings);

  result.summary_path = config.out_dir + "/" + label + "_summary.json";
  std::ofstream out(result.summary_path);
  if (!out)
    throw ConfigError("cannot open '" + result.summary_path + "' for writing");
  out << doc.dump(2) << "\n";
  return result;
}

namespace {

struct Series {
  std::vector<double> steps;    // strictly increasing
  std::vector<double> returns;  // same-step rows collapsed to their mean
};

Series collapse_by_step(const std::vector<MetricsRow>& rows) {
  Series s;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < rows.size() && rows[j].step == rows[i].step) {
      sum += rows[j].episode_return;
      ++j;
    }
    s.steps.push_back(static_cast<double>(rows[i].step));
    s.returns.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return s;
}

double interpolate(const Series& s, double x) {
  if (x <= s.steps.front()) return s.returns.front();
  if (x >= s.steps.back()) return s.returns.back();
  auto it = std::upper_bound(s.steps.begin(), s.steps.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - s.steps.begin());
  std::size_t lo = hi - 1;
  double t = (x - s.steps[lo]) / (s.steps[hi] - s.steps[lo]);
  return s.returns[lo] + t * (s.returns[hi] - s.returns[lo]);
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void emit_learning_curve(const std::vector<std::string>& csv_paths,
                         const std::string& out_path) {
  if (csv_paths.empty())
    throw ContractError("emit_learning_curve: no input files");

  std::vector<Series> series;
  for (const std::string& path : csv_paths) {
    std::vector<MetricsRow> rows = read_metrics_csv(path);
    if (rows.empty()) throw ConfigError(path + ":1: no data rows");
    series.push_back(collapse_by_step(rows));
  }

  double lo = series.front().steps.front();
  double hi = series.front().steps.back();
  for (const Series& s : series) {
    lo = std::max(lo, s.steps.front());
    hi = std::min(hi, s.steps.back());
  }
  if (hi < lo)
    throw ConfigError("emit_learning_curve: step ranges do not overlap");

  const int grid_n = hi > lo ? 200 : 1;
  std::vector<double> grid(grid_n), mean(grid_n), std_dev(grid_n);
  for (int i = 0; i < grid_n; ++i)
    grid[i] = grid_n == 1 ? lo : lo + (hi - lo) * i / (grid_n - 1);
  const int n = static_cast<int>(series.size());
  for (int i = 0; i < grid_n; ++i) {
    double sum = 0.0;
    for (const Series& s : series) sum += interpolate(s, grid[i]);
    mean[i] = sum / n;
    double sq = 0.0;
    for (const Series& s : series) {
      double d = interpolate(s, grid[i]) - mean[i];
      sq += d * d;
    }
    std_dev[i] = n > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
  }

  double xmin = series.front().steps.front();
  double xmax = series.front().steps.back();
  double ymin = series.front().returns.front();
  double ymax = ymin;
  for (const Series& s : series) {
    xmin = std::min(xmin, s.steps.front());
    xmax = std::max(xmax, s.steps.back());
    for (double v : s.returns) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  for (int i = 0; i < grid_n; ++i) {
    ymin = std::min(ymin, mean[i] - std_dev[i]);
    ymax = std::max(ymax, mean[i] + std_dev[i]);
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  double ypad = (ymax - ymin) * 0.05;
  if (ypad == 0.0) ypad = std::max(1.0, std::fabs(ymax) * 0.05);
  ymin -= ypad;
  ymax += ypad;

  const double W = 960, H = 540, ml = 80, mr = 24, mt = 24, mb = 56;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto sy = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"540\" "
         "viewBox=\"0 0 960 540\">\n"
      << "<rect width=\"960\" height=\"540\" fill=\"#ffffff\"/>\n";

  // axes with 5 ticks per side
  svg << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(H - mb) << "\" x2=\""
      << fmt(W - mr) << "\" y2=\"" << fmt(H - mb)
      << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(mt) << "\" x2=\""
      << fmt(ml) << "\" y2=\"" << fmt(H - mb)
      << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double xv = xmin + (xmax - xmin) * i / 4.0;
    double px = sx(xv);
    svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(H - mb) << "\" x2=\""
        << fmt(px) << "\" y2=\"" << fmt(H - mb + 6)
        << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(H - mb + 22)
        << "\" font-family=\"sans-serif\" font-size=\"13\" "
           "text-anchor=\"middle\">"
        << fmt(xv) << "</text>\n";
    double yv = ymin + (ymax - ymin) * i / 4.0;
    double py = sy(yv);
    svg << "<line x1=\"" << fmt(ml - 6) << "\" y1=\"" << fmt(py) << "\" x2=\""
        << fmt(ml) << "\" y2=\"" << fmt(py)
        << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt(ml - 10) << "\" y=\"" << fmt(py + 4)
        << "\" font-family=\"sans-serif\" font-size=\"13\" "
           "text-anchor=\"end\">"
        << fmt(yv) << "</text>\n";
  }
  svg << "<text x=\"" << fmt((ml + W - mr) / 2) << "\" y=\"" << fmt(H - 12)
      << "\" font-family=\"sans-serif\" font-size=\"15\" "
         "text-anchor=\"middle\">step</text>\n";
  svg << "<text x=\"20\" y=\"" << fmt((mt + H - mb) / 2)
      << "\" font-family=\"sans-serif\" font-size=\"15\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << fmt((mt + H - mb) / 2) << ")\">return</text>\n";

  if (grid_n > 1) {
    svg << "<path d=\"M";
    for (int i = 0; i < grid_n; ++i)
      svg << (i ? " L" : "") << fmt(sx(grid[i])) << ","
          << fmt(sy(mean[i] + std_dev[i]));
    for (int i = grid_n - 1; i >= 0; --i)
      svg << " L" << fmt(sx(grid[i])) << "," << fmt(sy(mean[i] - std_dev[i]));
    svg << " Z\" fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
  }

  for (const Series& s : series) {
    svg << "<polyline fill=\"none\" stroke=\"#999999\" stroke-opacity=\"0.4\" "
           "stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      svg << (i ? " " : "") << fmt(sx(s.steps[i])) << "," << fmt(sy(s.returns[i]));
    svg << "\"/>\n";
  }

  svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" "
         "points=\"";
  for (int i = 0; i < grid_n; ++i)
    svg << (i ? " " : "") << fmt(sx(grid[i])) << "," << fmt(sy(mean[i]));
  svg << "\"/>\n</svg>\n";

  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot open '" + out_path + "' for writing");
  out << svg.str();
  if (!out) throw ConfigError("failed writing '" + out_path + "'");
}

std::vector<ExperimentConfig> sweep_grid(const ExperimentConfig& base) {
  const bool sac = is_sac_family(base.agent.algo);
  std::vector<ExperimentConfig> grid;

  auto cell = [&](Algo algo, int window, ActionMode mode) {
    ExperimentConfig c = base;
    c.agent.algo = algo;
    c.agent.window = window;
    c.agent.action_mode = mode;
    c.out_dir = base.out_dir + "/" + run_label(c);
    grid.push_back(std::move(c));
  };

  cell(sac ? Algo::Sac : Algo::Ddpg, 1, ActionMode::Loaded);
  for (int window : {2, 3, 4})
    cell(sac ? Algo::MpSac : Algo::MpDdpg, window, ActionMode::Loaded);
  for (ActionMode mode : {ActionMode::Loaded, ActionMode::Generated})
    for (int window : {2, 3, 4})
      cell(sac ? Algo::MsSac : Algo::MsDdpg, window, mode);
  return grid;
}

}  // namespace mstd
