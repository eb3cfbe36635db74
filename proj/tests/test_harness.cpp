#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mstd/errors.hpp"
#include "mstd/harness.hpp"
#include "mstd/rng.hpp"
#include "test_util.hpp"

using namespace mstd;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Drops the trailing wall_ms field from every line so reruns compare equal.
std::string strip_wall(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    out << line.substr(0, line.rfind(',')) << '\n';
  return out.str();
}

bool contains(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

template <typename Error, typename Fn>
std::string message_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "no exception";
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("seed aggregation") {
  SummaryStat s = aggregate_seeds({1.0, 2.0, 3.0});
  CHECK(s.mean == 2.0);
  CHECK(s.std == 1.0);
  CHECK(s.n == 3);
  CHECK_FALSE(s.single_seed);

  s = aggregate_seeds({-1.0, 1.0});
  CHECK(s.mean == 0.0);
  CHECK(s.std == 1.4142135623730951);

  s = aggregate_seeds({5.0});
  CHECK(s.mean == 5.0);
  CHECK(s.std == 0.0);
  CHECK(s.n == 1);
  CHECK(s.single_seed);

  CHECK_THROWS_AS(aggregate_seeds({}), ContractError);

  // naive mean / sample-std oracle on random draws
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 2 + uniform_index(gen, 9);
    std::vector<double> xs(n);
    for (double& x : xs) x = uniform_range(gen, -10.0, 10.0);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double sq = 0.0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    double sd = std::sqrt(sq / static_cast<double>(n - 1));
    SummaryStat got = aggregate_seeds(xs);
    CHECK(got.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(got.std == doctest::Approx(sd).epsilon(1e-12));
    CHECK(got.n == static_cast<int>(n));
  }
}

TEST_CASE("summary formatting") {
  SummaryStat s;
  s.mean = 2.0;
  s.std = 1.0;
  CHECK(format_mean_std(s) == "2.0±1.0");
  s.mean = -123.44;
  s.std = 5.58;
  CHECK(format_mean_std(s) == "-123.4±5.6");
  s.mean = 0.0;
  s.std = 0.0;
  CHECK(format_mean_std(s) == "0.0±0.0");
}

TEST_CASE("metrics csv round trip is exact") {
  auto dir = fresh_dir("mstd_harness_csv");
  std::vector<MetricsRow> rows;
  MetricsRow r;
  r.step = 0;
  r.episode = 0;
  r.episode_return = 0.1;
  r.critic_loss = 1.0 / 3.0;
  r.actor_loss = -2.718281828459045;
  r.wall_ms = 12;
  rows.push_back(r);
  r.step = 17;
  r.episode = 1;
  r.episode_return = -1.2345678901234567e+300;
  r.critic_loss = 2.2250738585072014e-308;  // smallest normal; subnormals hit stod's ERANGE
  r.actor_loss = 0.0;
  r.wall_ms = 0;
  rows.push_back(r);
  r.step = 17;  // equal steps are allowed, only decreases are rejected
  r.episode = 2;
  r.episode_return = 3.0;
  r.critic_loss = 1e-17;
  r.actor_loss = 7.0;
  r.wall_ms = 99;
  rows.push_back(r);

  std::string path = (dir / "m.csv").string();
  write_metrics_csv(path, rows);
  std::vector<MetricsRow> got = read_metrics_csv(path);
  REQUIRE(got.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(got[i].step == rows[i].step);
    CHECK(got[i].episode == rows[i].episode);
    CHECK(got[i].episode_return == rows[i].episode_return);
    CHECK(got[i].critic_loss == rows[i].critic_loss);
    CHECK(got[i].actor_loss == rows[i].actor_loss);
    CHECK(got[i].wall_ms == rows[i].wall_ms);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("metrics csv reading") {
  auto dir = fresh_dir("mstd_harness_csvread");
  const std::string header =
      "step,episode,episode_return,critic_loss,actor_loss,wall_ms\n";
  auto path = [&](const std::string& name) { return (dir / name).string(); };

  SUBCASE("blank lines and crlf endings are tolerated") {
    write_text(dir / "ok.csv",
               "step,episode,episode_return,critic_loss,actor_loss,wall_ms\r\n"
               "\r\n"
               "1,0,0.5,0.25,0.125,3\r\n"
               "\n"
               "2,1,1,0,0,4\n");
    std::vector<MetricsRow> rows = read_metrics_csv(path("ok.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].step == 1);
    CHECK(rows[0].episode_return == 0.5);
    CHECK(rows[1].step == 2);
    CHECK(rows[1].wall_ms == 4);
  }
  SUBCASE("missing file") {
    std::string msg = message_of<ConfigError>(
        [&] { read_metrics_csv(path("absent.csv")); });
    CHECK(contains(msg, "cannot open metrics file"));
  }
  SUBCASE("empty file") {
    write_text(dir / "e.csv", "");
    std::string msg =
        message_of<ConfigError>([&] { read_metrics_csv(path("e.csv")); });
    CHECK(contains(msg, ":1: missing header"));
  }
  SUBCASE("wrong header") {
    write_text(dir / "h.csv", "step,episode\n");
    std::string msg =
        message_of<ConfigError>([&] { read_metrics_csv(path("h.csv")); });
    CHECK(contains(msg, ":1: unexpected header"));
  }
  SUBCASE("five fields") {
    write_text(dir / "f.csv", header + "1,0,0.5,0.25,3\n");
    std::string msg =
        message_of<ConfigError>([&] { read_metrics_csv(path("f.csv")); });
    CHECK(contains(msg, ":2: expected 6 fields, got 5"));
  }
  SUBCASE("non numeric field") {
    write_text(dir / "n.csv", header + "1,0,zebra,0.25,0.125,3\n");
    std::string msg =
        message_of<ConfigError>([&] { read_metrics_csv(path("n.csv")); });
    CHECK(contains(msg, ":2: malformed row"));
  }
  SUBCASE("trailing junk in a field") {
    write_text(dir / "t.csv", header + "1x,0,0.5,0.25,0.125,3\n");
    std::string msg =
        message_of<ConfigError>([&] { read_metrics_csv(path("t.csv")); });
    CHECK(contains(msg, ":2: malformed row"));
  }
  SUBCASE("step going backwards") {
    write_text(dir / "b.csv", header + "5,0,1,0,0,1\n3,1,1,0,0,1\n");
    std::string msg =
        message_of<ConfigError>([&] { read_metrics_csv(path("b.csv")); });
    CHECK(contains(msg, ":3: step goes backwards"));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("config file parsing") {
  auto dir = fresh_dir("mstd_harness_cfg");
  auto path = [&](const std::string& name) { return (dir / name).string(); };

  SUBCASE("sections, comments, whitespace") {
    write_text(dir / "a.cfg",
               "# experiment\n"
               "[run]\n"
               "env = pendulum   ; inline comment\n"
               "  steps=500\n"
               "\n"
               "[agent]\n"
               "algo = mpddpg\n"
               "L = 2\n"
               "seeds = 1, 2 3\n");
    std::map<std::string, std::string> entries = read_config_file(path("a.cfg"));
    CHECK(entries.size() == 5);
    CHECK(entries.at("env") == "pendulum");
    CHECK(entries.at("steps") == "500");
    CHECK(entries.at("algo") == "mpddpg");
    CHECK(entries.at("L") == "2");
    CHECK(entries.at("seeds") == "1, 2 3");
  }
  SUBCASE("keys are global across sections") {
    write_text(dir / "d.cfg", "[a]\nenv = pendulum\n[b]\nenv = chain\n");
    std::string msg =
        message_of<ConfigError>([&] { read_config_file(path("d.cfg")); });
    CHECK(contains(msg, ":4: duplicate key 'env'"));
  }
  SUBCASE("malformed section header") {
    write_text(dir / "s.cfg", "[agent\n");
    std::string msg =
        message_of<ConfigError>([&] { read_config_file(path("s.cfg")); });
    CHECK(contains(msg, ":1: malformed section header"));
  }
  SUBCASE("missing equals sign") {
    write_text(dir / "q.cfg", "steps 500\n");
    std::string msg =
        message_of<ConfigError>([&] { read_config_file(path("q.cfg")); });
    CHECK(contains(msg, ":1: expected 'key = value'"));
  }
  SUBCASE("empty key") {
    write_text(dir / "k.cfg", "= 4\n");
    std::string msg =
        message_of<ConfigError>([&] { read_config_file(path("k.cfg")); });
    CHECK(contains(msg, ":1: empty key"));
  }
  SUBCASE("missing file") {
    std::string msg =
        message_of<ConfigError>([&] { read_config_file(path("absent.cfg")); });
    CHECK(contains(msg, "cannot open config file"));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("config assembly") {
  SUBCASE("defaults survive an empty parse") {
    ExperimentConfig c = parse_config(std::nullopt, {});
    CHECK(c.env == "pendulum");
    CHECK(c.total_steps == 30000);
    CHECK(c.eval_every == 1000);
    CHECK(c.eval_episodes == 5);
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(c.out_dir == "runs");
    CHECK(c.agent.algo == Algo::Ddpg);
    CHECK(c.agent.window == 1);
    CHECK(c.agent.discount == 0.99);
    CHECK(c.agent.tau == 0.005);
    CHECK(c.agent.batch_size == 128);
    CHECK(c.agent.hidden == 256);
    CHECK(c.agent.alpha == 0.12);
    CHECK(c.agent.buffer_capacity == 100000);
    CHECK(c.agent.warmup == 0);
  }
  SUBCASE("overrides win over the file") {
    auto dir = fresh_dir("mstd_harness_cfg2");
    write_text(dir / "b.cfg",
               "algo = mssac\nL = 2\nmode = generated\nsteps = 1234\n");
    ExperimentConfig c = parse_config((dir / "b.cfg").string(),
                                      {{"L", "3"}, {"tau", "0.01"}});
    CHECK(c.agent.algo == Algo::MsSac);
    CHECK(c.agent.window == 3);
    CHECK(c.agent.action_mode == ActionMode::Generated);
    CHECK(c.total_steps == 1234);
    CHECK(c.agent.tau == 0.01);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("every key lands on its field") {
    std::map<std::string, std::string> all = {
        {"env", "pendulum"},    {"algo", "msddpg"},
        {"mode", "generated"},  {"L", "4"},
        {"steps", "5000"},      {"seeds", "7 8"},
        {"out", "some/dir"},    {"eval_every", "250"},
        {"eval_episodes", "2"}, {"discount", "0.9"},
        {"tau", "0.01"},        {"batch_size", "32"},
        {"lr", "0.001"},        {"alpha", "0.05"},
        {"hidden", "16"},       {"buffer_capacity", "512"},
        {"warmup", "64"},       {"ou_mu", "0.1"},
        {"ou_theta", "0.25"},   {"ou_sigma", "0.4"}};
    ExperimentConfig c = parse_config(std::nullopt, all);
    CHECK(c.env == "pendulum");
    CHECK(c.agent.algo == Algo::MsDdpg);
    CHECK(c.agent.action_mode == ActionMode::Generated);
    CHECK(c.agent.window == 4);
    CHECK(c.total_steps == 5000);
    CHECK(c.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(c.out_dir == "some/dir");
    CHECK(c.eval_every == 250);
    CHECK(c.eval_episodes == 2);
    CHECK(c.agent.discount == 0.9);
    CHECK(c.agent.tau == 0.01);
    CHECK(c.agent.batch_size == 32);
    CHECK(c.agent.lr == 0.001);
    CHECK(c.agent.alpha == 0.05);
    CHECK(c.agent.hidden == 16);
    CHECK(c.agent.buffer_capacity == 512);
    CHECK(c.agent.warmup == 64);
    CHECK(c.agent.ou_mu == 0.1);
    CHECK(c.agent.ou_theta == 0.25);
    CHECK(c.agent.ou_sigma == 0.4);
  }
  SUBCASE("key and value errors") {
    auto parse_msg = [](std::map<std::string, std::string> overrides) {
      return message_of<ConfigError>(
          [&] { parse_config(std::nullopt, overrides); });
    };
    CHECK(contains(parse_msg({{"frobnicate", "1"}}), "unknown config key 'frobnicate'"));
    CHECK(contains(parse_msg({{"mode", "banana"}}),
                   "expected 'loaded' or 'generated', got 'banana'"));
    CHECK(contains(parse_msg({{"steps", "abc"}}), "expected an integer, got 'abc'"));
    CHECK(contains(parse_msg({{"tau", "xyz"}}), "expected a number, got 'xyz'"));
    CHECK(contains(parse_msg({{"seeds", "1,zebra"}}),
                   "config field 'seeds': expected an integer"));
    CHECK(contains(parse_msg({{"buffer_capacity", "0"}}),
                   "config field 'buffer_capacity': must be positive"));
    CHECK_THROWS_AS(parse_config(std::nullopt, {{"algo", "td3"}}), ConfigError);
  }
  SUBCASE("validation errors") {
    auto parse_msg = [](std::map<std::string, std::string> overrides) {
      return message_of<ConfigError>(
          [&] { parse_config(std::nullopt, overrides); });
    };
    CHECK(contains(parse_msg({{"env", "mars"}}), "unknown environment 'mars'"));
    CHECK(contains(parse_msg({{"L", "0"}}), "config field 'L': must be at least 1"));
    CHECK(contains(parse_msg({{"steps", "0"}}), "config field 'steps': must be positive"));
    CHECK(contains(parse_msg({{"eval_every", "0"}}), "config field 'eval_every'"));
    CHECK(contains(parse_msg({{"eval_episodes", "0"}}), "config field 'eval_episodes'"));
    CHECK(contains(parse_msg({{"seeds", ""}}), "at least one seed"));
    CHECK(contains(parse_msg({{"seeds", "3 3"}}), "seeds must be distinct"));
    CHECK(contains(parse_msg({{"out", ""}}), "output directory must be nonempty"));
    CHECK(contains(parse_msg({{"tau", "1.5"}}), "invalid agent configuration"));
  }
}

TEST_CASE("run labels") {
  ExperimentConfig c;
  c.agent.algo = Algo::Ddpg;
  c.agent.window = 1;
  CHECK(run_label(c) == "ddpg");
  c.agent.algo = Algo::Sac;
  CHECK(run_label(c) == "sac");
  c.agent.algo = Algo::MpSac;
  c.agent.window = 2;
  CHECK(run_label(c) == "mpsac_L2");
  c.agent.algo = Algo::MpDdpg;
  c.agent.window = 4;
  c.agent.action_mode = ActionMode::Generated;  // no mode suffix at this kind
  CHECK(run_label(c) == "mpddpg_L4");
  c.agent.algo = Algo::MsDdpg;
  c.agent.window = 3;
  CHECK(run_label(c) == "msddpg_L3_generated");
  c.agent.algo = Algo::MsSac;
  c.agent.window = 2;
  c.agent.action_mode = ActionMode::Loaded;
  CHECK(run_label(c) == "mssac_L2_loaded");
}

TEST_CASE("sweep grid") {
  ExperimentConfig base;
  base.agent.algo = Algo::MsDdpg;
  base.out_dir = "sweep";
  base.total_steps = 777;

  std::vector<ExperimentConfig> grid = sweep_grid(base);
  REQUIRE(grid.size() == 10);
  CHECK(grid[0].agent.algo == Algo::Ddpg);
  CHECK(grid[0].agent.window == 1);
  CHECK(grid[0].out_dir == "sweep/ddpg");
  for (int i = 1; i <= 3; ++i) {
    CHECK(grid[i].agent.algo == Algo::MpDdpg);
    CHECK(grid[i].agent.window == i + 1);
    CHECK(grid[i].out_dir == "sweep/mpddpg_L" + std::to_string(i + 1));
  }
  for (int i = 4; i <= 6; ++i) {
    CHECK(grid[i].agent.algo == Algo::MsDdpg);
    CHECK(grid[i].agent.window == i - 2);
    CHECK(grid[i].agent.action_mode == ActionMode::Loaded);
  }
  for (int i = 7; i <= 9; ++i) {
    CHECK(grid[i].agent.algo == Algo::MsDdpg);
    CHECK(grid[i].agent.window == i - 5);
    CHECK(grid[i].agent.action_mode == ActionMode::Generated);
  }
  CHECK(grid[9].out_dir == "sweep/msddpg_L4_generated");

  std::set<std::string> dirs;
  for (const ExperimentConfig& c : grid) {
    dirs.insert(c.out_dir);
    CHECK(c.total_steps == 777);
    CHECK(c.env == base.env);
    CHECK(c.seeds == base.seeds);
  }
  CHECK(dirs.size() == 10);

  base.agent.algo = Algo::Sac;
  grid = sweep_grid(base);
  REQUIRE(grid.size() == 10);
  CHECK(grid[0].agent.algo == Algo::Sac);
  CHECK(grid[1].agent.algo == Algo::MpSac);
  CHECK(grid[9].agent.algo == Algo::MsSac);
  CHECK(grid[9].out_dir == "sweep/mssac_L4_generated");
}

TEST_CASE("experiment run writes csvs and a summary") {
  auto dir = fresh_dir("mstd_harness_run");
  ExperimentConfig c;
  c.env = "pendulum";
  c.agent.algo = Algo::Ddpg;
  c.agent.hidden = 4;
  c.agent.batch_size = 8;
  c.agent.buffer_capacity = 1000;
  c.total_steps = 40;
  c.eval_every = 20;
  c.eval_episodes = 1;
  c.seeds = {1, 2};
  c.out_dir = (dir / "out").string();

  ExperimentResult res = run_experiment(c);
  REQUIRE(res.outcomes.size() == 2);
  for (const SeedOutcome& o : res.outcomes) {
    CHECK_FALSE(o.failed);
    CHECK(std::filesystem::exists(o.eval_csv));
    CHECK(std::filesystem::exists(o.train_csv));
    std::vector<MetricsRow> eval_rows = read_metrics_csv(o.eval_csv);
    REQUIRE(eval_rows.size() == 2);  // one evaluation episode at 20 and 40
    CHECK(eval_rows[0].step == 20);
    CHECK(eval_rows[1].step == 40);
    double mean =
        (eval_rows[0].episode_return + eval_rows[1].episode_return) / 2.0;
    CHECK(o.final_return == doctest::Approx(mean).epsilon(1e-12));
    CHECK_FALSE(read_metrics_csv(o.train_csv).empty());
  }
  CHECK(contains(res.outcomes[0].eval_csv, "ddpg_seed1_eval.csv"));
  CHECK(contains(res.outcomes[1].train_csv, "ddpg_seed2_train.csv"));
  CHECK(res.summary.n == 2);
  CHECK_FALSE(res.summary.single_seed);

  REQUIRE(std::filesystem::exists(res.summary_path));
  nlohmann::json doc = nlohmann::json::parse(read_text(res.summary_path));
  CHECK(doc["env"] == "pendulum");
  CHECK(doc["algo"] == "ddpg");
  CHECK(doc["mode"] == "loaded");
  CHECK(doc["L"] == 1);
  CHECK(doc["steps"] == 40);
  CHECK(doc["final_return"]["n"] == 2);
  CHECK(doc["final_return"]["mean"] == res.summary.mean);
  CHECK(contains(doc["final_return"]["formatted"].get<std::string>(), "±"));
  CHECK(doc["warnings"].empty());
  REQUIRE(doc["per_seed"].size() == 2);
  CHECK(doc["per_seed"][0]["seed"] == 1);
  CHECK(doc["per_seed"][1]["seed"] == 2);
  CHECK(doc["per_seed"][0].contains("final_return"));

  // a rerun reproduces everything except wall-clock timings
  ExperimentConfig c2 = c;
  c2.out_dir = (dir / "out2").string();
  ExperimentResult res2 = run_experiment(c2);
  REQUIRE(res2.outcomes.size() == 2);
  for (std::size_t i = 0; i < res.outcomes.size(); ++i) {
    CHECK(strip_wall(read_text(res.outcomes[i].eval_csv)) ==
          strip_wall(read_text(res2.outcomes[i].eval_csv)));
    CHECK(strip_wall(read_text(res.outcomes[i].train_csv)) ==
          strip_wall(read_text(res2.outcomes[i].train_csv)));
  }
  CHECK(res2.summary.mean == res.summary.mean);
  CHECK(res2.summary.std == res.summary.std);

  std::filesystem::remove_all(dir);
}

TEST_CASE("experiment where every seed fails rethrows the first error") {
  auto dir = fresh_dir("mstd_harness_runfail");
  ExperimentConfig c;
  c.agent.hidden = 4;
  c.agent.batch_size = 8;
  c.total_steps = 10;
  c.eval_every = 50;  // never reached, so no seed produces evaluation rows
  c.eval_episodes = 1;
  c.seeds = {1, 2};
  c.out_dir = (dir / "out").string();

  std::string msg =
      message_of<std::runtime_error>([&] { run_experiment(c); });
  CHECK(contains(msg, "every seed failed"));
  CHECK(contains(msg, "no evaluation episodes"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("learning curve svg") {
  auto dir = fresh_dir("mstd_harness_svg");
  auto mk = [&](const std::string& name,
                std::vector<std::pair<long, double>> pts) {
    std::vector<MetricsRow> rows;
    long ep = 0;
    for (auto [step, ret] : pts) {
      MetricsRow r;
      r.step = step;
      r.episode = ep++;
      r.episode_return = ret;
      r.wall_ms = 1;
      rows.push_back(r);
    }
    std::string p = (dir / name).string();
    write_metrics_csv(p, rows);
    return p;
  };
  std::string out = (dir / "curve.svg").string();

  SUBCASE("two series render with a band") {
    std::string a =
        mk("a.csv", {{0, 0.0}, {10, 1.0}, {10, 3.0}, {20, 2.0}, {30, 4.0}});
    std::string b = mk("b.csv", {{0, -1.0}, {10, 0.0}, {20, 1.0}, {40, 2.0}});
    emit_learning_curve({a, b}, out);
    std::string svg = read_text(out);
    CHECK(testutil::xml_problem(svg).empty());
    CHECK(count_occurrences(svg, "<polyline") == 3);  // two traces plus mean
    CHECK(count_occurrences(svg, "<path ") == 1);     // the std band
    CHECK(count_occurrences(svg, "<line ") == 12);    // axes and ticks
    CHECK(count_occurrences(svg, "<text ") == 12);
    CHECK(contains(svg, ">step</text>"));
    CHECK(contains(svg, ">return</text>"));
  }
  SUBCASE("a single series still renders") {
    std::string a = mk("solo.csv", {{0, 1.0}, {5, 2.0}, {10, 0.5}});
    emit_learning_curve({a}, out);
    std::string svg = read_text(out);
    CHECK(testutil::xml_problem(svg).empty());
    CHECK(count_occurrences(svg, "<polyline") == 2);
    CHECK(count_occurrences(svg, "<path ") == 1);
  }
  SUBCASE("overlap of a single step collapses the band") {
    std::string a = mk("a1.csv", {{0, 1.0}, {10, 2.0}});
    std::string b = mk("b1.csv", {{10, 3.0}, {20, 4.0}});
    emit_learning_curve({a, b}, out);
    std::string svg = read_text(out);
    CHECK(testutil::xml_problem(svg).empty());
    CHECK(count_occurrences(svg, "<polyline") == 3);
    CHECK(count_occurrences(svg, "<path ") == 0);
  }
  SUBCASE("empty input list") {
    CHECK_THROWS_AS(emit_learning_curve({}, out), ContractError);
  }
  SUBCASE("header-only csv") {
    write_text(dir / "empty.csv",
               "step,episode,episode_return,critic_loss,actor_loss,wall_ms\n");
    std::string msg = message_of<ConfigError>(
        [&] { emit_learning_curve({(dir / "empty.csv").string()}, out); });
    CHECK(contains(msg, ":1: no data rows"));
  }
  SUBCASE("malformed csv keeps its line number") {
    write_text(dir / "bad.csv",
               "step,episode,episode_return,critic_loss,actor_loss,wall_ms\n"
               "1,0,oops,0,0,1\n");
    std::string msg = message_of<ConfigError>(
        [&] { emit_learning_curve({(dir / "bad.csv").string()}, out); });
    CHECK(contains(msg, ":2: malformed row"));
  }
  SUBCASE("disjoint step ranges") {
    std::string a = mk("lo.csv", {{0, 1.0}, {10, 2.0}});
    std::string b = mk("hi.csv", {{20, 3.0}, {30, 4.0}});
    std::string msg =
        message_of<ConfigError>([&] { emit_learning_curve({a, b}, out); });
    CHECK(contains(msg, "step ranges do not overlap"));
  }
  SUBCASE("unwritable output path") {
    std::string a = mk("w.csv", {{0, 1.0}, {10, 2.0}});
    std::string msg = message_of<ConfigError>([&] {
      emit_learning_curve({a}, (dir / "missing" / "x.svg").string());
    });
    CHECK(contains(msg, "cannot open"));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiment validation rejects each bad field") {
  ExperimentConfig good;
  CHECK_NOTHROW(validate_experiment(good));

  ExperimentConfig c = good;
  c.env = "mars";
  CHECK_THROWS_AS(validate_experiment(c), ConfigError);
  c = good;
  c.agent.window = 0;
  CHECK_THROWS_AS(validate_experiment(c), ConfigError);
  c = good;
  c.total_steps = 0;
  CHECK_THROWS_AS(validate_experiment(c), ConfigError);
  c = good;
  c.eval_every = 0;
  CHECK_THROWS_AS(validate_experiment(c), ConfigError);
  c = good;
  c.eval_episodes = 0;
  CHECK_THROWS_AS(validate_experiment(c), ConfigError);
  c = good;
  c.seeds = {};
  CHECK_THROWS_AS(validate_experiment(c), ConfigError);
  c = good;
  c.seeds = {3, 3};
  CHECK_THROWS_AS(validate_experiment(c), ConfigError);
  c = good;
  c.out_dir = "";
  CHECK_THROWS_AS(validate_experiment(c), ConfigError);
  c = good;
  c.agent.tau = 0.0;
  CHECK_THROWS_AS(validate_experiment(c), ConfigError);
}

}  // TEST_SUITE
