#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "mstd/envs.hpp"
#include "mstd/mdp.hpp"
#include "mstd/rng.hpp"
#include "test_util.hpp"

using namespace mstd;

namespace {

FiniteMdp two_state_hop() {
  // 0 -> 1 pays 1 and terminates; 1 is absorbing.
  FiniteMdp mdp = FiniteMdp::zeros(2, 1, 0.5);
  mdp.p(0, 0, 1) = 1.0;
  mdp.r(0, 0, 1) = 1.0;
  mdp.p(1, 0, 1) = 1.0;
  mdp.terminal_states = {1};
  mdp.reward_bound = 1.0;
  return mdp;
}

}  // namespace

TEST_SUITE("mdp") {

TEST_CASE("episode return oracles") {
  CHECK(episode_return({1, 1, 1}, 0.5).value == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(episode_return({}, 0.7).value == 0.0);
  CHECK(episode_return({5}, 0.99).value == 5.0);
  CHECK(episode_return({1, 1}, 1.0).value == 2.0);  // undiscounted scores allowed
  CHECK(episode_return({2, 4}, 0.25).value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(episode_return({1}, 0.0), ContractError);
  CHECK_THROWS_AS(episode_return({1}, 1.5), ContractError);
}

TEST_CASE("validate_mdp catches each invariant") {
  FiniteMdp good = two_state_hop();
  CHECK(validate_mdp(good).empty());

  SUBCASE("row sum off") {
    FiniteMdp bad = good;
    bad.p(0, 0, 1) = 0.9;
    auto v = validate_mdp(bad);
    REQUIRE(!v.empty());
    CHECK(v.front().find("P[0][0]") != std::string::npos);
  }
  SUBCASE("discount out of range") {
    FiniteMdp bad = good;
    bad.discount = 1.0;
    CHECK(!validate_mdp(bad).empty());
    bad.discount = 0.0;
    CHECK(!validate_mdp(bad).empty());
  }
  SUBCASE("negative probability") {
    FiniteMdp bad = good;
    bad.p(0, 0, 0) = -0.1;
    bad.p(0, 0, 1) = 1.1;
    CHECK(!validate_mdp(bad).empty());
  }
  SUBCASE("reward beyond declared bound") {
    FiniteMdp bad = good;
    bad.r(0, 0, 1) = 3.0;  // bound stays 1.0
    CHECK(!validate_mdp(bad).empty());
  }
  SUBCASE("terminal index out of range") {
    FiniteMdp bad = good;
    bad.terminal_states = {7};
    CHECK(!validate_mdp(bad).empty());
  }
  SUBCASE("bad tensor size") {
    FiniteMdp bad = good;
    bad.trans_prob.pop_back();
    CHECK(!validate_mdp(bad).empty());
  }
}

TEST_CASE("finite env resets to the fixed start and replays transitions") {
  FiniteMdpEnv env(two_state_hop());
  StateVec s = env.reset(7);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == 0.0);
  CHECK(env.reset(7) == s);

  Transition t = env.step({0.0});
  CHECK(t.state == StateVec{0.0});
  CHECK(t.reward == 1.0);
  CHECK(t.next_state == StateVec{1.0});
  CHECK(t.terminated);
}

TEST_CASE("finite env rejects bad usage") {
  FiniteMdpEnv env(two_state_hop());
  CHECK_THROWS_AS(env.step({0.0}), ContractError);  // before reset
  env.reset(1);
  CHECK_THROWS_AS(env.step({0.5}), ContractError);       // non-integral
  CHECK_THROWS_AS(env.step({3.0}), ContractError);       // out of range
  CHECK_THROWS_AS(env.step({0.0, 1.0}), ContractError);  // wrong arity
  FiniteMdp bad = two_state_hop();
  bad.p(0, 0, 1) = 0.8;
  CHECK_THROWS_AS(FiniteMdpEnv{bad}, ContractError);
}

TEST_CASE("env trajectories are deterministic and reward-bounded") {
  ChainSpec spec;
  spec.slip_prob = 0.2;
  FiniteMdp chain = make_chain(spec);
  FiniteMdpEnv a(chain), b(chain);
  std::mt19937_64 gen(11);
  for (int episode = 0; episode < 5; ++episode) {
    std::uint64_t seed = gen();
    StateVec sa = a.reset(seed);
    StateVec sb = b.reset(seed);
    CHECK(sa == sb);
    for (int k = 0; k < 40; ++k) {
      ActionVec act = {static_cast<double>(uniform_index(gen, 2))};
      Transition ta = a.step(act);
      Transition tb = b.step(act);
      CHECK(ta.next_state == tb.next_state);
      CHECK(ta.reward == tb.reward);
      CHECK(ta.terminated == tb.terminated);
      CHECK(std::fabs(ta.reward) <= a.reward_bound());
      if (ta.terminated) {
        seed = gen();
        CHECK(a.reset(seed) == b.reset(seed));
      }
    }
  }
}

TEST_CASE("mdp text format round trips") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    FiniteMdp mdp = testutil::random_mdp(gen);
    std::ostringstream out;
    write_mdp(mdp, out);
    std::istringstream in(out.str());
    FiniteMdp back = parse_mdp(in, "roundtrip");
    CHECK(back.num_states == mdp.num_states);
    CHECK(back.num_actions == mdp.num_actions);
    CHECK(back.discount == mdp.discount);
    CHECK(back.terminal_states == mdp.terminal_states);
    REQUIRE(back.trans_prob.size() == mdp.trans_prob.size());
    for (std::size_t i = 0; i < mdp.trans_prob.size(); ++i) {
      CHECK(back.trans_prob[i] == mdp.trans_prob[i]);
      CHECK(back.reward[i] == mdp.reward[i]);
    }
  }
}

TEST_CASE("mdp parser rejects malformed input") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_mdp(in, "test");
  };
  CHECK_THROWS_AS(parse("garbage"), ConfigError);
  CHECK_THROWS_AS(parse("states 2 actions 1 gamma 1.5\n0 0 1 1.0 0.0\n"),
                  ConfigError);
  // probabilities not summing to one
  CHECK_THROWS_AS(parse("states 2 actions 1 gamma 0.5\n"
                        "0 0 1 0.5 1.0\n1 0 1 1.0 0.0\n"),
                  ConfigError);
  // state index out of range
  CHECK_THROWS_AS(parse("states 2 actions 1 gamma 0.5\n"
                        "0 0 5 1.0 1.0\n1 0 1 1.0 0.0\n"),
                  ConfigError);
  CHECK_THROWS_AS(load_mdp("/nonexistent/mdp.txt"), ConfigError);
}

TEST_CASE("mdp file save and load") {
  std::string path =
      (std::filesystem::temp_directory_path() / "mstd_roundtrip.mdp").string();
  FiniteMdp mdp = two_state_hop();
  save_mdp(mdp, path);
  FiniteMdp back = load_mdp(path);
  CHECK(back.p(0, 0, 1) == 1.0);
  CHECK(back.r(0, 0, 1) == 1.0);
  CHECK(back.terminal_states == std::vector<int>{1});
  std::remove(path.c_str());
}

}  // TEST_SUITE
