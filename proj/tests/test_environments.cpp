#include <doctest.h>

#include <cmath>
#include <vector>

#include "mza/env.hpp"
#include "mza/rng.hpp"

using namespace mza;

namespace {

// Independent transcription of the classic cart-pole equations of motion,
// used to freeze golden vectors.
std::vector<double> physics_oracle(std::vector<double> s, int action) {
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, f = 10.0, dt = 0.02;
  const double total = mc + mp;
  const double force = action == 1 ? f : -f;
  const double x = s[0], x_dot = s[1], th = s[2], th_dot = s[3];
  const double tmp = (force + mp * l * th_dot * th_dot * std::sin(th)) / total;
  const double th_acc = (g * std::sin(th) - std::cos(th) * tmp) /
                        (l * (4.0 / 3.0 - mp * std::cos(th) * std::cos(th) / total));
  const double x_acc = tmp - mp * l * th_acc * std::cos(th) / total;
  return {x + dt * x_dot, x_dot + dt * x_acc, th + dt * th_dot,
          th_dot + dt * th_acc};
}

EnvState cart_state(std::vector<double> obs) { return EnvState{std::move(obs), 0, false}; }

}  // namespace

TEST_CASE("cartpole reset is deterministic per seed and within the init range") {
  CartPole env;
  CHECK(env.reset(0) == env.reset(0));
  CHECK_FALSE(env.reset(0) == env.reset(1));
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto s = env.reset(seed);
    REQUIRE(s.observation.size() == 4);
    CHECK_FALSE(s.terminal);
    CHECK(s.step_index == 0);
    for (double v : s.observation) {
      CHECK(v >= -0.05);
      CHECK(v <= 0.05);
    }
  }
}

TEST_CASE("cartpole step matches the physics oracle") {
  CartPole env;
  SUBCASE("zero state, push right") {
    const auto r = env.step(cart_state({0, 0, 0, 0}), Action{1});
    const auto expect = physics_oracle({0, 0, 0, 0}, 1);
    for (int i = 0; i < 4; ++i) {
      CHECK(r.next_state.observation[i] == doctest::Approx(expect[i]).epsilon(1e-15));
    }
    // Frozen golden values from the oracle.
    CHECK(r.next_state.observation[1] == doctest::Approx(0.1951219512195122));
    CHECK(r.next_state.observation[3] == doctest::Approx(-0.2926829268292683));
    CHECK(r.reward == 1.0);
    CHECK_FALSE(r.terminal);
  }
  SUBCASE("random rollouts track the oracle") {
    Rng rng = make_rng(7);
    for (int ep = 0; ep < 20; ++ep) {
      EnvState s = env.reset(static_cast<std::uint64_t>(ep));
      std::vector<double> o = s.observation;
      while (!s.terminal) {
        const int a = uniform_int(rng, 2);
        const auto r = env.step(s, Action{a});
        o = physics_oracle(o, a);
        for (int i = 0; i < 4; ++i) {
          REQUIRE(r.next_state.observation[i] == doctest::Approx(o[i]).epsilon(1e-12));
        }
        CHECK(r.reward == 1.0);
        s = r.next_state;
      }
    }
  }
}

TEST_CASE("cartpole terminates past the angle threshold and at the step cap") {
  CartPole env;
  const double limit = 12.0 * 2.0 * M_PI / 360.0;
  auto r = env.step(cart_state({0, 0, limit - 1e-4, 1.0}), Action{1});
  CHECK(r.terminal);
  CHECK(r.next_state.terminal);
  CHECK_THROWS_AS(env.step(r.next_state, Action{0}), std::invalid_argument);

  r = env.step(cart_state({2.39, 1.0, 0, 0}), Action{1});
  CHECK(r.terminal);

  CartPole short_env(0.997, 3);
  EnvState s = short_env.reset(0);
  for (int k = 0; k < 3; ++k) {
    CHECK_FALSE(s.terminal);
    s = short_env.step(s, Action{k % 2}).next_state;
  }
  CHECK(s.terminal);
  CHECK(s.step_index == 3);
}

TEST_CASE("step is pure and rejects invalid actions") {
  CartPole env;
  const EnvState s = env.reset(3);
  const EnvState copy = s;
  const auto a = env.step(s, Action{0});
  const auto b = env.step(s, Action{0});
  CHECK(s == copy);
  CHECK(a.next_state == b.next_state);
  CHECK(a.reward == b.reward);
  CHECK_THROWS_AS(env.step(s, Action{2}), std::invalid_argument);
  CHECK_THROWS_AS(env.step(s, Action{-1}), std::invalid_argument);
}

TEST_CASE("rollout value") {
  CartPole env;
  const EnvState s = env.reset(0);
  SUBCASE("single step is its reward") {
    const std::vector<Action> one{Action{0}};
    CHECK(rollout_value(env, s, one, 0.997) == 1.0);
  }
  SUBCASE("three surviving steps") {
    const std::vector<Action> three{Action{0}, Action{1}, Action{0}};
    CHECK(rollout_value(env, s, three, 0.997) == doctest::Approx(2.991009).epsilon(1e-12));
  }
  SUBCASE("termination zero-pads") {
    const double limit = 12.0 * 2.0 * M_PI / 360.0;
    const EnvState edge = cart_state({0, 0, limit - 1e-4, 1.0});
    const std::vector<Action> five(5, Action{1});
    CHECK(rollout_value(env, edge, five, 0.997) == 1.0);
  }
  SUBCASE("recursive consistency on random sequences") {
    Rng rng = make_rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Action> seq;
      for (int k = 0; k < 8; ++k) seq.push_back(Action{uniform_int(rng, 2)});
      const auto first = env.step(s, seq[0]);
      if (first.next_state.terminal) continue;
      const double tail = rollout_value(
          env, first.next_state, std::span<const Action>(seq).subspan(1), 0.997);
      CHECK(rollout_value(env, s, seq, 0.997) ==
            doctest::Approx(first.reward + 0.997 * tail).epsilon(1e-12));
    }
  }
}

TEST_CASE("chain MDP rollout values match hand computation") {
  ChainMdp chain;  // length 3, goal 1, exit 0.2, discount 0.9
  const EnvState s0 = chain.reset(0);
  CHECK(chain.position(s0) == 0);
  const std::vector<Action> advance(3, Action{0});
  CHECK(rollout_value(chain, s0, advance, 0.9) == doctest::Approx(0.81));
  const std::vector<Action> exit_now{Action{1}, Action{0}, Action{0}};
  CHECK(rollout_value(chain, s0, exit_now, 0.9) == doctest::Approx(0.2));
  const std::vector<Action> mixed{Action{0}, Action{1}, Action{0}};
  CHECK(rollout_value(chain, s0, mixed, 0.9) == doctest::Approx(0.18));
  CHECK(chain.reset(0) == chain.reset(5));
}

TEST_CASE("environments are selected by name") {
  CHECK(make_environment("cartpole", 0.997, 500)->name() == "cartpole");
  CHECK(make_environment("chain", 0.9, 10)->spec().action_count == 2);
  CHECK_THROWS(make_environment("breakout", 0.997, 500));
}
