#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dalc/mdp.hpp"
#include "oracles.hpp"

using namespace dalc;

namespace {

// Per-epoch seconds measured on the reference machine; reused across tests.
const std::vector<double> kEpochTimes{2.214, 3.311, 4.728, 5.547, 6.754};

std::vector<double> times(int n) {
  return {kEpochTimes.begin(), kEpochTimes.begin() + n};
}

}  // namespace

TEST_CASE("state space enumeration") {
  SUBCASE("single state is terminal") {
    MdpModel m(1, 100, 100, times(1));
    auto states = build_state_space(m);
    REQUIRE(states.size() == 1);
    CHECK(states[0] == SearchState{1, 1});
    CHECK(m.is_terminal(states[0]));
    CHECK_FALSE(m.action_available(states[0], ActionKind::IncreaseEpochs));
    CHECK_FALSE(m.action_available(states[0], ActionKind::AddLayer));
  }
  SUBCASE("2x2 grid in h-major order") {
    MdpModel m(2, 200, 100, times(2));
    auto states = build_state_space(m);
    REQUIRE(states.size() == 4);
    CHECK(states[0] == SearchState{1, 1});
    CHECK(states[1] == SearchState{1, 2});
    CHECK(states[2] == SearchState{2, 1});
    CHECK(states[3] == SearchState{2, 2});
    CHECK(m.is_terminal(states[3]));
    CHECK_FALSE(m.is_terminal(states[1]));
  }
  SUBCASE("n * k/e states") {
    MdpModel m(5, 1000, 100, times(5));
    CHECK(build_state_space(m).size() == 50);
  }
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(MdpModel(0, 100, 100, {}), ConfigError);
  CHECK_THROWS_AS(MdpModel(1, 150, 100, times(1)), ConfigError);
  CHECK_THROWS_AS(MdpModel(1, 100, 100, times(1), 0.0), ConfigError);
  CHECK_THROWS_AS(MdpModel(1, 100, 100, times(1), 1.5), ConfigError);
  CHECK_THROWS_AS(MdpModel(2, 200, 100, times(1)), ConfigError);
  CHECK_THROWS_AS(MdpModel(1, 100, 100, {-1.0}), ConfigError);
  CHECK_THROWS_AS(MdpModel(1, 100, 100, times(1), 0.5, 0.5, 0.0), ConfigError);
  CHECK_THROWS_AS(MdpModel(1, 100, 100, times(1), 0.5, 0.5, 1.0, 0.0),
                  ConfigError);
}

TEST_CASE("transition outcomes follow the cost table") {
  MdpModel m(2, 200, 100, times(2));
  const SearchState s11{1, 1};

  SUBCASE("epoch increase retrains at the next epoch count") {
    auto outs = transitions(s11, ActionKind::IncreaseEpochs, m);
    REQUIRE(outs.size() == 2);
    CHECK(outs[0].next == SearchState{1, 2});
    CHECK(outs[0].prob == doctest::Approx(0.5));
    CHECK(outs[0].cost_seconds == doctest::Approx(442.8));
    CHECK(outs[1].next == s11);
    CHECK(outs[1].prob == doctest::Approx(0.5));
    CHECK(outs[1].cost_seconds == doctest::Approx(442.8));
  }
  SUBCASE("layer add retrains at the base epoch count") {
    auto outs = transitions(s11, ActionKind::AddLayer, m);
    REQUIRE(outs.size() == 2);
    CHECK(outs[0].next == SearchState{2, 1});
    CHECK(outs[0].cost_seconds == doctest::Approx(331.1));
    CHECK(outs[1].next == s11);
  }
  SUBCASE("certain success leaves no self-loop mass") {
    MdpModel sure(2, 200, 100, times(2), 1.0, 1.0);
    auto outs = transitions(s11, ActionKind::IncreaseEpochs, sure);
    CHECK(outs[0].prob == doctest::Approx(1.0));
    CHECK(outs[1].prob == doctest::Approx(0.0));
  }
  SUBCASE("unavailable action is a domain error") {
    CHECK_THROWS_AS(transitions(SearchState{1, 2}, ActionKind::IncreaseEpochs, m),
                    DomainError);
    CHECK_THROWS_AS(transitions(SearchState{2, 1}, ActionKind::AddLayer, m),
                    DomainError);
  }
}

TEST_CASE("value iteration on the deterministic 2x2 chain") {
  // alpha = beta = 1 makes every comparison succeed; values follow from
  // backward induction by hand.
  MdpModel m(2, 200, 100, times(2), 1.0, 1.0, 1.0, 1e-9);
  PolicyTable table = value_iteration(m);

  CHECK(table.value_at(SearchState{2, 2}) == 0.0);
  CHECK(table.value_at(SearchState{2, 1}) == doctest::Approx(662.2));
  CHECK(table.value_at(SearchState{1, 2}) == doctest::Approx(993.3));
  CHECK(table.value_at(SearchState{1, 1}) == doctest::Approx(993.3));

  CHECK(suggest_action(table, SearchState{2, 1}) == ActionKind::IncreaseEpochs);
  CHECK(suggest_action(table, SearchState{1, 2}) == ActionKind::AddLayer);
  CHECK(suggest_action(table, SearchState{1, 1}) == ActionKind::AddLayer);
  CHECK_THROWS_AS(suggest_action(table, SearchState{2, 2}), DomainError);
}

TEST_CASE("value iteration trivial single state") {
  MdpModel m(1, 100, 100, times(1));
  PolicyTable table = value_iteration(m);
  REQUIRE(table.value.size() == 1);
  CHECK(table.value[0] == 0.0);
  CHECK_FALSE(table.action[0].has_value());
  CHECK(table.iterations == 1);
}

TEST_CASE("value iteration matches the policy-enumeration oracle") {
  MdpModel m(2, 200, 100, times(2), 0.5, 0.5, 1.0, 1e-9);
  PolicyTable table = value_iteration(m);
  auto oracle = oracles::enumerate_policies(m);
  for (int i = 0; i < m.state_count(); ++i) {
    CHECK(table.value[i] == doctest::Approx(oracle.value[i]).epsilon(1e-9));
    CHECK(table.action[i] == oracle.action[i]);
  }
}

TEST_CASE("deterministic limit equals shortest path exactly") {
  MdpModel m(3, 300, 100, times(3), 1.0, 1.0, 1.0, 1e-9);
  PolicyTable table = value_iteration(m);
  auto dist = oracles::shortest_path_to_terminal(m);
  for (int i = 0; i < m.state_count(); ++i) CHECK(table.value[i] == dist[i]);
}

TEST_CASE("value iteration invariants") {
  MdpModel m(3, 400, 100, times(3), 0.5, 0.25, 1.0, 1e-6);
  PolicyTable table = value_iteration(m);

  SUBCASE("non-terminal values are strictly positive") {
    for (int i = 0; i < m.state_count(); ++i) {
      const SearchState s = m.state_at(i);
      if (m.is_terminal(s))
        CHECK(table.value[i] == 0.0);
      else
        CHECK(table.value[i] > 0.0);
    }
  }

  SUBCASE("fixed-point identity holds for the chosen action") {
    for (int i = 0; i < m.state_count(); ++i) {
      const SearchState s = m.state_at(i);
      if (m.is_terminal(s)) continue;
      const ActionKind a = suggest_action(table, s);
      const double p =
          a == ActionKind::IncreaseEpochs ? m.alpha(s) : m.beta(s);
      const double cost = action_cost(s, a, m);
      const double rhs = cost +
                         p * table.value_at(success_state(s, a)) +
                         (1.0 - p) * table.value[i];
      CHECK(std::abs(table.value[i] - rhs) < m.theta());
    }
  }

  SUBCASE("uniform cost scaling scales values and keeps the policy") {
    const double lambda = 3.7;
    MdpModel scaled = m;
    scaled.scale_epoch_times(lambda);
    PolicyTable scaled_table = value_iteration(scaled);
    for (int i = 0; i < m.state_count(); ++i) {
      CHECK(scaled_table.value[i] ==
            doctest::Approx(lambda * table.value[i]).epsilon(1e-6));
      CHECK(scaled_table.action[i] == table.action[i]);
    }
  }
}

TEST_CASE("value iteration reports non-convergence with the residual") {
  MdpModel m(3, 400, 100, times(3), 0.5, 0.5, 1.0, 1e-9);
  CHECK_THROWS_AS(value_iteration(m, 2), ConvergenceError);
  try {
    value_iteration(m, 2);
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("config file round trip") {
  const std::string dir = "mdp_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream conf(dir + "/model.conf");
    conf << "# search model\n"
            "n = 3\n"
            "k = 300\n"
            "e = 100\n"
            "gamma = 1.0\n"
            "theta = 0.5\n"
            "alpha = 0.4\n"
            "beta = 0.6\n"
            "epoch_time = 2.214, 3.311, 4.728\n"
            "prob_table = probs.csv\n";
    std::ofstream csv(dir + "/probs.csv");
    csv << "h,j,alpha,beta\n"
           "1,1,0.9,0.1\n";
  }
  MdpModel m = load_mdp_config(dir + "/model.conf");
  CHECK(m.max_layers() == 3);
  CHECK(m.max_epochs() == 300);
  CHECK(m.epoch_increment() == 100);
  CHECK(m.theta() == doctest::Approx(0.5));
  CHECK(m.alpha(SearchState{1, 1}) == doctest::Approx(0.9));
  CHECK(m.beta(SearchState{1, 1}) == doctest::Approx(0.1));
  CHECK(m.alpha(SearchState{1, 2}) == doctest::Approx(0.4));
  CHECK(m.beta(SearchState{2, 1}) == doctest::Approx(0.6));
  CHECK(m.epoch_time(3) == doctest::Approx(4.728));

  SUBCASE("unknown keys are rejected") {
    std::ofstream conf(dir + "/bad.conf");
    conf << "n = 1\nk = 100\ne = 100\nepoch_time = 1.0\nbogus = 3\n";
    conf.close();
    CHECK_THROWS_AS(load_mdp_config(dir + "/bad.conf"), ConfigError);
  }
  SUBCASE("missing required keys are rejected") {
    std::ofstream conf(dir + "/missing.conf");
    conf << "n = 1\ne = 100\nepoch_time = 1.0\n";
    conf.close();
    CHECK_THROWS_AS(load_mdp_config(dir + "/missing.conf"), ConfigError);
  }
}
