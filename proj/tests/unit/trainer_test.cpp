#include <gtest/gtest.h>

#include <cmath>

#include "foresit/error.hpp"
#include "foresit/gridhome/oracle.hpp"
#include "foresit/trainer/config.hpp"
#include "foresit/trainer/losses.hpp"
#include "foresit/trainer/returns.hpp"
#include "foresit/trainer/success_tracker.hpp"
#include "foresit/trainer/training.hpp"
#include "foresit/trainer/worker.hpp"
#include "../support/fixtures.hpp"
#include "../support/gradcheck.hpp"

using namespace foresit;
using namespace foresit::trainer;

namespace {

TrainConfig tiny_config(Mode mode, std::uint64_t episodes) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.hidden = 8;
  cfg.value_hidden = 4;
  cfg.episodes = episodes;
  cfg.lr = 1e-3;
  cfg.imagination_lr = 1e-3;
  cfg.imagination_epochs = 2;
  cfg.env.max_steps = 20;
  return cfg;
}

RolloutSpec spec_for(const TrainConfig& cfg) {
  RolloutSpec spec;
  spec.mode = cfg.mode;
  spec.agent = agent_dims_for(cfg);
  spec.imagination = imagination_dims_for(cfg);
  spec.env = cfg.env;
  spec.int_interval = cfg.int_interval;
  return spec;
}

// Actions replayed by step index; Stop once the script runs out.
ActionOverride scripted(std::vector<int> actions) {
  return [actions = std::move(actions)](const grid::Episode& ep, std::span<const double>) {
    const auto t = static_cast<std::size_t>(ep.steps());
    return t < actions.size() ? actions[t] : static_cast<int>(grid::Action::Stop);
  };
}

ActionOverride oracle_policy() {
  return [](const grid::Episode& ep, std::span<const double>) {
    return static_cast<int>(grid::optimal_action(ep.layout(), ep.pose(), ep.target(), ep.config()));
  };
}

struct Fixed {
  TrainConfig cfg;
  RolloutSpec spec;
  nd::ParamSet theta;
  nd::ParamSet w;
  grid::RoomLayout layout;
};

Fixed fixed_setup(Mode mode) {
  Fixed f{tiny_config(mode, 1), {}, {}, {}, testkit::fixture(0)};
  f.spec = spec_for(f.cfg);
  f.theta = agent::init_agent_params(f.spec.agent, 3);
  f.w = imagination::init_imagination_params(f.spec.imagination, 4);
  return f;
}

Rollout rollout(const Fixed& f, const nd::ParamSet& theta, const ActionOverride& script, std::uint64_t seed = 5) {
  Rng rng(6);
  return run_rollout(f.spec, theta, f.w, f.layout, seed, 2, rng, script);
}

}  // namespace

TEST(Returns, DiscountedSums) {
  const std::vector<double> r = {-0.01, -0.01, 5.0};
  const auto out = compute_returns(r, 0.5);
  EXPECT_DOUBLE_EQ(out[2], 5.0);
  EXPECT_DOUBLE_EQ(out[1], -0.01 + 0.5 * 5.0);
  EXPECT_DOUBLE_EQ(out[0], -0.01 + 0.5 * out[1]);
  EXPECT_EQ(compute_returns(std::vector<double>{1.0}, 0.9, 2.0)[0], 1.0 + 0.9 * 2.0);
  EXPECT_THROW(compute_returns(r, 0.0), std::invalid_argument);
  EXPECT_THROW(compute_returns(r, 1.5), std::invalid_argument);
}

TEST(Returns, MatchesPowerSumOracle) {
  Rng rng(1);
  std::normal_distribution<double> d;
  std::vector<double> r(40);
  for (double& x : r) x = d(rng);
  const double gamma = 0.99;
  const auto out = compute_returns(r, gamma);
  for (std::size_t t = 0; t < r.size(); ++t) {
    double sum = 0.0;
    for (std::size_t k = t; k < r.size(); ++k) sum += std::pow(gamma, static_cast<double>(k - t)) * r[k];
    EXPECT_NEAR(out[t], sum, 1e-12);
  }
}

TEST(Returns, TdAdvantages) {
  const std::vector<double> r = {1.0, 2.0}, v = {0.5, 0.25};
  const auto a = td_advantages(r, v, 0.9, 1.0);
  EXPECT_DOUBLE_EQ(a[0], 1.0 + 0.9 * 0.25 - 0.5);
  EXPECT_DOUBLE_EQ(a[1], 2.0 + 0.9 * 1.0 - 0.25);
  EXPECT_THROW(td_advantages(r, std::vector<double>{1.0}, 0.9), std::invalid_argument);
}

TEST(SuccessTracker, ExactMovingAverage) {
  SuccessTracker tr(4);
  EXPECT_EQ(tr.rate(), 0.0);
  const bool seq[] = {true, false, true, true, false, false};
  std::vector<bool> seen;
  for (bool s : seq) {
    tr.record(s);
    seen.push_back(s);
    const std::size_t from = seen.size() > 4 ? seen.size() - 4 : 0;
    double hits = 0;
    for (std::size_t i = from; i < seen.size(); ++i) hits += seen[i];
    EXPECT_DOUBLE_EQ(tr.rate(), hits / static_cast<double>(seen.size() - from));
  }
  EXPECT_EQ(tr.total(), 6u);
  EXPECT_THROW(SuccessTracker(0), std::invalid_argument);
}

TEST(Losses, UniformPolicyEntropyIsLogFour) {
  auto f = fixed_setup(Mode::Foresit);
  for (const char* s : {agent::slots::kPolicyW, agent::slots::kPolicyB}) {
    for (double& v : f.theta.at(s).values()) v = 0.0;
  }
  auto r = rollout(f, f.theta, scripted({0, 1, 2}));
  for (nd::Var h : r.log.entropies) EXPECT_NEAR(r.tape->scalar(h), std::log(4.0), 1e-12);
}

TEST(Losses, ValueLossZeroWhenValuesMatchReturns) {
  auto f = fixed_setup(Mode::Foresit);
  auto r = rollout(f, f.theta, scripted({0, 2, 1}));
  std::vector<double> v;
  for (nd::Var x : r.log.values) v.push_back(r.tape->scalar(x));
  EXPECT_EQ(r.tape->scalar(value_loss(*r.tape, r.log, v)), 0.0);
  const auto ret = compute_returns(r.log.rewards, 0.99);
  double expected = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) expected += 0.5 * (v[t] - ret[t]) * (v[t] - ret[t]);
  EXPECT_NEAR(r.tape->scalar(value_loss(*r.tape, r.log, ret)), expected, 1e-12);
}

TEST(Losses, ZeroAdvantageLeavesEntropyTerm) {
  auto f = fixed_setup(Mode::Foresit);
  auto r = rollout(f, f.theta, scripted({2, 2, 0}));
  const std::vector<double> zero(r.log.length(), 0.0);
  double h = 0.0;
  for (nd::Var e : r.log.entropies) h += r.tape->scalar(e);
  EXPECT_NEAR(r.tape->scalar(policy_loss(*r.tape, r.log, zero, 0.01)), -0.01 * h, 1e-12);
  EXPECT_THROW(policy_loss(*r.tape, r.log, std::vector<double>(1), 0.01), std::invalid_argument);
}

TEST(Losses, PolicyLossMatchesHandSum) {
  auto f = fixed_setup(Mode::Foresit);
  auto r = rollout(f, f.theta, scripted({1, 2}));
  const auto adv = logged_advantages(*r.tape, r.log, 0.99);
  double expected = 0.0;
  for (std::size_t t = 0; t < adv.size(); ++t) {
    expected += -r.tape->scalar(r.log.log_probs[t]) * adv[t] - 0.01 * r.tape->scalar(r.log.entropies[t]);
  }
  EXPECT_NEAR(r.tape->scalar(policy_loss(*r.tape, r.log, adv, 0.01)), expected, 1e-12);
}

TEST(Losses, ActorCriticGradientsMatchFiniteDifferences) {
  // The foresit imagination is read off s0 outside the tape, so differencing
  // through it would see a path backprop deliberately ignores. RND draws its I
  // independently of theta and otherwise builds the identical graph.
  auto f = fixed_setup(Mode::Rnd);
  const auto script = scripted({0, 2, 2, 1, 2, 0});
  auto base = rollout(f, f.theta, script);
  const auto adv = logged_advantages(*base.tape, base.log, 0.99);
  const auto ret = compute_returns(base.log.rewards, 0.99);
  auto loss_of = [&](Rollout& r) {
    return r.tape->add(policy_loss(*r.tape, r.log, adv, 0.01), value_loss(*r.tape, r.log, ret));
  };
  const auto grads = base.tape->backward(loss_of(base));
  const auto res = testkit::check_gradients(
      f.theta, grads,
      [&](const nd::ParamSet& q) {
        auto r = rollout(f, q, script);
        return r.tape->scalar(loss_of(r));
      },
      [](const std::string&) { return true; }, 100, 7);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
}

TEST(Losses, PolicyTermSendsNoGradientToCritic) {
  auto f = fixed_setup(Mode::Foresit);
  auto r = rollout(f, f.theta, scripted({0, 2}));
  const auto terms = actor_critic_losses(*r.tape, r.log, compute_returns(r.log.rewards, 0.99), 0.99, 0.01);
  const auto g = r.tape->backward(terms.policy);
  for (std::size_t s = 0; s < f.theta.size(); ++s) {
    if (!agent::is_critic_slot(f.theta.name(s))) continue;
    for (double v : g[s]) EXPECT_EQ(v, 0.0) << f.theta.name(s);
  }
}

TEST(Rollout, LogShapesAndAttentionTarget) {
  auto f = fixed_setup(Mode::Att);
  auto r = rollout(f, f.theta, scripted({0, 0, 2, 1}));
  r.log.validate();
  EXPECT_EQ(r.log.length(), 5u);
  for (std::size_t t = 0; t < r.log.alphas.size(); ++t) EXPECT_EQ(r.log.alphas[t].size(), t + 1);
  if (!r.success) {
    EXPECT_THROW(att_target(r.log), std::logic_error);
  }

  nd::Tape tape(r.theta.get());
  agent::AgentNet net(tape, f.spec.agent);
  std::vector<nd::Var> states;
  for (const auto& s : r.log.states) states.push_back(tape.constant(s));
  const auto full = net.attend(states);
  const auto v = tape.value(full.attended);
  EXPECT_EQ(std::vector<double>(v.begin(), v.end()), r.log.attended.back());
}

TEST(Rollout, AttentionTargetOfSuccessfulEpisode) {
  auto f = fixed_setup(Mode::Att);
  auto r = rollout(f, f.theta, oracle_policy());
  ASSERT_TRUE(r.success);
  EXPECT_EQ(att_target(r.log), r.log.attended.back());
}

TEST(Rollout, ReimaginationSchedule) {
  EXPECT_TRUE(reimagine_at(0, 5));
  EXPECT_TRUE(reimagine_at(10, 5));
  EXPECT_FALSE(reimagine_at(4, 5));
  EXPECT_THROW(reimagine_at(0, 0), std::invalid_argument);

  auto f = fixed_setup(Mode::Int);
  const std::vector<int> spin(12, 0);  // 12 rotations then Stop: steps t = 0..12
  f.spec.int_interval = 1;
  EXPECT_EQ(rollout(f, f.theta, scripted(spin)).imaginations.size(), 13u);
  f.spec.int_interval = 5;
  EXPECT_EQ(rollout(f, f.theta, scripted(spin)).imaginations.size(), 3u);
  f.spec.mode = Mode::Foresit;
  EXPECT_EQ(rollout(f, f.theta, scripted(spin)).imaginations.size(), 1u);
}

TEST(Rollout, BaselineImaginationIsZeroAndCriticSkipsAttention) {
  auto f = fixed_setup(Mode::Baseline);
  auto r = rollout(f, f.theta, scripted({2}));
  for (double v : r.imagination) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(r.log.alphas.empty());
  EXPECT_EQ(r.log.values.size(), r.log.length());
}

TEST(Rollout, SamplingFollowsProbabilities) {
  Rng rng(9);
  const std::vector<double> p = {0.1, 0.2, 0.3, 0.4};
  std::array<int, 4> counts{};
  for (int i = 0; i < 40000; ++i) ++counts[static_cast<std::size_t>(sample_action(p, rng))];
  for (std::size_t a = 0; a < 4; ++a) EXPECT_NEAR(counts[a] / 40000.0, p[a], 0.01);
}

TEST(Trainer, BaselineNeverTouchesImagination) {
  auto cfg = tiny_config(Mode::Baseline, 40);
  Trainer tr(cfg, {testkit::fixture(0), testkit::fixture(1)});
  const auto v0 = tr.imagination_store().version();
  const auto summary = tr.run();
  EXPECT_EQ(summary.episodes, 40u);
  EXPECT_EQ(tr.imagination_store().version(), v0);
  EXPECT_EQ(summary.workers[0].flushes, 0u);
}

TEST(Trainer, SingleWorkerRunsAreDeterministic) {
  auto run = [] {
    Trainer tr(tiny_config(Mode::Foresit, 200), testkit::all_fixtures());
    std::string out;
    TrainHooks hooks;
    hooks.metrics = [&](const nlohmann::ordered_json& j) { out += j.dump() + "\n"; };
    tr.run(hooks);
    return out;
  };
  const auto a = run();
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, run());
}

TEST(Trainer, ScriptedOracleFlushesEveryBufferOfSuccesses) {
  auto cfg = tiny_config(Mode::Foresit, 100);
  Trainer tr(cfg, {testkit::fixture(0)});
  const auto v0 = tr.imagination_store().version();
  std::vector<std::uint64_t> flush_episodes;
  std::vector<std::uint64_t> versions;
  std::uint64_t successes = 0;
  TrainHooks hooks;
  hooks.action_override = oracle_policy();
  std::vector<std::size_t> occupancy;
  hooks.metrics = [&](const nlohmann::ordered_json& j) {
    if (j.contains("event")) return;
    successes += j["success"].get<bool>() ? 1 : 0;
    occupancy.push_back(j["buffer"].get<std::size_t>());
  };
  hooks.on_flush = [&](const FlushEvent& e, std::size_t flushed) {
    EXPECT_EQ(flushed, 32u);
    EXPECT_EQ(successes % 32, 0u);
    flush_episodes.push_back(e.episode);
    versions.push_back(tr.imagination_store().version());
  };
  const auto summary = tr.run(hooks);
  EXPECT_EQ(successes, 100u);
  ASSERT_EQ(flush_episodes.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(versions[i], v0 + i + 1);
  EXPECT_EQ(tr.imagination_store().version(), v0 + 3);
  EXPECT_EQ(summary.workers[0].flushes, 3u);
  for (std::size_t i = 0; i < occupancy.size(); ++i) EXPECT_EQ(occupancy[i], (i + 1) % 32);
}

TEST(Trainer, UpdateCountEqualsSumOverWorkers) {
  auto cfg = tiny_config(Mode::Foresit, 60);
  cfg.workers = 3;
  Trainer tr(cfg, testkit::all_fixtures());
  const auto v0 = tr.agent_store().version();
  const auto summary = tr.run();
  std::uint64_t updates = 0, episodes = 0;
  for (const auto& w : summary.workers) {
    updates += w.updates_applied;
    episodes += w.episodes;
  }
  EXPECT_EQ(episodes, 60u);
  EXPECT_EQ(tr.agent_store().version(), v0 + updates);
}

TEST(Trainer, StopFlagEndsRunEarly) {
  std::atomic<bool> stop{false};
  Trainer tr(tiny_config(Mode::Rnd, 1000), {testkit::fixture(2)});
  TrainHooks hooks;
  std::uint64_t seen = 0;
  hooks.metrics = [&](const nlohmann::ordered_json&) {
    if (++seen == 10) stop = true;
  };
  hooks.stop = &stop;
  const auto summary = tr.run(hooks);
  EXPECT_TRUE(summary.interrupted);
  EXPECT_EQ(summary.episodes, 10u);
}

TEST(Config, EntriesRoundTrip) {
  TrainConfig cfg;
  cfg.mode = Mode::Int;
  cfg.lr = 3.3e-4;
  cfg.gamma = 0.95;
  cfg.split_on_agent_path = true;
  TrainConfig back;
  for (const auto& e : config_entries(cfg)) set_config_value(back, e.section, e.key, e.value);
  EXPECT_TRUE(back == cfg);
  EXPECT_EQ(back.lr, 3.3e-4);
}

TEST(Config, ValidationNamesField) {
  TrainConfig cfg;
  cfg.gamma = 1.5;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "train.gamma");
  }
  EXPECT_THROW(set_config_value(cfg, "train", "nope", "1"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "train", "episodes", "ten"), ConfigError);
  EXPECT_THROW(parse_mode("ours"), ConfigError);
}
