#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "foresit/agent/agent_net.hpp"
#include "foresit/agent/trajectory.hpp"
#include "foresit/error.hpp"
#include "../support/gradcheck.hpp"

using namespace foresit;
using namespace foresit::agent;

namespace {

AgentDims small_dims() {
  AgentDims d;
  d.obs = 6;
  d.goal = 3;
  d.actions = 4;
  d.hidden = 5;
  d.value_hidden = 4;
  return d;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

nd::ParamSet zeroed(nd::ParamSet p, bool (*which)(std::string_view)) {
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (which(p.name(s))) {
      for (double& v : p[s].values()) v = 0.0;
    }
  }
  return p;
}

bool any_slot(std::string_view) { return true; }
bool query_key_slot(std::string_view n) { return n.starts_with("attention.q") || n.starts_with("attention.k"); }
bool policy_slot(std::string_view n) { return n.starts_with("policy."); }
bool value_slot(std::string_view n) { return n.starts_with("value."); }

std::vector<double> matvec_plus(const nd::Tensor& w, const nd::Tensor& b, const std::vector<double>& x) {
  const std::size_t rows = w.shape()[0], cols = w.shape()[1];
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = b[r];
    for (std::size_t c = 0; c < cols; ++c) y[r] += w[r * cols + c] * x[c];
  }
  return y;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(Encoder, ZeroParametersGiveZeroState) {
  const auto dims = small_dims();
  const auto p = zeroed(init_agent_params(dims, 1), any_slot);
  nd::Tape tape(&p);
  AgentNet net(tape, dims);
  std::mt19937_64 rng(2);
  const auto s = net.encode_step(random_vec(6, rng), random_vec(3, rng), 2, net.zero_state());
  for (double v : tape.value(s.h)) EXPECT_EQ(v, 0.0);
}

TEST(Encoder, MatchesScalarLstmOnConcatenatedInput) {
  const auto dims = small_dims();
  const auto p = init_agent_params(dims, 3);
  nd::Tape tape(&p);
  AgentNet net(tape, dims);
  std::mt19937_64 rng(4);
  const auto obs = random_vec(6, rng), goal = random_vec(3, rng);
  AgentState prev{random_vec(5, rng, 0.3), random_vec(5, rng, 0.3)};
  const auto s = net.encode_step(obs, goal, 1, net.constant_state(prev));

  std::vector<double> x = obs;
  x.insert(x.end(), goal.begin(), goal.end());
  x.insert(x.end(), {0.0, 1.0, 0.0, 0.0});
  const auto& wih = p.at(slots::kEncoderWih);
  const auto& whh = p.at(slots::kEncoderWhh);
  const auto& b = p.at(slots::kEncoderB);
  const std::size_t h = 5;
  for (std::size_t j = 0; j < h; ++j) {
    auto gate = [&](std::size_t block) {
      const std::size_t r = block * h + j;
      double z = b[r];
      for (std::size_t k = 0; k < x.size(); ++k) z += wih[r * x.size() + k] * x[k];
      for (std::size_t k = 0; k < h; ++k) z += whh[r * h + k] * prev.h[k];
      return z;
    };
    const double c = sigmoid(gate(1)) * prev.c[j] + sigmoid(gate(0)) * std::tanh(gate(2));
    EXPECT_NEAR(tape.value(s.c)[j], c, 1e-12);
    EXPECT_NEAR(tape.value(s.h)[j], sigmoid(gate(3)) * std::tanh(c), 1e-12);
    EXPECT_LT(std::abs(tape.value(s.h)[j]), 1.0);
  }
}

TEST(Encoder, IsPureAndRejectsBadShapes) {
  const auto dims = small_dims();
  const auto p = init_agent_params(dims, 5);
  nd::Tape tape(&p);
  AgentNet net(tape, dims);
  const std::vector<double> obs(6, 0.5), goal = {1, 0, 0};
  const auto a = net.encode_step(obs, goal, -1, net.zero_state());
  const auto b = net.encode_step(obs, goal, -1, net.zero_state());
  EXPECT_TRUE(std::equal(tape.value(a.h).begin(), tape.value(a.h).end(), tape.value(b.h).begin()));
  EXPECT_THROW(net.encode_step(std::vector<double>(7, 0.0), goal, -1, net.zero_state()), ShapeError);
  EXPECT_THROW(net.encode_step(obs, goal, 4, net.zero_state()), ShapeError);
}

TEST(Attention, SingleStateGivesUnitWeightAndResidual) {
  const auto dims = small_dims();
  const auto p = init_agent_params(dims, 6);
  nd::Tape tape(&p);
  AgentNet net(tape, dims);
  std::mt19937_64 rng(7);
  const auto s0 = random_vec(5, rng);
  const nd::Var states[] = {tape.constant(s0)};
  const auto r = net.attend(states);
  ASSERT_EQ(tape.size(r.alpha), 1u);
  EXPECT_EQ(tape.value(r.alpha)[0], 1.0);
  const auto v = matvec_plus(p.at(slots::kValueMapW), p.at(slots::kValueMapB), s0);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(tape.value(r.attended)[j], v[j] + s0[j], 1e-12);
}

TEST(Attention, ZeroQueryKeyMapsGiveUniformWeights) {
  const auto dims = small_dims();
  const auto p = zeroed(init_agent_params(dims, 8), query_key_slot);
  nd::Tape tape(&p);
  AgentNet net(tape, dims);
  std::mt19937_64 rng(9);
  std::vector<nd::Var> states;
  for (int t = 0; t < 4; ++t) states.push_back(tape.constant(random_vec(5, rng)));
  const auto r = net.attend(states);
  for (double a : tape.value(r.alpha)) EXPECT_NEAR(a, 0.25, 1e-15);
}

TEST(Attention, MatchesNaiveLoopOracle) {
  const auto dims = small_dims();
  const auto p = init_agent_params(dims, 10);
  nd::Tape tape(&p);
  AgentNet net(tape, dims);
  std::mt19937_64 rng(11);
  std::vector<std::vector<double>> raw;
  std::vector<nd::Var> states;
  for (int t = 0; t < 6; ++t) {
    raw.push_back(random_vec(5, rng));
    states.push_back(tape.constant(raw.back()));
  }
  const auto r = net.attend(states);
  const auto q = matvec_plus(p.at(slots::kQueryW), p.at(slots::kQueryB), raw.back());
  std::vector<double> logits;
  for (const auto& s : raw) {
    const auto k = matvec_plus(p.at(slots::kKeyW), p.at(slots::kKeyB), s);
    double dot = 0.0;
    for (std::size_t j = 0; j < 5; ++j) dot += q[j] * k[j];
    logits.push_back(dot / std::sqrt(6.0));
  }
  double z = 0.0;
  const double m = *std::max_element(logits.begin(), logits.end());
  for (double l : logits) z += std::exp(l - m);
  std::vector<double> weighted(5, 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < raw.size(); ++t) {
    const double a = std::exp(logits[t] - m) / z;
    EXPECT_NEAR(tape.value(r.alpha)[t], a, 1e-12);
    total += tape.value(r.alpha)[t];
    const auto v = matvec_plus(p.at(slots::kValueMapW), p.at(slots::kValueMapB), raw[t]);
    for (std::size_t j = 0; j < 5; ++j) weighted[j] += a * v[j];
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(tape.value(r.attended)[j] - raw.back()[j], weighted[j], 1e-9);
}

TEST(Attention, IncrementalMemoryMatchesFullRecomputeBitForBit) {
  const auto dims = small_dims();
  const auto p = init_agent_params(dims, 12);
  nd::Tape tape(&p);
  AgentNet net(tape, dims);
  AttentionMemory memory(net);
  std::mt19937_64 rng(13);
  std::vector<nd::Var> states;
  for (int t = 0; t < 5; ++t) {
    states.push_back(tape.constant(random_vec(5, rng)));
    memory.push(states.back());
    const auto inc = memory.attend_latest();
    const auto full = net.attend(states);
    const auto a = tape.value(inc.attended), b = tape.value(full.attended);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
  EXPECT_THROW(net.attend(std::span<const nd::Var>{}), std::invalid_argument);
}

TEST(Attention, ValueLossGradientMatchesFiniteDifferences) {
  const auto dims = small_dims();
  const auto p = init_agent_params(dims, 14);
  std::mt19937_64 rng(15);
  std::vector<std::vector<double>> raw;
  for (int t = 0; t < 4; ++t) raw.push_back(random_vec(5, rng, 0.5));
  const double target = 0.7;
  auto build = [&](nd::Tape& tape) {
    AgentNet net(tape, dims);
    std::vector<nd::Var> states;
    for (const auto& s : raw) states.push_back(tape.constant(s));
    const auto v = net.value_forward(net.attend(states).attended);
    const auto err = tape.sub(v, tape.constant(std::vector<double>{target}));
    return tape.scale(tape.mul(err, err), 0.5);
  };
  nd::Tape tape(&p);
  const auto grads = tape.backward(build(tape));
  const auto r = testkit::check_gradients(
      p, grads, [&](const nd::ParamSet& q) { nd::Tape t(&q); return t.scalar(build(t)); },
      [](const std::string& n) { return n.starts_with("attention."); }, 100, 16);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Policy, ZeroWeightsGiveUniformDistribution) {
  const auto dims = small_dims();
  const auto p = zeroed(init_agent_params(dims, 17), policy_slot);
  nd::Tape tape(&p);
  AgentNet net(tape, dims);
  std::mt19937_64 rng(18);
  const auto out = net.policy_forward(tape.constant(random_vec(5, rng)), tape.constant(random_vec(3, rng)),
                                      tape.constant(random_vec(5, rng)));
  for (double v : tape.value(out.probs)) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Policy, DistributionSumsToOne) {
  const auto dims = small_dims();
  const auto p = init_agent_params(dims, 19);
  std::mt19937_64 rng(20);
  for (int i = 0; i < 1000; ++i) {
    nd::Tape tape(&p);
    AgentNet net(tape, dims);
    const auto out = net.policy_forward(tape.constant(random_vec(5, rng, 3.0)), tape.constant(random_vec(3, rng)),
                                        tape.constant(random_vec(5, rng, 3.0)));
    double total = 0.0;
    for (double v : tape.value(out.probs)) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    ASSERT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Policy, LogitsRespondToImagination) {
  const auto dims = small_dims();
  const auto p = init_agent_params(dims, 21);
  std::mt19937_64 rng(22);
  const auto s = random_vec(5, rng), g = random_vec(3, rng), imagined = random_vec(5, rng);
  auto logprob = [&](const std::vector<double>& i) {
    nd::Tape tape(&p);
    AgentNet net(tape, dims);
    return tape.value(net.policy_forward(tape.constant(s), tape.constant(g), tape.constant(i)).log_probs)[0];
  };
  const double h = 1e-5;
  double sensitivity = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    auto up = imagined, down = imagined;
    up[j] += h;
    down[j] -= h;
    sensitivity += std::abs((logprob(up) - logprob(down)) / (2 * h));
  }
  EXPECT_GT(sensitivity, 1e-6);
}

TEST(Policy, RejectsMismatchedImagination) {
  const auto dims = small_dims();
  const auto p = init_agent_params(dims, 23);
  nd::Tape tape(&p);
  AgentNet net(tape, dims);
  EXPECT_THROW(net.policy_forward(tape.constant(std::vector<double>(5)), tape.constant(std::vector<double>(3)),
                                  tape.constant(std::vector<double>(4))),
               ShapeError);
}

TEST(Value, ZeroParamsGiveZeroAndSameInputSameValue) {
  const auto dims = small_dims();
  const auto pz = zeroed(init_agent_params(dims, 24), value_slot);
  const auto p = init_agent_params(dims, 24);
  const std::vector<double> s = {0.1, -0.2, 0.3, 0.0, 0.5};
  nd::Tape tz(&pz);
  EXPECT_EQ(tz.scalar(AgentNet(tz, dims).value_forward(tz.constant(s))), 0.0);
  nd::Tape t(&p);
  AgentNet net(t, dims);
  EXPECT_EQ(t.scalar(net.value_forward(t.constant(s))), t.scalar(net.value_forward(t.constant(s))));
}

TEST(Params, CriticSlotsAreAttentionAndValue) {
  const auto p = init_agent_params(small_dims(), 25);
  std::size_t critic = 0;
  for (std::size_t s = 0; s < p.size(); ++s) critic += is_critic_slot(p.name(s)) ? 1 : 0;
  EXPECT_EQ(critic, 10u);
  EXPECT_FALSE(is_critic_slot("policy.w"));
  EXPECT_FALSE(is_critic_slot("encoder.w_ih"));
}

namespace {

TrajectoryLog log_with_final_alpha(std::vector<double> alpha) {
  TrajectoryLog log;
  log.success = true;
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    log.states.push_back({static_cast<double>(t), -static_cast<double>(t)});
    log.alphas.push_back(std::vector<double>(t + 1, 1.0 / static_cast<double>(t + 1)));
  }
  log.alphas.back() = std::move(alpha);
  return log;
}

}  // namespace

TEST(Subgoal, ArgmaxOfFinalAttention) {
  const auto sub = select_subgoal(log_with_final_alpha({0.1, 0.7, 0.2}));
  EXPECT_EQ(sub.t_star, 1u);
  EXPECT_EQ(sub.state, (std::vector<double>{1.0, -1.0}));
}

TEST(Subgoal, TiesPreferEarliestIndex) {
  EXPECT_EQ(select_subgoal(log_with_final_alpha({0.25, 0.25, 0.25, 0.25})).t_star, 0u);
}

TEST(Subgoal, SingleStepSuccessSelectsInitialState) {
  const auto log = log_with_final_alpha({1.0});
  const auto sub = select_subgoal(log);
  EXPECT_EQ(sub.t_star, 0u);
  EXPECT_EQ(sub.state, log.states[0]);
}

TEST(Subgoal, UnsuccessfulEpisodeIsRejected) {
  auto log = log_with_final_alpha({0.5, 0.5});
  log.success = false;
  EXPECT_THROW(select_subgoal(log), std::logic_error);
}

TEST(Trajectory, ValidateNamesInconsistentList) {
  TrajectoryLog log;
  log.actions = {0, 1};
  log.states.resize(2);
  log.rewards.resize(1);
  try {
    log.validate();
    FAIL();
  } catch (const std::logic_error& e) {
    EXPECT_NE(std::string(e.what()).find("rewards"), std::string::npos);
  }
}
