#include "foresit/agent/agent_net.hpp"

#include <cmath>
#include <string>

#include "foresit/error.hpp"
#include "foresit/rng.hpp"

namespace foresit::agent {

namespace {

nd::Tensor uniform_tensor(nd::Shape shape, std::size_t fan_in, double gain, Rng& rng) {
  const double bound = gain / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  nd::Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace

AgentDims dims_for(const grid::EnvConfig& env, std::size_t hidden, std::size_t value_hidden) {
  AgentDims d;
  d.obs = grid::observation_size(env);
  d.goal = static_cast<std::size_t>(grid::kVocabularySize);
  d.actions = grid::kActionCount;
  d.hidden = hidden;
  d.value_hidden = value_hidden;
  return d;
}

bool is_critic_slot(std::string_view name) { return name.starts_with("attention.") || name.starts_with("value."); }

nd::ParamSet init_agent_params(const AgentDims& dims, std::uint64_t seed) {
  if (dims.hidden == 0 || dims.obs == 0 || dims.goal == 0 || dims.actions == 0 || dims.value_hidden == 0) {
    throw ShapeError("agent dimensions must all be positive");
  }
  Rng rng(seed);
  const std::size_t h = dims.hidden;
  const std::size_t in = dims.encoder_input();
  nd::ParamSet p;
  p.add(slots::kEncoderWih, uniform_tensor({4 * h, in}, h, 1.0, rng));
  p.add(slots::kEncoderWhh, uniform_tensor({4 * h, h}, h, 1.0, rng));
  p.add(slots::kEncoderB, uniform_tensor({4 * h}, h, 1.0, rng));
  for (auto [w, b] : {std::pair{slots::kQueryW, slots::kQueryB}, std::pair{slots::kKeyW, slots::kKeyB},
                      std::pair{slots::kValueMapW, slots::kValueMapB}}) {
    p.add(w, uniform_tensor({h, h}, h, 1.0, rng));
    p.add(b, uniform_tensor({h}, h, 1.0, rng));
  }
  p.add(slots::kPolicyW, uniform_tensor({dims.actions, dims.policy_input()}, dims.policy_input(), 0.1, rng));
  p.add(slots::kPolicyB, nd::Tensor(nd::Shape{dims.actions}));
  p.add(slots::kValueW1, uniform_tensor({dims.value_hidden, h}, h, 1.0, rng));
  p.add(slots::kValueB1, uniform_tensor({dims.value_hidden}, h, 1.0, rng));
  p.add(slots::kValueW2, uniform_tensor({1, dims.value_hidden}, dims.value_hidden, 1.0, rng));
  p.add(slots::kValueB2, nd::Tensor(nd::Shape{1}));
  return p;
}

AgentNet::AgentNet(nd::Tape& tape, const AgentDims& dims) : tape_(&tape), dims_(dims) {}

StateVars AgentNet::zero_state() {
  const std::vector<double> zeros(dims_.hidden, 0.0);
  return {tape_->constant(zeros), tape_->constant(zeros)};
}

StateVars AgentNet::constant_state(const AgentState& state) {
  if (state.h.size() != dims_.hidden || state.c.size() != dims_.hidden) {
    throw ShapeError("agent state has " + std::to_string(state.h.size()) + "/" + std::to_string(state.c.size()) +
                     " components, expected " + std::to_string(dims_.hidden));
  }
  return {tape_->constant(state.h), tape_->constant(state.c)};
}

StateVars AgentNet::encode_step(std::span<const double> obs, std::span<const double> goal, int prev_action,
                                StateVars prev) {
  if (obs.size() != dims_.obs || goal.size() != dims_.goal) {
    throw ShapeError("encode_step: observation [" + std::to_string(obs.size()) + "] and goal [" +
                     std::to_string(goal.size()) + "], expected [" + std::to_string(dims_.obs) + "] and [" +
                     std::to_string(dims_.goal) + "]");
  }
  if (prev_action >= static_cast<int>(dims_.actions)) throw ShapeError("encode_step: action index out of range");
  std::vector<double> input;
  input.reserve(dims_.encoder_input());
  input.insert(input.end(), obs.begin(), obs.end());
  input.insert(input.end(), goal.begin(), goal.end());
  input.resize(dims_.encoder_input(), 0.0);
  if (prev_action >= 0) input[dims_.obs + dims_.goal + static_cast<std::size_t>(prev_action)] = 1.0;
  auto out = tape_->lstm_cell(tape_->constant(input), prev.h, prev.c, tape_->param(slots::kEncoderWih),
                              tape_->param(slots::kEncoderWhh), tape_->param(slots::kEncoderB));
  return {out.h, out.c};
}

nd::Var AgentNet::query(nd::Var s) { return tape_->linear(s, tape_->param(slots::kQueryW), tape_->param(slots::kQueryB)); }
nd::Var AgentNet::key(nd::Var s) { return tape_->linear(s, tape_->param(slots::kKeyW), tape_->param(slots::kKeyB)); }
nd::Var AgentNet::value_map(nd::Var s) {
  return tape_->linear(s, tape_->param(slots::kValueMapW), tape_->param(slots::kValueMapB));
}

AttendResult AgentNet::attend(std::span<const nd::Var> states) {
  if (states.empty()) throw std::invalid_argument("attend: empty state list");
  AttentionMemory memory(*this);
  for (nd::Var s : states) memory.push(s);
  return memory.attend_latest();
}

PolicyOut AgentNet::policy_forward(nd::Var s, nd::Var goal, nd::Var imagined) {
  if (tape_->size(s) != dims_.hidden || tape_->size(goal) != dims_.goal || tape_->size(imagined) != dims_.hidden) {
    throw ShapeError("policy_forward: state [" + std::to_string(tape_->size(s)) + "], goal [" +
                     std::to_string(tape_->size(goal)) + "], imagination [" + std::to_string(tape_->size(imagined)) +
                     "] do not match hidden " + std::to_string(dims_.hidden) + " / goal " + std::to_string(dims_.goal));
  }
  const nd::Var parts[] = {s, goal, imagined};
  const nd::Var logits =
      tape_->linear(tape_->concat(parts), tape_->param(slots::kPolicyW), tape_->param(slots::kPolicyB));
  return {tape_->softmax(logits), tape_->log_softmax(logits)};
}

nd::Var AgentNet::value_forward(nd::Var attended) {
  const nd::Var hidden =
      tape_->tanh(tape_->linear(attended, tape_->param(slots::kValueW1), tape_->param(slots::kValueB1)));
  return tape_->linear(hidden, tape_->param(slots::kValueW2), tape_->param(slots::kValueB2));
}

void AttentionMemory::push(nd::Var state) {
  states_.push_back(state);
  keys_.push_back(net_->key(state));
  values_.push_back(net_->value_map(state));
}

AttendResult AttentionMemory::attend_latest() {
  if (states_.empty()) throw std::invalid_argument("attend: empty state list");
  auto& tape = net_->tape();
  const nd::Var current = states_.back();
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(states_.size()));
  const nd::Var logits = tape.scale(tape.dots(net_->query(current), keys_), inv_scale);
  const nd::Var alpha = tape.softmax(logits);
  const nd::Var attended = tape.add(tape.mix(alpha, values_), current);
  return {alpha, attended};
}

}  // namespace foresit::agent
