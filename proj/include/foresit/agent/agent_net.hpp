#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "foresit/gridhome/env.hpp"
#include "foresit/ndgrad/params.hpp"
#include "foresit/ndgrad/tape.hpp"

namespace foresit::agent {

struct AgentDims {
  std::size_t obs = 0;
  std::size_t goal = 0;
  std::size_t actions = grid::kActionCount;
  std::size_t hidden = 128;
  std::size_t value_hidden = 64;

  std::size_t encoder_input() const { return obs + goal + actions; }
  std::size_t policy_input() const { return hidden + goal + hidden; }
};

AgentDims dims_for(const grid::EnvConfig& env, std::size_t hidden, std::size_t value_hidden);

/// Parameter slot names. The attention and value slots form the set used only
/// by the critic; the policy path never reads them.
namespace slots {
inline constexpr const char* kEncoderWih = "encoder.w_ih";
inline constexpr const char* kEncoderWhh = "encoder.w_hh";
inline constexpr const char* kEncoderB = "encoder.b";
inline constexpr const char* kQueryW = "attention.q.w";
inline constexpr const char* kQueryB = "attention.q.b";
inline constexpr const char* kKeyW = "attention.k.w";
inline constexpr const char* kKeyB = "attention.k.b";
inline constexpr const char* kValueMapW = "attention.v.w";
inline constexpr const char* kValueMapB = "attention.v.b";
inline constexpr const char* kPolicyW = "policy.w";
inline constexpr const char* kPolicyB = "policy.b";
inline constexpr const char* kValueW1 = "value.w1";
inline constexpr const char* kValueB1 = "value.b1";
inline constexpr const char* kValueW2 = "value.w2";
inline constexpr const char* kValueB2 = "value.b2";
}  // namespace slots

/// True for attention (omega) and value-head slots.
bool is_critic_slot(std::string_view name);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every slot; the policy head is
/// scaled down so the initial action distribution is close to uniform.
nd::ParamSet init_agent_params(const AgentDims& dims, std::uint64_t seed);

/// Plain-value recurrent state (the latent s_t and the LSTM cell).
struct AgentState {
  std::vector<double> h;
  std::vector<double> c;
};

/// Recurrent state recorded on a tape.
struct StateVars {
  nd::Var h;
  nd::Var c;
};

struct AttendResult {
  nd::Var alpha;
  nd::Var attended;  // s*_t
};

struct PolicyOut {
  nd::Var probs;
  nd::Var log_probs;
};

/// Network forward passes recorded on a tape whose ParamSet was built by
/// init_agent_params. Holds no state of its own besides slot handles.
class AgentNet {
 public:
  AgentNet(nd::Tape& tape, const AgentDims& dims);

  const AgentDims& dims() const noexcept { return dims_; }
  nd::Tape& tape() noexcept { return *tape_; }

  StateVars zero_state();
  StateVars constant_state(const AgentState& state);
  /// One LSTM step over [obs : goal : one_hot(prev_action)]; prev_action < 0 means none.
  StateVars encode_step(std::span<const double> obs, std::span<const double> goal, int prev_action, StateVars prev);

  nd::Var query(nd::Var s);
  nd::Var key(nd::Var s);
  nd::Var value_map(nd::Var s);

  /// alpha = softmax(q(s_t) . k(s_j) / sqrt(t+1)), s* = sum_j alpha_j v(s_j) + s_t,
  /// where s_t is the last entry of `states`.
  AttendResult attend(std::span<const nd::Var> states);

  /// Single linear layer over [s : goal : imagined] followed by softmax.
  PolicyOut policy_forward(nd::Var s, nd::Var goal, nd::Var imagined);
  /// Two-layer tanh MLP over the attended state.
  nd::Var value_forward(nd::Var attended);

 private:
  nd::Tape* tape_;
  AgentDims dims_;
};

/// Incremental attention over a growing trajectory. Keys and values are
/// projected once per state; attend_latest() matches AgentNet::attend on the
/// full prefix bit-for-bit.
class AttentionMemory {
 public:
  explicit AttentionMemory(AgentNet& net) : net_(&net) {}

  void push(nd::Var state);
  AttendResult attend_latest();
  std::size_t size() const noexcept { return states_.size(); }

 private:
  AgentNet* net_;
  std::vector<nd::Var> states_;
  std::vector<nd::Var> keys_;
  std::vector<nd::Var> values_;
};

}  // namespace foresit::agent
