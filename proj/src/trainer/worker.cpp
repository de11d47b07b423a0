#include "foresit/trainer/worker.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace foresit::trainer {

bool reimagine_at(std::size_t t, int interval) {
  if (interval < 1) throw std::invalid_argument("imagination interval must be >= 1");
  return t % static_cast<std::size_t>(interval) == 0;
}

std::vector<double> att_target(const agent::TrajectoryLog& log) {
  if (!log.success) throw std::invalid_argument("att_target: episode was not successful");
  if (log.attended.empty()) throw std::invalid_argument("att_target: trajectory has no attended states");
  return log.attended.back();
}

int sample_action(std::span<const double> probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

namespace {

std::vector<double> initial_imagination(const RolloutSpec& spec, const nd::ParamSet& w, std::span<const double> s,
                                        std::span<const double> goal, Rng& rng) {
  switch (spec.mode) {
    case Mode::Baseline: return std::vector<double>(spec.agent.hidden, 0.0);
    case Mode::Rnd: return imagination::rnd_imagination(spec.agent.hidden, spec.rnd_variance, rng);
    case Mode::Foresit:
    case Mode::Int:
    case Mode::Att: return imagination::imagine(w, spec.imagination, s, goal, spec.sigma2, rng);
  }
  throw std::logic_error("unknown mode");
}

}  // namespace

Rollout run_rollout(const RolloutSpec& spec, nd::ParamSet theta, const nd::ParamSet& w, const grid::RoomLayout& layout,
                    std::uint64_t episode_seed, std::optional<int> target, Rng& rng,
                    const ActionOverride& override_action) {
  Rollout out;
  out.theta = std::make_unique<nd::ParamSet>(std::move(theta));
  out.tape = std::make_unique<nd::Tape>(out.theta.get());
  nd::Tape& tape = *out.tape;
  agent::AgentNet net(tape, spec.agent);
  agent::AttentionMemory memory(net);
  const bool attention = spec.critic && uses_attention(spec.mode);

  auto rr = grid::reset(layout, episode_seed, spec.env, target);
  grid::Episode& episode = rr.episode;
  out.goal = rr.target.embedding;
  out.target = rr.target.object;
  out.start = episode.start();
  out.layout_id = layout.layout_id();
  out.family = layout.family();
  const nd::Var goal = tape.constant(out.goal);

  grid::Observation obs = std::move(rr.observation);
  agent::StateVars state = net.zero_state();
  std::vector<double> imagined;
  nd::Var imagined_var{};
  int prev_action = -1;
  auto& log = out.log;

  for (std::size_t t = 0;; ++t) {
    state = net.encode_step(obs.features, out.goal, prev_action, state);
    const auto s = tape.value(state.h);
    log.states.emplace_back(s.begin(), s.end());
    log.state_vars.push_back(state.h);

    const bool fresh = t == 0 || (spec.mode == Mode::Int && reimagine_at(t, spec.int_interval));
    if (t == 0) out.s0 = log.states.back();
    if (fresh) {
      imagined = initial_imagination(spec, w, s, out.goal, rng);
      imagined_var = tape.constant(imagined);
      if (t == 0) out.imagination = imagined;
      out.imaginations.push_back(imagined);
    }

    if (spec.critic) {
      nd::Var critic_input = state.h;
      if (attention) {
        memory.push(state.h);
        const auto att = memory.attend_latest();
        const auto a = tape.value(att.alpha);
        const auto sa = tape.value(att.attended);
        log.alphas.emplace_back(a.begin(), a.end());
        log.attended.emplace_back(sa.begin(), sa.end());
        critic_input = att.attended;
      }
      log.values.push_back(net.value_forward(critic_input));
    }

    const auto policy = net.policy_forward(state.h, goal, imagined_var);
    const auto probs = tape.value(policy.probs);
    int action = override_action ? override_action(episode, probs) : -1;
    if (action < 0) {
      action = spec.greedy ? static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin())
                           : sample_action(probs, rng);
    }
    if (action >= grid::kActionCount) throw std::out_of_range("action " + std::to_string(action) + " out of range");
    log.log_probs.push_back(tape.pick(policy.log_probs, static_cast<std::size_t>(action)));
    log.entropies.push_back(tape.scale(tape.dot(policy.probs, policy.log_probs), -1.0));
    log.actions.push_back(action);

    const auto step = episode.step(static_cast<grid::Action>(action));
    log.rewards.push_back(step.reward);
    if (step.done) break;
    obs = step.observation;
    prev_action = action;
  }

  log.success = episode.success();
  out.success = episode.success();
  out.path_length = episode.path_length();
  out.episode_return = episode.episode_return();
  return out;
}

}  // namespace foresit::trainer
