#include "foresit/trainer/training.hpp"

#include <exception>
#include <iostream>
#include <stdexcept>
#include <thread>

#include "foresit/agent/trajectory.hpp"
#include "foresit/imagination/noise.hpp"
#include "foresit/imagination/replay_buffer.hpp"
#include "foresit/rng.hpp"
#include "foresit/trainer/losses.hpp"
#include "foresit/trainer/returns.hpp"

namespace foresit::trainer {

namespace {

constexpr std::uint64_t kAgentInitStream = 1;
constexpr std::uint64_t kImaginationInitStream = 2;
constexpr std::uint64_t kWorkerStreamBase = 100;

}  // namespace

agent::AgentDims agent_dims_for(const TrainConfig& cfg) {
  return agent::dims_for(cfg.env, cfg.hidden, cfg.value_hidden);
}

imagination::ImaginationDims imagination_dims_for(const TrainConfig& cfg) {
  return imagination::imagination_dims(cfg.hidden, static_cast<std::size_t>(grid::kVocabularySize), cfg.bottleneck);
}

nlohmann::ordered_json to_json(const EpisodeResult& r, Mode mode) {
  nlohmann::ordered_json j;
  j["episode"] = r.episode;
  j["worker"] = r.worker;
  j["mode"] = std::string(mode_name(mode));
  j["success"] = r.success;
  j["length"] = r.length;
  j["return"] = r.episode_return;
  j["sr"] = r.sr;
  j["global_sr"] = r.global_sr;
  j["sigma2"] = r.sigma2;
  j["t_star"] = r.t_star ? nlohmann::ordered_json(*r.t_star) : nlohmann::ordered_json(nullptr);
  j["losses"] = {{"policy", r.policy_loss}, {"value", r.value_loss}, {"entropy", r.entropy}};
  j["layout"] = r.layout_id;
  j["target"] = r.target;
  j["path_length"] = r.path_length;
  j["imaginations"] = r.imaginations;
  j["update_applied"] = r.update_applied;
  j["buffer"] = r.buffer_size;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

nlohmann::ordered_json to_json(const FlushEvent& f) {
  nlohmann::ordered_json j;
  j["event"] = "flush";
  j["episode"] = f.episode;
  j["worker"] = f.worker;
  j["final_loss"] = f.final_loss;
  j["first_epoch_loss"] = f.first_epoch_loss;
  j["epochs"] = f.epochs;
  j["buffer_size"] = f.buffer_size;
  j["imagination_version"] = f.imagination_version;
  return j;
}

Trainer::Trainer(TrainConfig cfg, std::vector<grid::RoomLayout> train_layouts)
    : cfg_(std::move(cfg)), layouts_(std::move(train_layouts)), global_sr_(cfg_.sr_window) {
  cfg_.validate();
  if (layouts_.empty()) throw std::invalid_argument("trainer needs at least one training layout");
  agent_dims_ = agent_dims_for(cfg_);
  imagination_dims_ = imagination_dims_for(cfg_);
  agent_ = std::make_unique<nd::ParamStore>(agent::init_agent_params(agent_dims_, derive_seed(cfg_.seed, kAgentInitStream)));
  imagination_ = std::make_unique<nd::ParamStore>(
      imagination::init_imagination_params(imagination_dims_, derive_seed(cfg_.seed, kImaginationInitStream)));
}

Trainer::Trainer(TrainConfig cfg, std::vector<grid::RoomLayout> train_layouts, nd::StoreState agent,
                 nd::StoreState imagination)
    : cfg_(std::move(cfg)), layouts_(std::move(train_layouts)), global_sr_(cfg_.sr_window) {
  cfg_.validate();
  if (layouts_.empty()) throw std::invalid_argument("trainer needs at least one training layout");
  agent_dims_ = agent_dims_for(cfg_);
  imagination_dims_ = imagination_dims_for(cfg_);
  if (!agent.params.same_layout(agent::init_agent_params(agent_dims_, 0))) {
    throw std::invalid_argument("stored agent parameters do not match the configured dimensions");
  }
  if (!imagination.params.same_layout(imagination::init_imagination_params(imagination_dims_, 0))) {
    throw std::invalid_argument("stored imagination parameters do not match the configured dimensions");
  }
  agent_ = std::make_unique<nd::ParamStore>(std::move(agent));
  imagination_ = std::make_unique<nd::ParamStore>(std::move(imagination));
}

void Trainer::emit(const TrainHooks& hooks, const nlohmann::ordered_json& record) {
  if (!hooks.metrics) return;
  std::lock_guard lock(metrics_mutex_);
  hooks.metrics(record);
}

TrainSummary Trainer::run(const TrainHooks& hooks) {
  TrainSummary summary;
  summary.workers.resize(static_cast<std::size_t>(cfg_.workers));
  if (cfg_.workers == 1) {
    worker_loop(0, hooks, summary.workers[0]);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> failures(summary.workers.size());
    for (int w = 0; w < cfg_.workers; ++w) {
      threads.emplace_back([this, w, &hooks, &summary, &failures] {
        try {
          worker_loop(w, hooks, summary.workers[static_cast<std::size_t>(w)]);
        } catch (...) {
          failures[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }
  summary.episodes = finished_.load();
  summary.interrupted = hooks.stop && hooks.stop->load() && summary.episodes < cfg_.episodes;
  {
    std::lock_guard lock(global_mutex_);
    summary.global_sr = global_sr_.rate();
  }
  summary.agent_version = agent_->version();
  summary.imagination_version = imagination_->version();
  return summary;
}

void Trainer::worker_loop(int worker, const TrainHooks& hooks, WorkerStats& stats) {
  Rng rng(derive_seed(cfg_.seed, kWorkerStreamBase + static_cast<std::uint64_t>(worker)));
  SuccessTracker tracker(cfg_.sr_window);
  imagination::ReplayBuffer buffer(cfg_.buffer_capacity);
  const imagination::NoiseSchedule schedule{cfg_.sigma2_max};
  // Local clone of w used only while training a flush; Adam moments persist
  // across this worker's flushes.
  nd::ParamStore local_w(imagination_->snapshot(), nd::AdamConfig{});
  const bool noisy = trains_imagination(cfg_.mode);
  double sigma2 = noisy ? schedule.variance(0.0) : 0.0;

  RolloutSpec spec;
  spec.mode = cfg_.mode;
  spec.agent = agent_dims_;
  spec.imagination = imagination_dims_;
  spec.env = cfg_.env;
  spec.int_interval = cfg_.int_interval;
  spec.rnd_variance = cfg_.rnd_variance;

  while (true) {
    if (hooks.stop && hooks.stop->load()) break;
    const std::uint64_t episode = claimed_.fetch_add(1);
    if (episode >= cfg_.episodes) break;

    EpisodeResult result;
    result.episode = episode;
    result.worker = worker;
    result.sigma2 = sigma2;
    const std::size_t layout_index = std::uniform_int_distribution<std::size_t>(0, layouts_.size() - 1)(rng);
    const std::uint64_t episode_seed = rng();
    const grid::RoomLayout& layout = layouts_[layout_index];
    result.layout_id = layout.layout_id();

    std::optional<imagination::SubgoalRecord> record;
    try {
      spec.sigma2 = sigma2;
      const nd::ParamSet w = cfg_.mode == Mode::Baseline || cfg_.mode == Mode::Rnd ? nd::ParamSet{} : imagination_->snapshot();
      Rollout ro = run_rollout(spec, agent_->snapshot(), w, layout, episode_seed, std::nullopt, rng,
                               hooks.action_override);
      ro.log.validate();
      result.target = ro.target;
      result.success = ro.success;
      result.length = ro.log.length();
      result.path_length = ro.path_length;
      result.episode_return = ro.episode_return;
      result.imaginations = ro.imaginations.size();

      // V(s*_{T+1}) := 0: every update ends at termination (Stop or T_max).
      const auto returns = compute_returns(ro.log.rewards, cfg_.gamma, 0.0);
      const auto losses = actor_critic_losses(*ro.tape, ro.log, returns, cfg_.gamma, cfg_.entropy_beta, 0.0);
      result.policy_loss = losses.policy_loss;
      result.value_loss = losses.value_loss;
      result.entropy = losses.entropy;
      nd::Gradients grads = ro.tape->backward(losses.total);
      if (cfg_.max_grad_norm > 0.0) grads.clip_global_norm(cfg_.max_grad_norm);
      result.update_applied = agent_->apply_gradients(grads, cfg_.lr);

      if (ro.success && uses_attention(cfg_.mode)) {
        const agent::Subgoal sub = agent::select_subgoal(ro.log);
        result.t_star = sub.t_star;
        if (trains_imagination(cfg_.mode)) {
          auto target = cfg_.mode == Mode::Att ? att_target(ro.log) : sub.state;
          record = imagination::SubgoalRecord{ro.s0, ro.goal, std::move(target)};
        }
      }
    } catch (const std::exception& e) {
      std::clog << "worker " << worker << ": episode " << episode << " aborted: " << e.what() << '\n';
      result.success = false;
      result.error = e.what();
      ++stats.errors;
    }

    tracker.record(result.success);
    result.sr = tracker.rate();
    {
      std::lock_guard lock(global_mutex_);
      global_sr_.record(result.success);
      result.global_sr = global_sr_.rate();
    }
    ++stats.episodes;
    stats.successes += result.success ? 1 : 0;
    stats.updates_applied += result.update_applied ? 1 : 0;
    stats.updates_skipped += result.error.empty() && !result.update_applied ? 1 : 0;
    stats.sr = result.sr;
    std::optional<FlushEvent> event;
    std::size_t flushed = 0;
    if (record && buffer.push(std::move(*record))) {
      local_w.replace(imagination_->snapshot());
      const auto flush = imagination::train_imagination(buffer, local_w, imagination_dims_, cfg_.imagination_epochs,
                                                        cfg_.imagination_lr, cfg_.imagination_minibatch);
      imagination::sync_shared(*imagination_, local_w.snapshot());
      flushed = buffer.size();
      event = FlushEvent{episode,  worker, flush.final_loss, flush.first_epoch_loss, flush.epochs,
                         flushed, imagination_->version()};
      buffer.clear();
      ++stats.flushes;
    }
    result.buffer_size = buffer.size();
    emit(hooks, to_json(result, cfg_.mode));
    if (event) {
      if (hooks.on_flush) hooks.on_flush(*event, flushed);
      emit(hooks, to_json(*event));
    }
    if (noisy) sigma2 = schedule.variance(tracker.rate());

    const std::uint64_t done = finished_.fetch_add(1) + 1;
    if (hooks.checkpoint && cfg_.ckpt_every > 0 && done % cfg_.ckpt_every == 0) hooks.checkpoint(done);
  }
}

}  // namespace foresit::trainer
