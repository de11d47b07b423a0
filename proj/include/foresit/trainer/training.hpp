#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "foresit/agent/agent_net.hpp"
#include "foresit/gridhome/layout.hpp"
#include "foresit/imagination/imagination_net.hpp"
#include "foresit/ndgrad/params.hpp"
#include "foresit/trainer/config.hpp"
#include "foresit/trainer/success_tracker.hpp"
#include "foresit/trainer/worker.hpp"

namespace foresit::trainer {

struct EpisodeResult {
  std::uint64_t episode = 0;
  int worker = 0;
  bool success = false;
  std::size_t length = 0;  // actions taken, Stop included
  int path_length = 0;
  double episode_return = 0.0;
  double sr = 0.0;         // worker's moving success rate after this episode
  double global_sr = 0.0;  // across all workers
  double sigma2 = 0.0;     // noise variance used during this episode
  std::optional<std::size_t> t_star;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  std::size_t imaginations = 0;
  std::size_t buffer_size = 0;  // replay buffer occupancy after this episode (and any flush)
  bool update_applied = false;
  int layout_id = 0;
  int target = 0;
  std::string error;  // non-empty when the episode aborted
};

struct FlushEvent {
  std::uint64_t episode = 0;
  int worker = 0;
  double final_loss = 0.0;
  double first_epoch_loss = 0.0;
  std::size_t epochs = 0;
  std::size_t buffer_size = 0;
  std::uint64_t imagination_version = 0;  // shared version after the sync
};

nlohmann::ordered_json to_json(const EpisodeResult& r, Mode mode);
nlohmann::ordered_json to_json(const FlushEvent& f);

struct TrainHooks {
  ActionOverride action_override;
  /// Receives every metrics record (episodes and flushes), serialized under a lock.
  std::function<void(const nlohmann::ordered_json&)> metrics;
  /// Called with the number of finished episodes every ckpt_every episodes.
  std::function<void(std::uint64_t)> checkpoint;
  /// Called after each flush with the number of records it trained on; the
  /// buffer is already empty by then. Test hook.
  std::function<void(const FlushEvent&, std::size_t flushed_records)> on_flush;
  const std::atomic<bool>* stop = nullptr;
};

struct WorkerStats {
  std::uint64_t episodes = 0;
  std::uint64_t successes = 0;
  std::uint64_t updates_applied = 0;
  std::uint64_t updates_skipped = 0;
  std::uint64_t flushes = 0;
  std::uint64_t errors = 0;
  double sr = 0.0;
};

struct TrainSummary {
  std::uint64_t episodes = 0;
  std::vector<WorkerStats> workers;
  double global_sr = 0.0;
  bool interrupted = false;
  std::uint64_t agent_version = 0;
  std::uint64_t imagination_version = 0;
};

/// Asynchronous actor-critic training. Workers share the agent parameters
/// (theta, omega) and the imagination weights w through ParamStores; each worker
/// owns its buffer, success tracker, noise level and RNG stream.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::vector<grid::RoomLayout> train_layouts);
  /// Resume from stored parameters (e.g. a checkpoint).
  Trainer(TrainConfig cfg, std::vector<grid::RoomLayout> train_layouts, nd::StoreState agent,
          nd::StoreState imagination);

  TrainSummary run(const TrainHooks& hooks = {});

  const TrainConfig& config() const noexcept { return cfg_; }
  const agent::AgentDims& agent_dims() const noexcept { return agent_dims_; }
  const imagination::ImaginationDims& imagination_dims() const noexcept { return imagination_dims_; }
  nd::ParamStore& agent_store() noexcept { return *agent_; }
  nd::ParamStore& imagination_store() noexcept { return *imagination_; }
  std::uint64_t episodes_done() const noexcept { return finished_.load(); }

 private:
  void worker_loop(int worker, const TrainHooks& hooks, WorkerStats& stats);
  void emit(const TrainHooks& hooks, const nlohmann::ordered_json& record);

  TrainConfig cfg_;
  std::vector<grid::RoomLayout> layouts_;
  agent::AgentDims agent_dims_;
  imagination::ImaginationDims imagination_dims_;
  std::unique_ptr<nd::ParamStore> agent_;
  std::unique_ptr<nd::ParamStore> imagination_;
  std::atomic<std::uint64_t> claimed_{0};
  std::atomic<std::uint64_t> finished_{0};
  std::mutex metrics_mutex_;
  std::mutex global_mutex_;
  SuccessTracker global_sr_;
};

/// Agent dims and initial parameters derived from a config.
agent::AgentDims agent_dims_for(const TrainConfig& cfg);
imagination::ImaginationDims imagination_dims_for(const TrainConfig& cfg);

}  // namespace foresit::trainer
