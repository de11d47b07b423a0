#include "foresit/eval/evaluate.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "foresit/agent/trajectory.hpp"
#include "foresit/eval/metrics.hpp"
#include "foresit/gridhome/oracle.hpp"
#include "foresit/rng.hpp"
#include "foresit/trainer/worker.hpp"

namespace foresit::eval {

namespace {

constexpr int kLongPath = 5;

trainer::RolloutSpec spec_for(const PolicySnapshot& policy, const EvalOptions& options, bool critic) {
  trainer::RolloutSpec spec;
  spec.mode = policy.mode;
  spec.agent = policy.agent;
  spec.imagination = policy.imagination;
  spec.env = policy.env;
  spec.int_interval = policy.int_interval;
  spec.rnd_variance = policy.rnd_variance;
  spec.sigma2 = 0.0;
  spec.greedy = options.greedy;
  spec.critic = critic;
  return spec;
}

std::uint64_t episode_seed(std::uint64_t base, int layout_id, int target, std::size_t index) {
  std::uint64_t s = derive_seed(base, static_cast<std::uint64_t>(layout_id));
  s = derive_seed(s, static_cast<std::uint64_t>(target));
  return derive_seed(s, index);
}

template <typename Fn>
void for_each_episode(const PolicySnapshot& policy, const std::vector<grid::RoomLayout>& layouts,
                      const EvalOptions& options, bool critic, Fn&& fn) {
  if (layouts.empty()) throw std::invalid_argument("evaluation needs at least one layout");
  if (options.seeds_per_pair == 0) throw std::invalid_argument("evaluation needs at least one seed per pair");
  const auto spec = spec_for(policy, options, critic);
  for (const auto& layout : layouts) {
    for (int target : layout.objects_present()) {
      for (std::size_t k = 0; k < options.seeds_per_pair; ++k) {
        const std::uint64_t seed = episode_seed(options.seed, layout.layout_id(), target, k);
        Rng rng(derive_seed(seed, 0xE7A1));
        auto ro = trainer::run_rollout(spec, policy.agent_params, policy.imagination_params, layout, seed, target, rng,
                                          options.action_override);
        fn(layout, target, k, ro);
      }
    }
  }
}

}  // namespace

MetricSet aggregate(const std::vector<EpisodeRow>& rows, bool split_on_agent_path) {
  MetricSet m;
  m.episodes = rows.size();
  std::vector<bool> s, s_long;
  std::vector<int> lg, l, lg_long, l_long;
  for (const auto& r : rows) {
    s.push_back(r.success);
    lg.push_back(r.oracle_length);
    l.push_back(r.length);
    const int split_length = split_on_agent_path ? r.length : r.oracle_length;
    if (split_length > kLongPath) {
      s_long.push_back(r.success);
      lg_long.push_back(r.oracle_length);
      l_long.push_back(r.length);
    }
  }
  m.sr = success_rate(s);
  m.spl = spl(s, lg, l);
  m.long_episodes = s_long.size();
  m.sr_long = success_rate(s_long);
  m.spl_long = spl(s_long, lg_long, l_long);
  return m;
}

EvalReport evaluate(const PolicySnapshot& policy, const std::vector<grid::RoomLayout>& layouts,
                    const EvalOptions& options) {
  EvalReport report;
  report.options = options;
  for_each_episode(policy, layouts, options, false,
                   [&](const grid::RoomLayout& layout, int target, std::size_t k, const trainer::Rollout& ro) {
                     EpisodeRow row;
                     row.layout_id = layout.layout_id();
                     row.family = layout.family();
                     row.target = target;
                     row.seed_index = k;
                     row.success = ro.success;
                     row.length = ro.path_length;
                     row.oracle_length = grid::shortest_path_length(layout, ro.start, target, policy.env);
                     report.rows.push_back(row);
                   });
  report.overall = aggregate(report.rows, options.split_on_agent_path);
  for (int f = 0; f < grid::kFamilyCount; ++f) {
    std::vector<EpisodeRow> subset;
    for (const auto& r : report.rows) {
      if (r.family == f) subset.push_back(r);
    }
    if (!subset.empty()) report.families.emplace_back(std::string(grid::family_name(f)), aggregate(subset, options.split_on_agent_path));
  }
  return report;
}

namespace {

nlohmann::ordered_json metrics_json(const MetricSet& m) {
  return {{"episodes", m.episodes}, {"SR", m.sr},           {"SPL", m.spl},
          {"long_episodes", m.long_episodes}, {"SR>5", m.sr_long}, {"SPL>5", m.spl_long}};
}

}  // namespace

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["options"] = {{"seeds_per_pair", report.options.seeds_per_pair},
                  {"greedy", report.options.greedy},
                  {"seed", report.options.seed},
                  {"split_on_agent_path", report.options.split_on_agent_path}};
  j["overall"] = metrics_json(report.overall);
  nlohmann::ordered_json fam = nlohmann::ordered_json::object();
  for (const auto& [name, m] : report.families) fam[name] = metrics_json(m);
  j["families"] = fam;
  return j;
}

std::string format_table(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %8s %8s\n", "split", "episodes", "SR", "SPL", "SR>5", "SPL>5");
  out << line;
  auto row = [&](const std::string& name, const MetricSet& m) {
    std::snprintf(line, sizeof line, "%-12s %8zu %8.2f %8.2f %8.2f %8.2f\n", name.c_str(), m.episodes, 100.0 * m.sr,
                  100.0 * m.spl, 100.0 * m.sr_long, 100.0 * m.spl_long);
    out << line;
  };
  for (const auto& [name, m] : report.families) row(name, m);
  row("all", report.overall);
  return out.str();
}

void write_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "layout_id,family,target,seed_index,success,L,Lg\n";
  for (const auto& r : report.rows) {
    out << r.layout_id << ',' << grid::family_name(r.family) << ',' << grid::kObjectNames[static_cast<std::size_t>(r.target)]
        << ',' << r.seed_index << ',' << (r.success ? 1 : 0) << ',' << r.length << ',' << r.oracle_length << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::size_t export_states(const PolicySnapshot& policy, const std::vector<grid::RoomLayout>& layouts,
                          const EvalOptions& options, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const bool attention = trainer::uses_attention(policy.mode);
  std::size_t lines = 0;
  for_each_episode(policy, layouts, options, true,
                   [&](const grid::RoomLayout& layout, int target, std::size_t k, const trainer::Rollout& ro) {
                     nlohmann::json subgoal = nullptr;
                     nlohmann::json t_star = nullptr;
                     if (ro.success && attention) {
                       const auto sub = agent::select_subgoal(ro.log);
                       subgoal = sub.state;
                       t_star = sub.t_star;
                     }
                     std::size_t imagination_index = 0;
                     for (std::size_t t = 0; t < ro.log.states.size(); ++t) {
                       if (policy.mode == trainer::Mode::Int && t > 0 && trainer::reimagine_at(t, policy.int_interval)) {
                         ++imagination_index;
                       }
                       nlohmann::ordered_json j;
                       j["layout"] = layout.layout_id();
                       j["target"] = target;
                       j["seed_index"] = k;
                       j["t"] = t;
                       j["success"] = ro.success;
                       j["t_star"] = t_star;
                       j["state"] = ro.log.states[t];
                       j["imagination"] = ro.imaginations.at(imagination_index);
                       j["subgoal"] = subgoal;
                       out << j.dump() << '\n';
                       ++lines;
                     }
                   });
  if (!out) throw std::runtime_error("failed writing " + path.string());
  return lines;
}

}  // namespace foresit::eval
