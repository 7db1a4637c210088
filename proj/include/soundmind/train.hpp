#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "soundmind/env.hpp"
#include "soundmind/optimizer.hpp"
#include "soundmind/parallel.hpp"
#include "soundmind/policy.hpp"
#include "soundmind/task.hpp"

namespace soundmind {

struct TrainConfig {
  TaskConfig tasks;
  RewardWeights weights;
  UpdateConfig update;
  std::size_t steps = 200;
  std::size_t max_len = 8;
  std::size_t k = 4;
  std::uint64_t seed = 7;
  std::size_t threads = 1;

  void validate() const {
    tasks.validate();
    weights.validate();
    update.validate();
    if (max_len == 0) throw ConfigError("max_len must be positive");
    if (k == 0) throw ConfigError("k must be positive");
    if (threads == 0) throw ConfigError("threads must be positive");
  }
};

/// One line of the training log.
struct StepRecord {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double mu_a = 0.0;
  double sigma_a = 0.0;
  double grad_norm = 0.0;
  std::optional<double> wall_time_s;
};

inline nlohmann::ordered_json to_json(const StepRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["mean_reward"] = r.mean_reward;
  j["mean_kl"] = r.mean_kl;
  j["clip_fraction"] = r.clip_fraction;
  j["mu_a"] = r.mu_a;
  j["sigma_a"] = r.sigma_a;
  j["grad_norm"] = r.grad_norm;
  if (r.wall_time_s) j["wall_time_s"] = *r.wall_time_s;
  return j;
}

inline std::vector<EpisodeResult> collect_rollouts(const PolicyParams& behavior, const PolicyParams& ref,
                                                   std::span<const TaskInstance> tasks, const EpisodeContext& ctx,
                                                   std::uint64_t seed, std::uint64_t stream, std::size_t threads) {
  std::vector<EpisodeResult> out(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    auto rng = episode_rng(seed, stream, i);
    out[i] = run_episode(behavior, ref, tasks[i], ctx, rng);
  });
  return out;
}

/// Mean composite reward of one stochastic rollout per task.
inline double mean_rollout_reward(const PolicyParams& params, std::span<const TaskInstance> tasks,
                                  const EpisodeContext& ctx, std::uint64_t seed, std::size_t threads = 1) {
  auto eps = collect_rollouts(params, params, tasks, ctx, seed, 0xe7a1ULL, threads);
  double sum = 0.0;
  for (const auto& e : eps) sum += e.reward;
  return eps.empty() ? 0.0 : sum / static_cast<double>(eps.size());
}

/// Fraction of tasks whose greedy response carries the correct answer in the
/// requested modality. Missing answers count as wrong.
inline double greedy_accuracy(const PolicyParams& params, std::span<const TaskInstance> tasks,
                              const EpisodeContext& ctx) {
  if (tasks.empty()) throw ConfigError("accuracy needs at least one task");
  std::size_t correct = 0;
  for (const auto& t : tasks) {
    auto resp = ctx.vocab->make_response(greedy_decode(params, t, ctx), ctx.weights.answer_window);
    auto ans = active_answer(resp, ctx.weights, t.requested_output);
    if (ans && *ans == t.task.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(tasks.size());
}

struct StepView {
  std::size_t step;
  std::span<const Trajectory> batch;
  const UpdateDiagnostics& diagnostics;
};

struct TrainResult {
  PolicyParams params;
  PolicyParams reference;
  std::vector<StepRecord> log;
};

/// REINFORCE++ loop. The reference policy is the initial (all-zero, uniform)
/// parameter set; each step samples a fresh task batch, rolls it out with the
/// current parameters and applies update_step.
inline TrainResult train(const TrainConfig& cfg, const Vocabulary& vocab,
                         const std::function<void(const StepRecord&)>& on_record = {},
                         const std::function<void(const StepView&)>& on_step = {}, bool record_wall_time = false) {
  cfg.validate();
  PolicyShape shape{kTaskFeatureDim, vocab.size(), cfg.k};
  TrainResult res{PolicyParams(shape), PolicyParams(shape), {}};
  FrozenPolicy ref = snapshot(res.reference);
  EpisodeContext ctx{&vocab, cfg.weights, cfg.max_len, cfg.k};
  UpdateConfig ucfg = cfg.update;

  std::mt19937_64 task_rng(cfg.seed);
  auto start = std::chrono::steady_clock::now();
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    auto tasks = generate_tasks(task_rng, cfg.tasks, vocab, ucfg.batch_size, step * ucfg.batch_size);
    auto episodes = collect_rollouts(res.params, ref.params(), tasks, ctx, cfg.seed, step + 1, cfg.threads);
    std::vector<Trajectory> batch;
    batch.reserve(episodes.size());
    for (auto& e : episodes) batch.push_back(std::move(e.trajectory));

    auto upd = update_step(res.params, batch, ref, ucfg);
    const auto& d = upd.diagnostics;
    StepRecord rec{step, d.mean_reward, d.mean_kl, d.clip_fraction, d.advantage.mu, d.advantage.sigma, d.grad_norm, {}};
    if (record_wall_time) {
      rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    if (on_step) on_step(StepView{step, batch, d});
    if (on_record) on_record(rec);
    res.log.push_back(rec);
    res.params = std::move(upd.params);
  }
  return res;
}

}  // namespace soundmind
