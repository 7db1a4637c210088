#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "soundmind/optimizer.hpp"
#include "soundmind/policy.hpp"
#include "soundmind/reward.hpp"
#include "soundmind/task.hpp"
#include "soundmind/vocabulary.hpp"

namespace soundmind {

struct EpisodeResult {
  Trajectory trajectory;
  BimodalResponse response;
  double reward = 0.0;
};

/// Everything a rollout needs besides the policies and the instance.
struct EpisodeContext {
  const Vocabulary* vocab = nullptr;
  RewardWeights weights;
  std::size_t max_len = 8;
  std::size_t k = 4;
};

inline double score_episode(const BimodalResponse& resp, const TaskInstance& inst, const RewardWeights& w) {
  return composite_reward(resp, inst.task.label, inst.reference_lengths, w, inst.requested_output);
}

/// Samples tokens from `behavior` until end-of-sequence or max_len, recording
/// behavior and reference log-probs per token, then scores the response.
template <typename Rng>
EpisodeResult run_episode(const PolicyParams& behavior, const PolicyParams& ref, const TaskInstance& inst,
                          const EpisodeContext& ctx, Rng& rng) {
  if (ctx.max_len == 0) throw ConfigError("max_len must be positive");
  const std::size_t V = ctx.vocab->size();
  EpisodeResult ep;
  auto& tr = ep.trajectory;
  tr.task_id = inst.id;
  std::vector<TokenId> history;
  while (history.size() < ctx.max_len) {
    State s = featurize(inst, history, ctx.k, V);
    auto dist = action_distribution(behavior, s);
    TokenId a = sample_action(dist, rng);
    tr.logp_old.push_back(dist.log_probs[a]);
    tr.logp_ref.push_back(log_prob(ref, s, a));
    tr.actions.push_back(a);
    tr.states.push_back(std::move(s));
    history.push_back(a);
    if (ctx.vocab->is_eos(a)) break;
  }
  ep.response = ctx.vocab->make_response(history, ctx.weights.answer_window);
  ep.reward = score_episode(ep.response, inst, ctx.weights);
  tr.terminal_reward = ep.reward;
  return ep;
}

/// Argmax decoding; returns the generated tokens including end-of-sequence.
inline std::vector<TokenId> greedy_decode(const PolicyParams& params, const TaskInstance& inst,
                                          const EpisodeContext& ctx) {
  std::vector<TokenId> history;
  while (history.size() < ctx.max_len) {
    State s = featurize(inst, history, ctx.k, ctx.vocab->size());
    TokenId a = action_distribution(params, s).argmax();
    history.push_back(a);
    if (ctx.vocab->is_eos(a)) break;
  }
  return history;
}

/// Deterministic per-episode generator derived from (seed, stream, index).
inline std::mt19937_64 episode_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace soundmind

namespace soundmind {

/// Hand-set parameters that answer every task correctly under greedy
/// decoding: "so so Answer: <label>" then end-of-sequence, in the requested
/// modality. The label flips on any assignment that satisfies both premises
/// but falsifies the conclusion (truth pattern 0b110).
inline PolicyParams oracle_params(const Vocabulary& vocab, std::size_t k = 4) {
  if (k < 2) throw ConfigError("oracle policy needs k >= 2");
  PolicyShape shape{kTaskFeatureDim, vocab.size(), k};
  PolicyParams p(shape);
  const std::size_t V = vocab.size();
  auto slot = [&](std::size_t s, TokenId tok) { return kTaskFeatureDim + s * V + tok; };
  const std::size_t last = k - 1, before_last = k - 2;

  p.bias[vocab.eos()] = -100.0;
  for (Modality m : {Modality::text, Modality::audio}) {
    TokenId so = vocab.require(m, "so");
    TokenId ans = vocab.require(m, kAnswerMarker);
    TokenId ent = vocab.require(m, to_response_form(AnswerLabel::entailed));
    TokenId nent = vocab.require(m, to_response_form(AnswerLabel::not_entailed));
    p.bias[so] = 10.0;
    p.bias[ent] = p.bias[nent] = -100.0;
    // modality preference
    for (std::size_t mod = 0; mod < 3; ++mod) {
      bool wants_text = static_cast<OutputModality>(mod) != OutputModality::audio_out;
      if (wants_text == (m == Modality::text)) {
        for (TokenId t : {so, ans, ent, nent}) p.weight(kTaskFeatureDim - 3 + mod, t) = 50.0;
      }
    }
    p.weight(2 * 6, nent) = 32.0;
    for (Modality prev : {Modality::text, Modality::audio}) {
      TokenId pso = vocab.require(prev, "so");
      TokenId pans = vocab.require(prev, kAnswerMarker);
      p.weight(slot(last, pso), so) = 20.0;
      p.weight(slot(before_last, pso), ans) = 40.0;
      p.weight(slot(last, pans), ent) = 301.0;
      p.weight(slot(last, pans), nent) = 300.0;
      for (auto label : {AnswerLabel::entailed, AnswerLabel::not_entailed}) {
        p.weight(slot(last, vocab.require(prev, to_response_form(label))), vocab.eos()) = 500.0;
      }
    }
  }
  return p;
}

}  // namespace soundmind
