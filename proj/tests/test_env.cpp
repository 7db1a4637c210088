#include <gtest/gtest.h>

#include <random>

#include "soundmind/env.hpp"
#include "soundmind/train.hpp"

using namespace soundmind;

namespace {

TaskInstance modus_ponens(const Vocabulary& vocab, OutputModality m = OutputModality::text_out) {
  LogicTask t;
  t.n_atoms = 2;
  t.major_premise = Formula::implies(Formula::atom(0), Formula::atom(1));
  t.minor_premise = Formula::atom(0);
  t.conclusion = Formula::atom(1);
  t.label = truth_table_entailment(t.major_premise, t.minor_premise, t.conclusion);
  return make_instance(1, t, vocab, m);
}

// Emits "Answer: entailed." then end-of-sequence with probability one.
PolicyParams point_mass(const Vocabulary& vocab) {
  PolicyParams p(PolicyShape{kTaskFeatureDim, vocab.size(), 4});
  const std::size_t V = vocab.size();
  TokenId ans = vocab.require(Modality::text, kAnswerMarker);
  TokenId ent = vocab.require(Modality::text, "entailed.");
  p.bias[ans] = 1000.0;
  p.weight(kTaskFeatureDim + 3 * V + ans, ent) = 5000.0;
  p.weight(kTaskFeatureDim + 3 * V + ent, vocab.eos()) = 5000.0;
  return p;
}

}  // namespace

TEST(RunEpisode, PointMassPolicyScoresByHand) {
  auto vocab = Vocabulary::desk();
  auto inst = modus_ponens(vocab);
  ASSERT_EQ(inst.task.label, AnswerLabel::entailed);
  EpisodeContext ctx{&vocab, RewardWeights{}, 8, 4};
  std::mt19937_64 rng(1);
  auto ep = run_episode(point_mass(vocab), PolicyParams(point_mass(vocab).shape), inst, ctx, rng);
  ASSERT_EQ(ep.trajectory.length(), 3u);
  EXPECT_EQ(ep.response.text_rendering, "Answer: entailed.");
  RewardWeights w;
  double len = std::min(1.0, 2.0 / static_cast<double>(inst.reference_lengths.text_len));
  EXPECT_DOUBLE_EQ(ep.reward, w.lambda1 + w.lambda3 + w.lambda4 * len);
  for (double lp : ep.trajectory.logp_old) EXPECT_EQ(lp, 0.0);
}

TEST(RunEpisode, TooShortForAMarker) {
  auto vocab = Vocabulary::desk();
  auto inst = modus_ponens(vocab);
  EpisodeContext ctx{&vocab, RewardWeights{}, 1, 4};
  std::mt19937_64 rng(1);
  auto bd_ep = run_episode(point_mass(vocab), PolicyParams(point_mass(vocab).shape), inst, ctx, rng);
  auto bd = reward_breakdown(bd_ep.response, inst.task.label, inst.reference_lengths, ctx.weights,
                             inst.requested_output);
  EXPECT_EQ(bd.format_text.value_or(0.0), 0.0);
  EXPECT_EQ(bd.answer, 0.0);
}

TEST(RunEpisode, ZeroMaxLenIsRejected) {
  auto vocab = Vocabulary::desk();
  EpisodeContext ctx{&vocab, RewardWeights{}, 0, 4};
  std::mt19937_64 rng(1);
  EXPECT_THROW(run_episode(PolicyParams(PolicyShape{kTaskFeatureDim, vocab.size(), 4}),
                           PolicyParams(PolicyShape{kTaskFeatureDim, vocab.size(), 4}), modus_ponens(vocab), ctx, rng),
               ConfigError);
}

TEST(RunEpisode, DeterministicUnderSeed) {
  auto vocab = Vocabulary::desk();
  std::mt19937_64 prng(5);
  PolicyParams p(PolicyShape{kTaskFeatureDim, vocab.size(), 4});
  std::normal_distribution<double> n(0, 0.5);
  for (auto& w : p.weights) w = n(prng);
  EpisodeContext ctx{&vocab, RewardWeights{}, 8, 4};
  auto inst = modus_ponens(vocab, OutputModality::both);
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto r1 = episode_rng(3, 1, i), r2 = episode_rng(3, 1, i);
    auto a = run_episode(p, p, inst, ctx, r1);
    auto b = run_episode(p, p, inst, ctx, r2);
    EXPECT_EQ(a.trajectory.actions, b.trajectory.actions);
    EXPECT_EQ(a.trajectory.logp_old, b.trajectory.logp_old);
    EXPECT_EQ(a.reward, b.reward);
  }
}

TEST(RunEpisode, StoredRewardMatchesRecomputation) {
  auto vocab = Vocabulary::desk();
  PolicyParams p(PolicyShape{kTaskFeatureDim, vocab.size(), 4});
  EpisodeContext ctx{&vocab, RewardWeights{}, 8, 4};
  std::mt19937_64 rng(9);
  for (int i = 0; i < 300; ++i) {
    auto inst = generate_task(rng, TaskConfig{2, 0.449, static_cast<OutputModality>(i % 3)}, vocab, i);
    auto ep = run_episode(p, p, inst, ctx, rng);
    EXPECT_EQ(ep.reward, score_episode(ep.response, inst, ctx.weights));
    EXPECT_EQ(ep.reward, ep.trajectory.terminal_reward);
    for (double lp : ep.trajectory.logp_old) EXPECT_LE(lp, 0.0);
    EXPECT_LE(ep.trajectory.length(), 8u);
  }
}

TEST(RunEpisode, ResponseSplitsByModality) {
  auto vocab = Vocabulary::desk();
  std::vector<TokenId> gen{vocab.require(Modality::text, "so"), vocab.require(Modality::audio, kAnswerMarker),
                           vocab.require(Modality::audio, "entailed."), vocab.eos()};
  auto resp = vocab.make_response(gen, 30);
  EXPECT_EQ(resp.text_rendering, "so");
  EXPECT_EQ(resp.audio_transcript, "Answer: entailed.");
  EXPECT_EQ(resp.text_tokens.size(), 1u);
  EXPECT_EQ(resp.audio_tokens.size(), 2u);
}

TEST(OraclePolicy, AnswersEveryModalityCorrectly) {
  auto vocab = Vocabulary::desk();
  auto p = oracle_params(vocab);
  EpisodeContext ctx{&vocab, RewardWeights{}, 8, 4};
  std::mt19937_64 rng(77);
  for (int m = 0; m < 3; ++m) {
    auto tasks = generate_tasks(rng, TaskConfig{2, 0.449, static_cast<OutputModality>(m)}, vocab, 400);
    EXPECT_EQ(greedy_accuracy(p, tasks, ctx), 1.0);
  }
}

TEST(Training, ThreadCountDoesNotChangeResults) {
  auto vocab = Vocabulary::desk();
  TrainConfig cfg;
  cfg.steps = 3;
  cfg.update.batch_size = 32;
  auto one = train(cfg, vocab);
  cfg.threads = 3;
  auto three = train(cfg, vocab);
  EXPECT_EQ(one.params, three.params);
  ASSERT_EQ(one.log.size(), three.log.size());
  for (std::size_t i = 0; i < one.log.size(); ++i) EXPECT_EQ(one.log[i].mean_reward, three.log[i].mean_reward);
}

TEST(Training, LogRecordsHaveStableKeys) {
  auto vocab = Vocabulary::desk();
  TrainConfig cfg;
  cfg.steps = 2;
  cfg.update.batch_size = 16;
  std::vector<std::string> lines;
  train(cfg, vocab, [&](const StepRecord& r) { lines.push_back(to_json(r).dump()); });
  ASSERT_EQ(lines.size(), 2u);
  auto j = nlohmann::json::parse(lines[1]);
  for (auto key : {"step", "mean_reward", "mean_kl", "clip_fraction", "mu_a", "sigma_a", "grad_norm"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_FALSE(j.contains("wall_time_s"));
  EXPECT_EQ(j["step"], 1);
}

TEST(Training, ReferenceStaysUniform) {
  auto vocab = Vocabulary::desk();
  TrainConfig cfg;
  cfg.steps = 2;
  cfg.update.batch_size = 16;
  auto res = train(cfg, vocab);
  EXPECT_TRUE(res.reference.is_zero());
  EXPECT_FALSE(res.params.is_zero());
}
