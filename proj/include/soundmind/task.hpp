#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "soundmind/logic.hpp"
#include "soundmind/reward.hpp"
#include "soundmind/vocabulary.hpp"

namespace soundmind {

/// A logic task rendered for the policy: prompt tokens in both modalities,
/// reference response lengths and the requested output streams.
struct TaskInstance {
  std::uint64_t id = 0;
  LogicTask task;
  std::vector<TokenId> text_prompt_tokens;
  std::vector<TokenId> audio_prompt_tokens;
  LengthAnnotation reference_lengths;
  OutputModality requested_output = OutputModality::text_out;
  std::vector<double> features;  // see task_features()
};

/// Present/absent one-hot for each of the 8 truth patterns, then a one-hot of
/// the requested modality.
inline constexpr std::size_t kTaskFeatureDim = 19;

/// Feature 2p is 1 when some assignment of A..D gives (major, minor,
/// conclusion) truth pattern p, feature 2p + 1 when none does. The modality
/// one-hot follows.
inline std::vector<double> task_features(const LogicTask& t, OutputModality modality) {
  std::array<bool, 8> seen{};
  for (std::uint32_t a = 0; a < (1U << kMaxAtoms); ++a) {
    unsigned pattern = (t.major_premise.evaluate(a) ? 4U : 0U) | (t.minor_premise.evaluate(a) ? 2U : 0U) |
                       (t.conclusion.evaluate(a) ? 1U : 0U);
    seen[pattern] = true;
  }
  std::vector<double> f(kTaskFeatureDim, 0.0);
  for (std::size_t p = 0; p < 8; ++p) f[2 * p + (seen[p] ? 0 : 1)] = 1.0;
  f[16 + static_cast<std::size_t>(modality)] = 1.0;
  return f;
}

namespace detail {
inline std::vector<TokenId> formula_tokens(const Formula& f, const Vocabulary& vocab, Modality m) {
  std::vector<TokenId> out;
  std::istringstream in(f.to_string());
  std::string w;
  while (in >> w) out.push_back(vocab.require(m, w));
  return out;
}
}  // namespace detail

/// Prompt: major, minor, "so", conclusion. Reference response: "so",
/// conclusion, "Answer:", label, which fixes both reference lengths.
inline TaskInstance make_instance(std::uint64_t id, LogicTask task, const Vocabulary& vocab,
                                  OutputModality modality) {
  TaskInstance inst;
  inst.id = id;
  for (Modality m : {Modality::text, Modality::audio}) {
    auto& prompt = m == Modality::text ? inst.text_prompt_tokens : inst.audio_prompt_tokens;
    for (const Formula* f : {&task.major_premise, &task.minor_premise}) {
      auto toks = detail::formula_tokens(*f, vocab, m);
      prompt.insert(prompt.end(), toks.begin(), toks.end());
    }
    prompt.push_back(vocab.require(m, "so"));
    auto concl = detail::formula_tokens(task.conclusion, vocab, m);
    prompt.insert(prompt.end(), concl.begin(), concl.end());
  }
  std::size_t ref = 1 + detail::formula_tokens(task.conclusion, vocab, Modality::text).size() + 2;
  inst.reference_lengths = {ref, ref};
  inst.requested_output = modality;
  inst.features = task_features(task, modality);
  inst.task = std::move(task);
  return inst;
}

struct TaskConfig {
  int n_atoms = 2;
  double entailed_fraction = 0.449;
  OutputModality modality = OutputModality::text_out;
  int max_attempts = 10000;

  void validate() const {
    if (n_atoms < 1 || n_atoms > kMaxAtoms) throw ConfigError("n_atoms must lie in [1, 4]");
    if (!(entailed_fraction >= 0.0 && entailed_fraction <= 1.0)) {
      throw ConfigError("entailed_fraction must lie in [0, 1]");
    }
    if (max_attempts < 1) throw ConfigError("max_attempts must be positive");
  }
};

namespace detail {

template <typename Rng>
Formula random_literal(Rng& rng, int n_atoms) {
  std::uniform_int_distribution<int> atom(0, n_atoms - 1);
  std::bernoulli_distribution neg(0.5);
  int a = atom(rng);
  return Formula::literal(a, neg(rng));
}

template <typename Rng>
std::pair<Formula, Formula> random_literal_pair(Rng& rng, int n_atoms) {
  std::uniform_int_distribution<int> atom(0, n_atoms - 1);
  std::bernoulli_distribution neg(0.5);
  int a = atom(rng);
  int b = atom(rng);
  if (n_atoms > 1) {
    while (b == a) b = atom(rng);
  }
  bool na = neg(rng);
  bool nb = neg(rng);
  return {Formula::literal(a, na), Formula::literal(b, nb)};
}

template <typename Rng>
LogicTask random_logic_task(Rng& rng, int n_atoms) {
  LogicTask t;
  t.n_atoms = n_atoms;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  auto [x, y] = random_literal_pair(rng, n_atoms);
  t.major_premise = u(rng) < 0.5 ? Formula::implies(std::move(x), std::move(y)) : Formula::disj(std::move(x), std::move(y));

  if (n_atoms > 1 && u(rng) < 0.3) {
    auto [p, q] = random_literal_pair(rng, n_atoms);
    t.minor_premise = Formula::conj(std::move(p), std::move(q));
  } else {
    t.minor_premise = random_literal(rng, n_atoms);
  }

  double c = u(rng);
  if (n_atoms > 1 && c < 0.1) {
    auto [p, q] = random_literal_pair(rng, n_atoms);
    t.conclusion = Formula::conj(std::move(p), std::move(q));
  } else if (n_atoms > 1 && c < 0.2) {
    auto [p, q] = random_literal_pair(rng, n_atoms);
    t.conclusion = Formula::disj(std::move(p), std::move(q));
  } else {
    t.conclusion = random_literal(rng, n_atoms);
  }
  t.label = truth_table_entailment(t.major_premise, t.minor_premise, t.conclusion);
  return t;
}

template <typename Rng>
LogicTask random_task_with_label(Rng& rng, int n_atoms, AnswerLabel want, int max_attempts) {
  for (int i = 0; i < max_attempts; ++i) {
    LogicTask t = random_logic_task(rng, n_atoms);
    if (t.label == want) return t;
  }
  throw ConfigError("could not sample a task with label " + std::string(to_string(want)));
}

}  // namespace detail

/// One task whose label is drawn with P(entailed) = entailed_fraction, then
/// rejection-sampled to match. Labels come from the truth-table oracle.
template <typename Rng>
TaskInstance generate_task(Rng& rng, const TaskConfig& cfg, const Vocabulary& vocab, std::uint64_t id = 0) {
  cfg.validate();
  std::bernoulli_distribution want_entailed(cfg.entailed_fraction);
  AnswerLabel want = want_entailed(rng) ? AnswerLabel::entailed : AnswerLabel::not_entailed;
  return make_instance(id, detail::random_task_with_label(rng, cfg.n_atoms, want, cfg.max_attempts), vocab,
                       cfg.modality);
}

/// A batch with exactly round(count * entailed_fraction) entailed tasks in
/// shuffled order. Ids are first_id, first_id + 1, ...
template <typename Rng>
std::vector<TaskInstance> generate_tasks(Rng& rng, const TaskConfig& cfg, const Vocabulary& vocab,
                                         std::size_t count, std::uint64_t first_id = 0) {
  cfg.validate();
  auto n_entailed = static_cast<std::size_t>(std::llround(cfg.entailed_fraction * static_cast<double>(count)));
  std::vector<AnswerLabel> labels(count, AnswerLabel::not_entailed);
  std::fill_n(labels.begin(), n_entailed, AnswerLabel::entailed);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::vector<TaskInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(make_instance(first_id + i, detail::random_task_with_label(rng, cfg.n_atoms, labels[i], cfg.max_attempts),
                                vocab, cfg.modality));
  }
  return out;
}

}  // namespace soundmind
