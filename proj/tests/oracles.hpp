#pragma once

// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "soundmind/logic.hpp"
#include "soundmind/policy.hpp"
#include "soundmind/reward.hpp"
#include "soundmind/task.hpp"
#include "soundmind/vocabulary.hpp"

namespace oracle {

using BigFloat = boost::multiprecision::cpp_bin_float_50;

/// Softmax probabilities in 50-digit arithmetic, logits summed from scratch.
inline std::vector<BigFloat> softmax_hp(const soundmind::PolicyParams& p, const soundmind::State& s) {
  const auto V = p.shape.vocab;
  std::vector<BigFloat> z(V);
  for (std::size_t v = 0; v < V; ++v) {
    BigFloat acc = p.bias[v];
    for (std::size_t f = 0; f < s.features.size(); ++f) {
      if (s.features[f] != 0.0) acc += BigFloat(s.features[f]) * BigFloat(p.weight(f, v));
    }
    z[v] = acc;
  }
  BigFloat sum = 0;
  for (auto& x : z) {
    x = boost::multiprecision::exp(x);
    sum += x;
  }
  for (auto& x : z) x /= sum;
  return z;
}

inline double log_prob_hp(const soundmind::PolicyParams& p, const soundmind::State& s, soundmind::TokenId a) {
  return static_cast<double>(boost::multiprecision::log(softmax_hp(p, s)[a]));
}

/// Central differences of f over every parameter (weights, then bias).
inline std::vector<double> finite_difference(soundmind::PolicyParams p,
                                             const std::function<double(const soundmind::PolicyParams&)>& f,
                                             double h) {
  std::vector<double> g;
  g.reserve(p.weights.size() + p.bias.size());
  for (auto* vec : {&p.weights, &p.bias}) {
    for (std::size_t i = 0; i < vec->size(); ++i) {
      double orig = (*vec)[i];
      (*vec)[i] = orig + h;
      double up = f(p);
      (*vec)[i] = orig - h;
      double down = f(p);
      (*vec)[i] = orig;
      g.push_back((up - down) / (2 * h));
    }
  }
  return g;
}

inline std::vector<double> flatten(const soundmind::PolicyParams& g) {
  std::vector<double> out(g.weights);
  out.insert(out.end(), g.bias.begin(), g.bias.end());
  return out;
}

/// Entailment by enumerating assignments from 2^n - 1 down to 0 and checking
/// model inclusion of premises in the conclusion's models.
inline soundmind::AnswerLabel entailment_reverse(const soundmind::Formula& major, const soundmind::Formula& minor,
                                                 const soundmind::Formula& conclusion) {
  std::vector<std::uint32_t> premise_models, conclusion_models;
  for (std::int64_t a = (1 << soundmind::kMaxAtoms) - 1; a >= 0; --a) {
    auto u = static_cast<std::uint32_t>(a);
    if (major.evaluate(u) && minor.evaluate(u)) premise_models.push_back(u);
    if (conclusion.evaluate(u)) conclusion_models.push_back(u);
  }
  for (auto m : premise_models) {
    bool found = false;
    for (auto c : conclusion_models) found = found || c == m;
    if (!found) return soundmind::AnswerLabel::not_entailed;
  }
  return soundmind::AnswerLabel::entailed;
}

/// Levenshtein distance as the cheapest monotone matching: choose k aligned
/// pairs (each a match or a substitution), everything else is an insertion
/// or deletion. Enumerates every matching.
class AlignmentOracle {
public:
  explicit AlignmentOracle(std::size_t max_len) : max_len_(max_len) {
    matchings_.resize((max_len + 1) * (max_len + 1));
    for (std::size_t a = 0; a <= max_len; ++a) {
      for (std::size_t b = 0; b <= max_len; ++b) {
        std::vector<std::pair<int, int>> cur;
        enumerate(a, b, 0, 0, cur, matchings_[a * (max_len + 1) + b]);
      }
    }
  }

  template <typename Seq>
  std::size_t distance(const Seq& x, const Seq& y) const {
    const auto& ms = matchings_.at(x.size() * (max_len_ + 1) + y.size());
    std::size_t best = x.size() + y.size();
    for (const auto& m : ms) {
      std::size_t cost = x.size() + y.size() - 2 * m.size();
      for (auto [i, j] : m) cost += x[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(j)] ? 0 : 1;
      best = std::min(best, cost);
    }
    return best;
  }

private:
  static void enumerate(std::size_t a, std::size_t b, std::size_t i, std::size_t j,
                        std::vector<std::pair<int, int>>& cur, std::vector<std::vector<std::pair<int, int>>>& out) {
    out.push_back(cur);
    for (std::size_t ii = i; ii < a; ++ii) {
      for (std::size_t jj = j; jj < b; ++jj) {
        cur.emplace_back(static_cast<int>(ii), static_cast<int>(jj));
        enumerate(a, b, ii + 1, jj + 1, cur, out);
        cur.pop_back();
      }
    }
  }

  std::size_t max_len_;
  std::vector<std::vector<std::vector<std::pair<int, int>>>> matchings_;
};

/// Exact categorical KL(p || q) from two log-probability vectors.
inline double exact_kl(const std::vector<double>& logp, const std::vector<double>& logq) {
  double kl = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) kl += std::exp(logp[i]) * (logp[i] - logq[i]);
  return kl;
}

/// Plain softmax from raw logits, no max subtraction (inputs kept small).
inline std::vector<double> naive_softmax(const std::vector<double>& z) {
  double sum = 0.0;
  for (double v : z) sum += std::exp(v);
  std::vector<double> p;
  for (double v : z) p.push_back(std::exp(v) / sum);
  return p;
}

/// E[R] of the sequence policy by enumerating every token sequence up to
/// max_len (ending early at end-of-sequence). Probabilities come from the
/// high-precision softmax; rewards from `reward(tokens)`.
inline double expected_reward(const soundmind::PolicyParams& p, const soundmind::TaskInstance& inst,
                              const soundmind::Vocabulary& vocab, std::size_t max_len, std::size_t k,
                              const std::function<double(const std::vector<soundmind::TokenId>&)>& reward) {
  double total = 0.0;
  std::vector<soundmind::TokenId> seq;
  std::function<void(double)> walk = [&](double prob) {
    bool done = seq.size() == max_len || (!seq.empty() && vocab.is_eos(seq.back()));
    if (done) {
      total += prob * reward(seq);
      return;
    }
    auto s = soundmind::featurize(inst, seq, k, vocab.size());
    auto probs = softmax_hp(p, s);
    for (soundmind::TokenId a = 0; a < vocab.size(); ++a) {
      seq.push_back(a);
      walk(prob * static_cast<double>(probs[a]));
      seq.pop_back();
    }
  };
  walk(1.0);
  return total;
}

}  // namespace oracle
