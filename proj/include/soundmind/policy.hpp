#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "soundmind/error.hpp"
#include "soundmind/reward.hpp"
#include "soundmind/task.hpp"

namespace soundmind {

/// Dimensions of a linear-softmax sequence policy. Inputs are the task
/// features followed by a one-hot encoding of each of the last `k` tokens.
struct PolicyShape {
  std::size_t task_dim = kTaskFeatureDim;
  std::size_t vocab = 0;
  std::size_t k = 4;

  std::size_t feature_dim() const { return task_dim + k * vocab; }
  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

inline constexpr TokenId kPadToken = std::numeric_limits<TokenId>::max();

struct State {
  std::vector<double> features;
  std::vector<TokenId> prefix;  // last k tokens, oldest first, kPadToken before the start
  std::size_t position = 0;
};

/// Weight matrix (feature_dim x vocab, row-major) and bias. Gradients share
/// this type.
struct PolicyParams {
  PolicyShape shape;
  std::vector<double> weights;
  std::vector<double> bias;

  PolicyParams() = default;
  explicit PolicyParams(const PolicyShape& s)
      : shape(s), weights(s.feature_dim() * s.vocab, 0.0), bias(s.vocab, 0.0) {}

  double& weight(std::size_t feature, TokenId token) { return weights[feature * shape.vocab + token]; }
  double weight(std::size_t feature, TokenId token) const { return weights[feature * shape.vocab + token]; }

  void add_scaled(const PolicyParams& other, double scale) {
    if (!(other.shape == shape)) throw ConfigError("parameter shape mismatch");
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += scale * other.weights[i];
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += scale * other.bias[i];
  }

  void scale(double s) {
    for (double& w : weights) w *= s;
    for (double& b : bias) b *= s;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double w : weights) s += w * w;
    for (double b : bias) s += b * b;
    return s;
  }

  double norm() const { return std::sqrt(squared_norm()); }

  bool all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(weights.begin(), weights.end(), finite) && std::all_of(bias.begin(), bias.end(), finite);
  }

  bool is_zero() const {
    auto zero = [](double v) { return v == 0.0; };
    return std::all_of(weights.begin(), weights.end(), zero) && std::all_of(bias.begin(), bias.end(), zero);
  }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// Read-only handle to a parameter snapshot (the reference policy, or the
/// behavior policy of a batch).
class FrozenPolicy {
public:
  FrozenPolicy() = default;
  explicit FrozenPolicy(PolicyParams params) : params_(std::make_shared<const PolicyParams>(std::move(params))) {}

  const PolicyParams& params() const { return *params_; }
  const PolicyParams* operator->() const { return params_.get(); }
  explicit operator bool() const { return params_ != nullptr; }

private:
  std::shared_ptr<const PolicyParams> params_;
};

inline FrozenPolicy snapshot(const PolicyParams& params) { return FrozenPolicy(params); }

/// Builds the state after `history` has been generated for `task`.
inline State featurize(std::span<const double> task_features, std::span<const TokenId> history, std::size_t k,
                       std::size_t vocab_size) {
  if (k == 0) throw ConfigError("prefix window k must be positive");
  State s;
  s.position = history.size();
  s.prefix.assign(k, kPadToken);
  std::size_t take = std::min(k, history.size());
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(), s.prefix.end() - static_cast<std::ptrdiff_t>(take));
  s.features.assign(task_features.size() + k * vocab_size, 0.0);
  std::copy(task_features.begin(), task_features.end(), s.features.begin());
  for (std::size_t slot = 0; slot < k; ++slot) {
    TokenId tok = s.prefix[slot];
    if (tok == kPadToken) continue;
    if (tok >= vocab_size) throw ConfigError("prefix token outside the vocabulary");
    s.features[task_features.size() + slot * vocab_size + tok] = 1.0;
  }
  return s;
}

inline State featurize(const TaskInstance& task, std::span<const TokenId> history, std::size_t k,
                       std::size_t vocab_size) {
  return featurize(std::span<const double>(task.features), history, k, vocab_size);
}

struct ActionDistribution {
  std::vector<double> log_probs;

  std::size_t size() const { return log_probs.size(); }
  double prob(TokenId a) const { return std::exp(log_probs[a]); }

  TokenId argmax() const {
    return static_cast<TokenId>(std::max_element(log_probs.begin(), log_probs.end()) - log_probs.begin());
  }
};

inline std::vector<double> logits(const PolicyParams& params, const State& state) {
  const auto& shape = params.shape;
  if (state.features.size() != shape.feature_dim()) throw ConfigError("state/parameter dimension mismatch");
  std::vector<double> z(params.bias);
  for (std::size_t f = 0; f < state.features.size(); ++f) {
    double x = state.features[f];
    if (x == 0.0) continue;
    const double* row = &params.weights[f * shape.vocab];
    for (std::size_t v = 0; v < shape.vocab; ++v) z[v] += x * row[v];
  }
  return z;
}

/// Max-subtracted log-softmax.
inline std::vector<double> log_softmax(std::span<const double> z) {
  double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  double lse = m + std::log(sum);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

inline ActionDistribution action_distribution(const PolicyParams& params, const State& state) {
  auto z = logits(params, state);
  return {log_softmax(z)};
}

/// Inverse-CDF categorical draw from one uniform variate.
template <typename Rng>
TokenId sample_action(const ActionDistribution& dist, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  double cum = 0.0;
  TokenId last_positive = 0;
  for (TokenId a = 0; a < dist.size(); ++a) {
    double p = dist.prob(a);
    if (p <= 0.0) continue;
    last_positive = a;
    cum += p;
    if (r < cum) return a;
  }
  return last_positive;
}

inline double log_prob(const PolicyParams& params, const State& state, TokenId action) {
  if (action >= params.shape.vocab) throw ConfigError("action outside the vocabulary");
  return action_distribution(params, state).log_probs[action];
}

/// grad += scale * d/dtheta log pi(action | state). Rows with a zero feature
/// are skipped.
inline void accumulate_grad_log_prob(const PolicyParams& params, const State& state, TokenId action, double scale,
                                     PolicyParams& grad) {
  auto dist = action_distribution(params, state);
  const std::size_t V = params.shape.vocab;
  std::vector<double> coeff(V);
  for (std::size_t v = 0; v < V; ++v) coeff[v] = scale * ((v == action ? 1.0 : 0.0) - std::exp(dist.log_probs[v]));
  for (std::size_t v = 0; v < V; ++v) grad.bias[v] += coeff[v];
  for (std::size_t f = 0; f < state.features.size(); ++f) {
    double x = state.features[f];
    if (x == 0.0) continue;
    double* row = &grad.weights[f * V];
    for (std::size_t v = 0; v < V; ++v) row[v] += x * coeff[v];
  }
}

inline PolicyParams grad_log_prob(const PolicyParams& params, const State& state, TokenId action) {
  if (action >= params.shape.vocab) throw ConfigError("action outside the vocabulary");
  PolicyParams g(params.shape);
  accumulate_grad_log_prob(params, state, action, 1.0, g);
  return g;
}

}  // namespace soundmind
