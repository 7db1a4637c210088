#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "soundmind/error.hpp"
#include "soundmind/policy.hpp"

namespace soundmind {

/// One sampled response with the log-probabilities recorded at sampling time.
struct Trajectory {
  std::uint64_t task_id = 0;
  std::vector<State> states;
  std::vector<TokenId> actions;
  std::vector<double> logp_old;  // behavior policy
  std::vector<double> logp_ref;  // frozen reference policy
  double terminal_reward = 0.0;

  std::size_t length() const { return actions.size(); }

  void validate() const {
    std::size_t T = actions.size();
    if (T == 0) throw ConfigError("trajectory is empty");
    if (states.size() != T || logp_old.size() != T || logp_ref.size() != T) {
      throw ConfigError("trajectory sequences have different lengths");
    }
  }
};

struct AdvantageStats {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t count = 0;
};

struct UpdateConfig {
  double learning_rate = 0.5;
  double beta = 0.01;
  double epsilon = 0.2;
  std::size_t batch_size = 256;
  std::size_t epochs = 4;
  double sigma_floor = 1e-8;
  bool normalize_advantages = true;  // off only for estimator checks

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be non-negative");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (epochs == 0) throw ConfigError("epochs must be at least 1");
    if (!(sigma_floor > 0.0)) throw ConfigError("sigma_floor must be positive");
  }
};

/// Single-sample KL estimate log(pi_theta / pi_ref) at the taken action.
inline double token_kl(double logp_cur, double logp_ref) { return logp_cur - logp_ref; }

inline double importance_ratio(double logp_cur, double logp_old) { return std::exp(logp_cur - logp_old); }

/// min(r * A, clip(r, 1 - eps, 1 + eps) * A)
inline double clipped_token_objective(double ratio, double adv, double epsilon) {
  double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * adv, clipped * adv);
}

/// True when the min selects the clipped branch strictly, i.e. the token's
/// objective is locally constant in theta.
inline bool clip_active(double ratio, double adv, double epsilon) {
  double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return clipped * adv < ratio * adv;
}

/// A_t = R - beta * sum_{i >= t} KL(i), one backward pass.
inline std::vector<double> raw_advantages(const Trajectory& traj, std::span<const double> logp_cur, double beta) {
  if (logp_cur.size() != traj.length() || traj.logp_ref.size() != traj.length()) {
    throw ConfigError("advantage inputs have different lengths");
  }
  std::vector<double> adv(traj.length());
  double suffix = 0.0;
  for (std::size_t t = traj.length(); t-- > 0;) {
    suffix += token_kl(logp_cur[t], traj.logp_ref[t]);
    adv[t] = traj.terminal_reward - beta * suffix;
  }
  return adv;
}

/// Subtracts the batch mean and divides by max(population std, sigma_floor).
inline AdvantageStats normalize_advantages(std::span<double> values, double sigma_floor) {
  if (values.empty()) throw ConfigError("cannot normalize an empty batch");
  AdvantageStats st;
  st.count = values.size();
  // Shifted by the first value so an all-equal batch has an exact mean.
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  st.mu = shift + sum / static_cast<double>(st.count);
  double ss = 0.0;
  for (double v : values) ss += (v - st.mu) * (v - st.mu);
  st.sigma = std::sqrt(ss / static_cast<double>(st.count));
  double denom = std::max(st.sigma, sigma_floor);
  for (double& v : values) v = (v - st.mu) / denom;
  return st;
}

inline std::vector<double> normalized_advantages(std::vector<double> values, double sigma_floor,
                                                 AdvantageStats* stats = nullptr) {
  auto st = normalize_advantages(values, sigma_floor);
  if (stats) *stats = st;
  return values;
}

/// Current-policy log-probabilities of every taken action.
inline std::vector<double> current_log_probs(const PolicyParams& params, const Trajectory& traj) {
  std::vector<double> out(traj.length());
  for (std::size_t t = 0; t < traj.length(); ++t) out[t] = log_prob(params, traj.states[t], traj.actions[t]);
  return out;
}

/// Sum over the trajectory's tokens of the gradient of the clipped token
/// objective. Tokens whose min picks the clipped branch contribute nothing.
/// Returns the number of such tokens.
inline std::size_t accumulate_surrogate_gradient(const PolicyParams& params, const Trajectory& traj,
                                                 std::span<const double> logp_cur, std::span<const double> advantages,
                                                 double epsilon, PolicyParams& grad) {
  std::size_t clipped = 0;
  for (std::size_t t = 0; t < traj.length(); ++t) {
    double r = importance_ratio(logp_cur[t], traj.logp_old[t]);
    if (clip_active(r, advantages[t], epsilon)) {
      ++clipped;
      continue;
    }
    // d(r A)/dtheta = A r dlog pi/dtheta
    accumulate_grad_log_prob(params, traj.states[t], traj.actions[t], advantages[t] * r, grad);
  }
  return clipped;
}

class NonFiniteGradient : public Error {
public:
  NonFiniteGradient(std::size_t index, std::uint64_t task_id)
      : Error("non-finite gradient from trajectory " + std::to_string(index) + " (task " + std::to_string(task_id) +
              ")"),
        trajectory_index(index),
        task_id(task_id) {}

  std::size_t trajectory_index;
  std::uint64_t task_id;
};

struct UpdateDiagnostics {
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double objective = 0.0;  // mean clipped token objective before the first step
  AdvantageStats advantage;
  double grad_norm = 0.0;  // first epoch
  PolicyParams gradient;   // first epoch, ascent direction before the learning rate
};

struct UpdateResult {
  PolicyParams params;
  UpdateDiagnostics diagnostics;
};

/// One REINFORCE++ update: per epoch, recompute current log-probs, form
/// KL-penalized advantages, normalize them over every token in the batch and
/// take one gradient-ascent step on the mean clipped token objective.
inline UpdateResult update_step(const PolicyParams& params, std::span<const Trajectory> batch, const FrozenPolicy& ref,
                                const UpdateConfig& cfg) {
  cfg.validate();
  if (batch.empty()) throw ConfigError("update batch is empty");
  // Reference log-probs were recorded per token at sampling time.
  if (ref && !(ref->shape == params.shape)) throw ConfigError("reference policy shape mismatch");
  std::size_t n_tokens = 0;
  double reward_sum = 0.0;
  for (const auto& tr : batch) {
    tr.validate();
    n_tokens += tr.length();
    reward_sum += tr.terminal_reward;
  }

  UpdateResult out{params, {}};
  auto& diag = out.diagnostics;
  diag.mean_reward = reward_sum / static_cast<double>(batch.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const PolicyParams& cur = out.params;
    std::vector<std::vector<double>> logp(batch.size());
    std::vector<double> flat;
    flat.reserve(n_tokens);
    double kl_sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      logp[i] = current_log_probs(cur, batch[i]);
      for (std::size_t t = 0; t < batch[i].length(); ++t) kl_sum += token_kl(logp[i][t], batch[i].logp_ref[t]);
      auto a = raw_advantages(batch[i], logp[i], cfg.beta);
      flat.insert(flat.end(), a.begin(), a.end());
    }
    AdvantageStats stats;
    if (cfg.normalize_advantages) {
      stats = normalize_advantages(flat, cfg.sigma_floor);
    } else {
      stats.count = flat.size();
    }

    PolicyParams grad(cur.shape);
    PolicyParams traj_grad(cur.shape);
    std::size_t clipped = 0;
    double objective = 0.0;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::span<const double> adv(flat.data() + offset, batch[i].length());
      offset += batch[i].length();
      std::fill(traj_grad.weights.begin(), traj_grad.weights.end(), 0.0);
      std::fill(traj_grad.bias.begin(), traj_grad.bias.end(), 0.0);
      clipped += accumulate_surrogate_gradient(cur, batch[i], logp[i], adv, cfg.epsilon, traj_grad);
      if (!traj_grad.all_finite()) throw NonFiniteGradient(i, batch[i].task_id);
      grad.add_scaled(traj_grad, 1.0);
      for (std::size_t t = 0; t < batch[i].length(); ++t) {
        objective += clipped_token_objective(importance_ratio(logp[i][t], batch[i].logp_old[t]), adv[t], cfg.epsilon);
      }
    }
    grad.scale(1.0 / static_cast<double>(n_tokens));

    if (epoch == 0) {
      diag.mean_kl = kl_sum / static_cast<double>(n_tokens);
      diag.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n_tokens);
      diag.objective = objective / static_cast<double>(n_tokens);
      diag.advantage = stats;
      diag.grad_norm = grad.norm();
      diag.gradient = grad;
    }
    out.params.add_scaled(grad, cfg.learning_rate);
  }
  return out;
}

}  // namespace soundmind
