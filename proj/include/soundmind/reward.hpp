#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "soundmind/answer.hpp"
#include "soundmind/error.hpp"

namespace soundmind {

using TokenId = std::size_t;

/// Which response streams a task asks for; selects the active reward terms.
enum class OutputModality { text_out, audio_out, both };

inline std::string_view to_string(OutputModality m) {
  switch (m) {
    case OutputModality::text_out: return "text_out";
    case OutputModality::audio_out: return "audio_out";
    case OutputModality::both: return "both";
  }
  return "text_out";
}

inline std::optional<OutputModality> parse_modality(std::string_view s) {
  if (s == "text_out" || s == "text") return OutputModality::text_out;
  if (s == "audio_out" || s == "audio") return OutputModality::audio_out;
  if (s == "both") return OutputModality::both;
  return std::nullopt;
}

inline bool uses_text(OutputModality m) { return m != OutputModality::audio_out; }
inline bool uses_audio(OutputModality m) { return m != OutputModality::text_out; }

/// Reward and update hyperparameters. Defaults are the reported reward
/// weights; beta and epsilon are the standard clipped-PG values.
struct RewardWeights {
  double lambda1 = 1.0;   // text format
  double lambda2 = 0.5;   // audio format
  double lambda3 = 2.0;   // answer correctness
  double lambda4 = 1.0;   // text length
  double lambda5 = 0.75;  // audio length
  double beta = 0.01;
  double epsilon = 0.2;
  std::size_t answer_window = 30;

  void validate() const {
    for (double v : {lambda1, lambda2, lambda3, lambda4, lambda5, beta}) {
      if (!std::isfinite(v) || v < 0.0) throw ConfigError("reward weights must be finite and non-negative");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
    if (answer_window < kAnswerMarker.size()) {
      throw ConfigError("answer_window must be at least the length of \"Answer:\"");
    }
  }

  RewardWeights scaled(double c) const {
    RewardWeights w = *this;
    w.lambda1 *= c;
    w.lambda2 *= c;
    w.lambda3 *= c;
    w.lambda4 *= c;
    w.lambda5 *= c;
    return w;
  }

  double max_total(OutputModality m) const {
    double total = lambda3;
    if (uses_text(m)) total += lambda1 + lambda4;
    if (uses_audio(m)) total += lambda2 + lambda5;
    return total;
  }
};

/// A generated reply split into its text and audio token streams. The
/// renderings are derived from the tokens by the owning vocabulary.
struct BimodalResponse {
  std::vector<TokenId> text_tokens;
  std::vector<TokenId> audio_tokens;
  std::string text_rendering;
  std::string audio_transcript;
  std::optional<AnswerLabel> extracted_answer;
};

struct LengthAnnotation {
  std::size_t text_len = 1;
  std::size_t audio_len = 1;
};

inline double score_format_text(const BimodalResponse& resp, const RewardWeights& w) {
  return extract_answer(resp.text_rendering, w.answer_window) ? w.lambda1 : 0.0;
}

inline double score_format_audio(const BimodalResponse& resp, const RewardWeights& w) {
  return extract_answer(resp.audio_transcript, w.answer_window) ? w.lambda2 : 0.0;
}

inline double score_answer(std::optional<AnswerLabel> predicted, AnswerLabel truth, const RewardWeights& w) {
  return predicted && *predicted == truth ? w.lambda3 : 0.0;
}

namespace detail {
inline double length_ratio(std::size_t produced, std::size_t annotated) {
  if (annotated == 0) throw InvalidAnnotation("reference length annotation must be positive");
  if (produced >= annotated) return 1.0;
  return static_cast<double>(produced) / static_cast<double>(annotated);
}
}  // namespace detail

inline double score_length_text(std::size_t model_len, std::size_t annotation_len, const RewardWeights& w) {
  return w.lambda4 * detail::length_ratio(model_len, annotation_len);
}

inline double score_length_audio(std::size_t model_len, std::size_t annotation_len, const RewardWeights& w) {
  return w.lambda5 * detail::length_ratio(model_len, annotation_len);
}

/// Per-term reward. Inactive terms are absent rather than zero.
struct RewardBreakdown {
  std::optional<double> format_text;
  std::optional<double> format_audio;
  double answer = 0.0;
  std::optional<double> length_text;
  std::optional<double> length_audio;

  double total() const {
    return format_text.value_or(0.0) + format_audio.value_or(0.0) + answer + length_text.value_or(0.0) +
           length_audio.value_or(0.0);
  }
};

/// Answer graded for a modality. Under `both` the text stream wins and the
/// audio stream is consulted only when the text carries no answer.
inline std::optional<AnswerLabel> active_answer(const BimodalResponse& resp, const RewardWeights& w,
                                                OutputModality modality) {
  std::optional<AnswerLabel> text, audio;
  if (uses_text(modality)) text = extract_answer(resp.text_rendering, w.answer_window);
  if (uses_audio(modality)) audio = extract_answer(resp.audio_transcript, w.answer_window);
  return text ? text : audio;
}

inline RewardBreakdown reward_breakdown(const BimodalResponse& resp, AnswerLabel truth, const LengthAnnotation& ann,
                                        const RewardWeights& w, OutputModality modality) {
  RewardBreakdown out;
  if (uses_text(modality)) {
    out.format_text = score_format_text(resp, w);
    out.length_text = score_length_text(resp.text_tokens.size(), ann.text_len, w);
  }
  if (uses_audio(modality)) {
    out.format_audio = score_format_audio(resp, w);
    out.length_audio = score_length_audio(resp.audio_tokens.size(), ann.audio_len, w);
  }
  out.answer = score_answer(active_answer(resp, w, modality), truth, w);
  return out;
}

/// R(x, y): plain sum of the reward terms active for `modality`.
inline double composite_reward(const BimodalResponse& resp, AnswerLabel truth, const LengthAnnotation& ann,
                               const RewardWeights& w, OutputModality modality) {
  return reward_breakdown(resp, truth, ann, w, modality).total();
}

}  // namespace soundmind
