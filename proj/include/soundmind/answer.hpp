#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace soundmind {

enum class AnswerLabel { entailed, not_entailed };

inline constexpr std::string_view kAnswerMarker = "Answer:";

inline std::string_view to_string(AnswerLabel label) {
  return label == AnswerLabel::entailed ? "entailed" : "not-entailed";
}

/// Canonical spoken form used inside responses ("Answer: not entailed.").
inline std::string_view to_response_form(AnswerLabel label) {
  return label == AnswerLabel::entailed ? "entailed." : "not entailed.";
}

/// Parses a label, tolerating case, one trailing period, surrounding
/// whitespace and hyphen/space variants ("Not-Entailed." parses).
inline std::optional<AnswerLabel> parse_label(std::string_view text) {
  std::string norm;
  norm.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc) || c == '-' || c == '_') {
      pending_space = !norm.empty();
      continue;
    }
    if (pending_space) {
      norm.push_back(' ');
      pending_space = false;
    }
    norm.push_back(static_cast<char>(std::tolower(uc)));
  }
  if (!norm.empty() && norm.back() == '.') norm.pop_back();
  while (!norm.empty() && norm.back() == ' ') norm.pop_back();
  if (norm == "entailed") return AnswerLabel::entailed;
  if (norm == "not entailed") return AnswerLabel::not_entailed;
  return std::nullopt;
}

/// Label after the last "Answer:" marker, provided that marker starts within
/// the final `window` characters and everything after it is exactly one label.
inline std::optional<AnswerLabel> extract_answer(std::string_view rendering, std::size_t window) {
  auto pos = rendering.rfind(kAnswerMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  std::size_t tail_start = rendering.size() > window ? rendering.size() - window : 0;
  if (pos < tail_start) return std::nullopt;
  return parse_label(rendering.substr(pos + kAnswerMarker.size()));
}

}  // namespace soundmind
