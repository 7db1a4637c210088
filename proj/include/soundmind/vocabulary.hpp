#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soundmind/answer.hpp"
#include "soundmind/error.hpp"
#include "soundmind/reward.hpp"

namespace soundmind {

enum class Modality : std::uint8_t { text, audio };

struct TokenInfo {
  Modality modality = Modality::text;
  std::string fragment;  // text the token contributes to its stream's rendering
};

/// Dense token table shared by prompts and the policy's action space. Every
/// word exists once per modality; end-of-sequence is a control token whose
/// fragment is empty and which never enters a response stream.
class Vocabulary {
public:
  Vocabulary() = default;

  /// Builds a vocabulary with one text and one audio token per word, the
  /// answer marker, both labels, and end-of-sequence.
  static Vocabulary bimodal(std::span<const std::string> words) {
    Vocabulary v;
    for (Modality m : {Modality::text, Modality::audio}) {
      for (const auto& w : words) v.add(m, w);
      v.add(m, std::string(kAnswerMarker));
      v.add(m, std::string(to_response_form(AnswerLabel::entailed)));
      v.add(m, std::string(to_response_form(AnswerLabel::not_entailed)));
    }
    v.eos_ = v.add(Modality::text, "");
    return v;
  }

  /// Word list used by the logic-task environment; prompts and reasoning
  /// share it.
  static Vocabulary desk() {
    static const std::vector<std::string> words = {"A", "B", "C", "D", "not", "and", "or", "if", "then", "so", "true"};
    return bimodal(words);
  }

  /// Text-only vocabulary with an explicit token list followed by
  /// end-of-sequence. Used for small enumerable environments.
  static Vocabulary text_only(std::span<const std::string> fragments) {
    Vocabulary v;
    for (const auto& f : fragments) v.add(Modality::text, f);
    v.eos_ = v.add(Modality::text, "");
    return v;
  }

  std::size_t size() const { return tokens_.size(); }
  TokenId eos() const { return eos_; }
  const TokenInfo& info(TokenId id) const { return tokens_.at(id); }
  bool is_eos(TokenId id) const { return id == eos_; }

  std::optional<TokenId> find(Modality m, std::string_view fragment) const {
    for (TokenId id = 0; id < tokens_.size(); ++id) {
      if (id != eos_ && tokens_[id].modality == m && tokens_[id].fragment == fragment) return id;
    }
    return std::nullopt;
  }

  TokenId require(Modality m, std::string_view fragment) const {
    auto id = find(m, fragment);
    if (!id) throw ConfigError("vocabulary has no token '" + std::string(fragment) + "'");
    return *id;
  }

  /// Space-joined fragments; a pure function of the token sequence.
  std::string render(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
      const auto& f = info(id).fragment;
      if (f.empty()) continue;
      if (!out.empty()) out.push_back(' ');
      out += f;
    }
    return out;
  }

  /// Splits generated tokens into the two response streams and renders them.
  BimodalResponse make_response(std::span<const TokenId> generated, std::size_t answer_window) const {
    BimodalResponse r;
    for (TokenId id : generated) {
      if (is_eos(id)) continue;
      (info(id).modality == Modality::text ? r.text_tokens : r.audio_tokens).push_back(id);
    }
    r.text_rendering = render(r.text_tokens);
    r.audio_transcript = render(r.audio_tokens);
    r.extracted_answer = extract_answer(r.text_rendering, answer_window);
    if (!r.extracted_answer) r.extracted_answer = extract_answer(r.audio_transcript, answer_window);
    return r;
  }

  /// FNV-1a over modality tags and fragments; recorded in checkpoints.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](unsigned char c) {
      h ^= c;
      h *= 1099511628211ULL;
    };
    for (TokenId id = 0; id < tokens_.size(); ++id) {
      mix(static_cast<unsigned char>(tokens_[id].modality));
      mix(id == eos_ ? 1 : 0);
      for (char c : tokens_[id].fragment) mix(static_cast<unsigned char>(c));
      mix(0xff);
    }
    return h;
  }

private:
  TokenId add(Modality m, std::string fragment) {
    tokens_.push_back({m, std::move(fragment)});
    return tokens_.size() - 1;
  }

  std::vector<TokenInfo> tokens_;
  TokenId eos_ = 0;
};

}  // namespace soundmind
