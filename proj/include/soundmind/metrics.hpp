#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "soundmind/answer.hpp"
#include "soundmind/error.hpp"
#include "soundmind/manifest.hpp"

namespace soundmind {

/// Fraction of positions where the prediction is present and equals the
/// truth. Absent predictions are errors.
inline double accuracy(std::span<const std::optional<AnswerLabel>> predictions, std::span<const AnswerLabel> truths) {
  if (predictions.empty()) throw ConfigError("accuracy of an empty set is undefined");
  if (predictions.size() != truths.size()) throw ConfigError("predictions and truths differ in length");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] && *predictions[i] == truths[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

/// Lowercases, drops punctuation (apostrophes and hyphens join words) and
/// splits on whitespace.
inline std::vector<std::string> normalize_words(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || uc >= 0x80) {
      clean.push_back(static_cast<char>(std::tolower(uc)));
    } else if (std::isspace(uc)) {
      clean.push_back(' ');
    } else if (c == '-' || c == '\'') {
      continue;
    } else {
      clean.push_back(' ');
    }
  }
  std::vector<std::string> words;
  std::istringstream in(clean);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

/// Unit-cost Levenshtein distance, two-row dynamic program.
template <typename T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline double word_error_rate(std::span<const std::string> hypothesis, std::span<const std::string> reference) {
  if (reference.empty()) throw ConfigError("WER needs a non-empty reference");
  return static_cast<double>(edit_distance(hypothesis, reference)) / static_cast<double>(reference.size());
}

inline double word_error_rate(std::string_view hypothesis, std::string_view reference) {
  auto h = normalize_words(hypothesis);
  auto r = normalize_words(reference);
  return word_error_rate(std::span<const std::string>(h), std::span<const std::string>(r));
}

struct ClassCounts {
  std::size_t total = 0;
  std::size_t correct = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  std::optional<double> wer;
  std::size_t n_samples = 0;
  ClassCounts entailed;
  ClassCounts not_entailed;
};

inline EvalReport make_report(std::span<const std::optional<AnswerLabel>> predictions,
                              std::span<const AnswerLabel> truths, std::optional<double> wer = std::nullopt) {
  EvalReport rep;
  rep.accuracy = accuracy(predictions, truths);
  rep.wer = wer;
  rep.n_samples = truths.size();
  for (std::size_t i = 0; i < truths.size(); ++i) {
    auto& c = truths[i] == AnswerLabel::entailed ? rep.entailed : rep.not_entailed;
    ++c.total;
    if (predictions[i] && *predictions[i] == truths[i]) ++c.correct;
  }
  return rep;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  if (r.wer) j["wer"] = *r.wer;
  j["n_samples"] = r.n_samples;
  j["entailed"] = {{"total", r.entailed.total}, {"correct", r.entailed.correct}};
  j["not_entailed"] = {{"total", r.not_entailed.total}, {"correct", r.not_entailed.correct}};
  return j;
}

struct SplitStats {
  std::size_t entailed = 0;
  std::size_t not_entailed = 0;
  double avg_input_tokens = 0.0;
  double avg_output_tokens = 0.0;
  double avg_input_duration_s = 0.0;
  double avg_output_duration_s = 0.0;

  std::size_t count() const { return entailed + not_entailed; }
  double entailed_fraction() const {
    return count() ? static_cast<double>(entailed) / static_cast<double>(count()) : 0.0;
  }
};

/// Indexed by Split. Averages are left at zero for empty splits.
struct DatasetStats {
  std::array<SplitStats, 3> splits{};

  const SplitStats& operator[](Split s) const { return splits[static_cast<std::size_t>(s)]; }
  std::size_t total() const { return splits[0].count() + splits[1].count() + splits[2].count(); }
};

/// Records that fail validation are reported together by index.
inline DatasetStats dataset_stats(std::span<const SampleRecord> records) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    bool ok = !r.id.empty() && std::isfinite(r.input_duration_s) && r.input_duration_s >= 0.0 &&
              std::isfinite(r.output_duration_s) && r.output_duration_s >= 0.0;
    if (!ok) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::string msg = "malformed records at indices";
    for (auto i : bad) msg += " " + std::to_string(i);
    throw ManifestError(0, msg);
  }

  DatasetStats st;
  std::array<std::array<double, 4>, 3> sums{};
  for (const auto& r : records) {
    auto s = static_cast<std::size_t>(r.split);
    (r.answer == AnswerLabel::entailed ? st.splits[s].entailed : st.splits[s].not_entailed)++;
    sums[s][0] += static_cast<double>(r.input_tokens);
    sums[s][1] += static_cast<double>(r.output_tokens);
    sums[s][2] += r.input_duration_s;
    sums[s][3] += r.output_duration_s;
  }
  for (std::size_t s = 0; s < 3; ++s) {
    auto n = static_cast<double>(st.splits[s].count());
    if (n == 0) continue;
    st.splits[s].avg_input_tokens = sums[s][0] / n;
    st.splits[s].avg_output_tokens = sums[s][1] / n;
    st.splits[s].avg_input_duration_s = sums[s][2] / n;
    st.splits[s].avg_output_duration_s = sums[s][3] / n;
  }
  return st;
}

inline nlohmann::ordered_json to_json(const DatasetStats& st) {
  nlohmann::ordered_json j;
  for (Split s : {Split::train, Split::test, Split::validation}) {
    const auto& x = st[s];
    j[std::string(to_string(s))] = {{"entailed", x.entailed},
                                    {"not_entailed", x.not_entailed},
                                    {"entailed_fraction", x.entailed_fraction()},
                                    {"avg_input_tokens", x.avg_input_tokens},
                                    {"avg_output_tokens", x.avg_output_tokens},
                                    {"avg_input_duration_s", x.avg_input_duration_s},
                                    {"avg_output_duration_s", x.avg_output_duration_s}};
  }
  j["total"] = st.total();
  return j;
}

}  // namespace soundmind
