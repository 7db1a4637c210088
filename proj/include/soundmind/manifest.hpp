#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "soundmind/answer.hpp"
#include "soundmind/error.hpp"

namespace soundmind {

enum class Split { train, test, validation };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::validation: return "validation";
  }
  return "train";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  if (s == "validation") return Split::validation;
  return std::nullopt;
}

/// One dataset entry: user content, reasoning, answer and the audio side.
struct SampleRecord {
  std::string id;
  std::string user_content_text;
  std::string cot_text;
  AnswerLabel answer = AnswerLabel::entailed;
  std::string input_audio_ref;
  std::string output_audio_ref;
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
  double input_duration_s = 0.0;
  double output_duration_s = 0.0;
  Split split = Split::train;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Schema violation or I/O failure; `line` is 1-based, 0 when not applicable.
class ManifestError : public Error {
public:
  ManifestError(std::size_t line, const std::string& what)
      : Error(line ? "manifest line " + std::to_string(line) + ": " + what : what), line(line) {}
  std::size_t line;
};

inline nlohmann::ordered_json to_json(const SampleRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["user_content"] = r.user_content_text;
  j["cot"] = r.cot_text;
  j["answer"] = to_string(r.answer);
  j["input_audio"] = r.input_audio_ref;
  j["output_audio"] = r.output_audio_ref;
  j["input_tokens"] = r.input_tokens;
  j["output_tokens"] = r.output_tokens;
  j["input_duration_s"] = r.input_duration_s;
  j["output_duration_s"] = r.output_duration_s;
  j["split"] = to_string(r.split);
  return j;
}

namespace detail {

template <typename T>
T require_field(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw ManifestError(line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ManifestError(line, std::string("field '") + key + "' has the wrong type");
  }
}

inline std::size_t require_count(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw ManifestError(line, std::string("missing field '") + key + "'");
  if (!it->is_number_unsigned()) {
    throw ManifestError(line, std::string("field '") + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

inline double require_duration(const nlohmann::json& j, const char* key, std::size_t line) {
  auto v = require_field<double>(j, key, line);
  if (!std::isfinite(v) || v < 0.0) throw ManifestError(line, std::string("field '") + key + "' must be >= 0");
  return v;
}

}  // namespace detail

inline SampleRecord record_from_json(const nlohmann::json& j, std::size_t line = 0) {
  if (!j.is_object()) throw ManifestError(line, "record is not an object");
  SampleRecord r;
  r.id = detail::require_field<std::string>(j, "id", line);
  if (r.id.empty()) throw ManifestError(line, "empty id");
  r.user_content_text = detail::require_field<std::string>(j, "user_content", line);
  r.cot_text = detail::require_field<std::string>(j, "cot", line);
  auto ans = parse_label(detail::require_field<std::string>(j, "answer", line));
  if (!ans) throw ManifestError(line, "answer is not entailed/not-entailed");
  r.answer = *ans;
  r.input_audio_ref = detail::require_field<std::string>(j, "input_audio", line);
  r.output_audio_ref = detail::require_field<std::string>(j, "output_audio", line);
  r.input_tokens = detail::require_count(j, "input_tokens", line);
  r.output_tokens = detail::require_count(j, "output_tokens", line);
  r.input_duration_s = detail::require_duration(j, "input_duration_s", line);
  r.output_duration_s = detail::require_duration(j, "output_duration_s", line);
  auto split = parse_split(detail::require_field<std::string>(j, "split", line));
  if (!split) throw ManifestError(line, "split must be train, test or validation");
  r.split = *split;
  return r;
}

/// JSON Lines, one record per line, UTF-8.
inline void write_manifest(std::ostream& out, const std::vector<SampleRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<SampleRecord> read_manifest(std::istream& in) {
  std::vector<SampleRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ManifestError(line_no, std::string("invalid JSON (") + e.what() + ")");
    }
    auto rec = record_from_json(j, line_no);
    if (!ids.insert(rec.id).second) throw ManifestError(line_no, "duplicate id '" + rec.id + "'");
    out.push_back(std::move(rec));
  }
  return out;
}

inline void write_manifest_file(const std::string& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError(0, "cannot open " + path + " for writing");
  write_manifest(out, records);
  if (!out) throw ManifestError(0, "write failed: " + path);
}

inline std::vector<SampleRecord> read_manifest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError(0, "cannot open manifest " + path);
  return read_manifest(in);
}

}  // namespace soundmind
