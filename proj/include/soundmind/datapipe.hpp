#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unistd.h>
#include <vector>

#include "soundmind/answer.hpp"
#include "soundmind/error.hpp"
#include "soundmind/logic.hpp"
#include "soundmind/manifest.hpp"
#include "soundmind/parallel.hpp"

namespace soundmind {

struct PromptTemplates {
  std::string system =
      "Your task is to decide if the conclusion is \"entailed\" or \"not-entailed\" based on these premises. You are a "
      "wise person who answers two-choice questions, \"entailed\" or \"not entailed\". Use plain text for thought "
      "processes and answers, not markdown or LaTeX. The thought process and response style should be colloquial, "
      "which I can then translate directly into audio using the TTS model. The final output is the Answer, nothing "
      "else, and the format is Answer: YOUR ANSWER. For example: \"Answer: entailed.\" or \"Answer: not entailed.\" "
      "The final answer must contain nothing else! The thought process should be very complete, careful, and "
      "cautious. When you think and generate a chain of thought, you need to test your answer from various angles.";
  std::string before_major =
      "Let's figure out the logical connection between these premises and the conclusion. You have two choices: "
      "\"entailed\" means the conclusion must be true based on the given premises, or \"not-entailed\" means the "
      "conclusion can't be true based on the premises. Here's the setup:";
  std::string behind_conclusion =
      "Your task is to decide is the conclusion is \"entailed\" or \"not-entailed\" based on these premises.";

  void validate() const {
    if (system.empty() || before_major.empty() || behind_conclusion.empty()) {
      throw ConfigError("prompt templates must be non-empty");
    }
    if (system.find(kAnswerMarker) == std::string::npos) {
      throw ConfigError("system template must state the \"Answer:\" format");
    }
  }
};

/// Template file: three sections introduced by [system], [before_major] and
/// [behind_conclusion] header lines. Section bodies are trimmed.
inline PromptTemplates parse_templates(std::istream& in) {
  PromptTemplates t;
  std::array<std::string, 3> body;
  std::array<bool, 3> seen{};
  int current = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "[system]") current = 0;
    else if (line == "[before_major]") current = 1;
    else if (line == "[behind_conclusion]") current = 2;
    else if (current < 0) {
      if (line.find_first_not_of(" \t") != std::string::npos) {
        throw ConfigError("template line " + std::to_string(line_no) + " is outside any section");
      }
      continue;
    } else {
      auto& b = body[static_cast<std::size_t>(current)];
      if (!b.empty()) b.push_back('\n');
      b += line;
      continue;
    }
    seen[static_cast<std::size_t>(current)] = true;
  }
  auto trim = [](std::string s) {
    auto first = s.find_first_not_of(" \t\n");
    if (first == std::string::npos) return std::string();
    auto last = s.find_last_not_of(" \t\n");
    return s.substr(first, last - first + 1);
  };
  static constexpr std::array<const char*, 3> names = {"system", "before_major", "behind_conclusion"};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!seen[i]) throw ConfigError(std::string("template file has no [") + names[i] + "] section");
  }
  t.system = trim(body[0]);
  t.before_major = trim(body[1]);
  t.behind_conclusion = trim(body[2]);
  t.validate();
  return t;
}

inline PromptTemplates load_templates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open template file " + path);
  return parse_templates(in);
}

struct Triplet {
  std::string major;
  std::string minor;
  std::string conclusion;
};

inline constexpr std::string_view kMajorLead = "Major premise is: ";
inline constexpr std::string_view kMinorLead = "Minor premise is: ";
inline constexpr std::string_view kConclusionLead = "Conclusion is: ";

namespace detail {
inline std::string sentence(std::string_view s) {
  std::string out(s);
  if (!out.empty() && out.back() != '.' && out.back() != '?' && out.back() != '!') out.push_back('.');
  return out;
}
}  // namespace detail

/// before_major, the labelled triplet, behind_conclusion; space separated.
inline std::string colloquialize(const Triplet& tri, const PromptTemplates& templates) {
  if (tri.major.empty() || tri.minor.empty() || tri.conclusion.empty()) {
    throw ConfigError("triplet parts must be non-empty");
  }
  std::string out = templates.before_major;
  out += " ";
  out += kMajorLead;
  out += detail::sentence(tri.major);
  out += " ";
  out += kMinorLead;
  out += detail::sentence(tri.minor);
  out += " ";
  out += kConclusionLead;
  out += detail::sentence(tri.conclusion);
  out += " ";
  out += templates.behind_conclusion;
  return out;
}

/// Recovers the triplet from colloquialized user content; each part loses
/// its trailing period.
inline std::optional<Triplet> parse_triplet(std::string_view user_content) {
  auto maj = user_content.find(kMajorLead);
  if (maj == std::string_view::npos) return std::nullopt;
  auto min = user_content.find(kMinorLead, maj);
  if (min == std::string_view::npos) return std::nullopt;
  auto con = user_content.find(kConclusionLead, min);
  if (con == std::string_view::npos) return std::nullopt;
  auto part = [](std::string_view s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '.')) s.remove_suffix(1);
    return std::string(s);
  };
  Triplet t;
  t.major = part(user_content.substr(maj + kMajorLead.size(), min - maj - kMajorLead.size()));
  t.minor = part(user_content.substr(min + kMinorLead.size(), con - min - kMinorLead.size()));
  auto rest = user_content.substr(con + kConclusionLead.size());
  auto stop = rest.find(". ");
  t.conclusion = part(stop == std::string_view::npos ? rest : rest.substr(0, stop));
  if (t.major.empty() || t.minor.empty() || t.conclusion.empty()) return std::nullopt;
  return t;
}

inline Triplet to_triplet(const LogicTask& t) {
  return {t.major_premise.to_string(), t.minor_premise.to_string(), t.conclusion.to_string()};
}

/// Reconstructs the logic task behind colloquialized user content, labelled
/// by the truth-table oracle.
inline std::optional<LogicTask> logic_task_from_content(std::string_view user_content) {
  auto tri = parse_triplet(user_content);
  if (!tri) return std::nullopt;
  try {
    LogicTask t;
    t.major_premise = parse_formula(tri->major);
    t.minor_premise = parse_formula(tri->minor);
    t.conclusion = parse_formula(tri->conclusion);
    t.n_atoms = std::max({t.major_premise.atom_span(), t.minor_premise.atom_span(), t.conclusion.atom_span(), 1});
    t.label = truth_table_entailment(t.major_premise, t.minor_premise, t.conclusion);
    return t;
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline std::size_t whitespace_tokens(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

struct Reasoning {
  std::string cot_text;
  std::optional<AnswerLabel> answer;
};

/// Produces chain-of-thought text ending in "Answer: ..." for user content.
class ReasoningGenerator {
public:
  virtual ~ReasoningGenerator() = default;
  virtual std::string generate(const std::string& user_content) = 0;
};

struct SpeechClip {
  std::string handle;
  double duration_s = 0.0;
};

class SpeechSynthesizer {
public:
  virtual ~SpeechSynthesizer() = default;
  virtual SpeechClip synthesize(const std::string& text) = 0;
};

namespace detail {
inline std::string describe_assignment(std::uint32_t a, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += i + 1 == n ? " and " : ", ";
    out += static_cast<char>('A' + i);
    out += (a >> i) & 1U ? " is true" : " is false";
  }
  return out;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace detail

/// Deterministic stand-in for the reasoning model. It reads the triplet back
/// out of the user content and answers with the truth-table oracle.
class OracleReasoningGenerator : public ReasoningGenerator {
public:
  std::string generate(const std::string& user_content) override {
    auto task = logic_task_from_content(user_content);
    if (!task) throw Error("user content does not contain a parseable logic triplet");
    std::string cot = "Okay, let's think this through step by step. The major premise says " +
                      task->major_premise.to_string() + ". The minor premise says " + task->minor_premise.to_string() +
                      ". The conclusion says " + task->conclusion.to_string() +
                      ". Let me check every situation where both premises hold. ";
    if (task->label == AnswerLabel::entailed) {
      cot += "In every one of those situations the conclusion holds as well, so it has to be true. ";
    } else {
      for (std::uint32_t a = 0; a < (1U << task->n_atoms); ++a) {
        if (task->major_premise.evaluate(a) && task->minor_premise.evaluate(a) && !task->conclusion.evaluate(a)) {
          cot += "When " + detail::describe_assignment(a, task->n_atoms) +
                 ", both premises hold but the conclusion fails, so it does not have to be true. ";
          break;
        }
      }
    }
    cot += std::string(kAnswerMarker) + " " + std::string(to_response_form(task->label));
    return cot;
  }
};

/// Deterministic stand-in for the speech synthesizer: fixed seconds per
/// whitespace word and a content-hash handle.
class MockSpeechSynthesizer : public SpeechSynthesizer {
public:
  explicit MockSpeechSynthesizer(double seconds_per_word = 0.4) : seconds_per_word_(seconds_per_word) {
    if (!(seconds_per_word > 0.0)) throw ConfigError("seconds_per_word must be positive");
  }

  SpeechClip synthesize(const std::string& text) override {
    std::ostringstream handle;
    handle << "mock-tts://" << std::hex << std::setw(16) << std::setfill('0') << detail::fnv1a(text);
    return {handle.str(), static_cast<double>(whitespace_tokens(text)) * seconds_per_word_};
  }

private:
  double seconds_per_word_;
};

namespace detail {

/// Runs `command` through the shell with `input` on standard input and
/// returns standard output. Nonzero exit status is an error.
inline std::string run_filter(const std::string& command, const std::string& input) {
  char path[] = "/tmp/soundmind-XXXXXX";
  int fd = ::mkstemp(path);
  if (fd < 0) throw Error("cannot create a temporary file for the external provider");
  {
    std::ofstream tmp(path, std::ios::binary);
    tmp << input;
  }
  ::close(fd);
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(::popen(("( " + command + " ) < '" + path + "'").c_str(), "r"), ::pclose);
  if (!pipe) {
    std::remove(path);
    throw Error("cannot start external provider: " + command);
  }
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) out.append(buf.data(), got);
  int status = ::pclose(pipe.release());
  std::remove(path);
  if (status != 0) throw Error("external provider exited with status " + std::to_string(status) + ": " + command);
  return out;
}

}  // namespace detail

/// Text on standard input, chain-of-thought on standard output.
class ExternalCommandGenerator : public ReasoningGenerator {
public:
  explicit ExternalCommandGenerator(std::string command) : command_(std::move(command)) {}
  std::string generate(const std::string& user_content) override {
    auto out = detail::run_filter(command_, user_content);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
  }

private:
  std::string command_;
};

/// Text on standard input; "<duration seconds> <audio path>" on standard output.
class ExternalCommandSynthesizer : public SpeechSynthesizer {
public:
  explicit ExternalCommandSynthesizer(std::string command) : command_(std::move(command)) {}
  SpeechClip synthesize(const std::string& text) override {
    std::istringstream in(detail::run_filter(command_, text));
    SpeechClip clip;
    if (!(in >> clip.duration_s >> clip.handle) || !(clip.duration_s >= 0.0)) {
      throw Error("external synthesizer output must be '<duration> <path>'");
    }
    return clip;
  }

private:
  std::string command_;
};

/// A provider failure, tagged with the sample and the pipeline stage.
class PipelineError : public Error {
public:
  PipelineError(std::string sample_id, std::string stage, const std::string& what)
      : Error("sample " + sample_id + ", stage " + stage + ": " + what),
        sample_id(std::move(sample_id)),
        stage(std::move(stage)) {}
  std::string sample_id;
  std::string stage;
};

struct BuildOptions {
  std::size_t answer_window = 30;
  bool require_label_match = true;  // the generator must agree with the supplied label
};

/// colloquialize -> reasoning -> speech for both user content and reasoning.
inline SampleRecord build_sample(const std::string& id, const Triplet& triplet, AnswerLabel label,
                                 ReasoningGenerator& gen, SpeechSynthesizer& tts, const PromptTemplates& templates,
                                 const BuildOptions& opts = {}) {
  SampleRecord rec;
  rec.id = id;
  try {
    rec.user_content_text = colloquialize(triplet, templates);
  } catch (const std::exception& e) {
    throw PipelineError(id, "colloquialize", e.what());
  }
  try {
    rec.cot_text = gen.generate(rec.user_content_text);
  } catch (const std::exception& e) {
    throw PipelineError(id, "generate", e.what());
  }
  auto answer = extract_answer(rec.cot_text, opts.answer_window);
  if (!answer) throw PipelineError(id, "generate", "reasoning does not end with an \"Answer:\" marker");
  if (opts.require_label_match && *answer != label) {
    throw PipelineError(id, "generate", "generated answer disagrees with the task label");
  }
  rec.answer = *answer;
  try {
    auto in_clip = tts.synthesize(rec.user_content_text);
    auto out_clip = tts.synthesize(rec.cot_text);
    rec.input_audio_ref = in_clip.handle;
    rec.input_duration_s = in_clip.duration_s;
    rec.output_audio_ref = out_clip.handle;
    rec.output_duration_s = out_clip.duration_s;
  } catch (const std::exception& e) {
    throw PipelineError(id, "tts", e.what());
  }
  rec.input_tokens = whitespace_tokens(rec.user_content_text);
  rec.output_tokens = whitespace_tokens(rec.cot_text);
  return rec;
}

struct SplitFractions {
  double train = 0.804;
  double test = 0.102;
  double validation = 0.094;

  void validate() const {
    for (double f : {train, test, validation}) {
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in [0, 1]");
    }
    if (std::abs(train + test + validation - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  }
};

namespace detail {
/// Integer counts summing to `total`, proportional to `weights`; leftover
/// units go to the largest remainders, ties to the lower index.
inline std::array<std::size_t, 3> largest_remainder(const std::array<double, 3>& weights, std::size_t total) {
  double wsum = weights[0] + weights[1] + weights[2];
  std::array<std::size_t, 3> out{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    double exact = wsum > 0.0 ? weights[i] / wsum * static_cast<double>(total) : 0.0;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - std::floor(exact);
    assigned += out[i];
  }
  while (assigned < total) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (rem[i] > rem[best]) best = i;
    }
    ++out[best];
    rem[best] = -1.0;
    ++assigned;
  }
  return out;
}
}  // namespace detail

/// Seeded, label-stratified split assignment. Split sizes are the
/// largest-remainder rounding of fractions * n; within each split the
/// entailed share follows the corpus share.
template <typename Rng>
std::vector<SampleRecord> assign_splits(std::vector<SampleRecord> records, const SplitFractions& fractions, Rng& rng) {
  fractions.validate();
  const std::size_t n = records.size();
  auto sizes = detail::largest_remainder({fractions.train, fractions.test, fractions.validation}, n);

  std::vector<std::size_t> entailed, not_entailed;
  for (std::size_t i = 0; i < n; ++i) {
    (records[i].answer == AnswerLabel::entailed ? entailed : not_entailed).push_back(i);
  }
  std::shuffle(entailed.begin(), entailed.end(), rng);
  std::shuffle(not_entailed.begin(), not_entailed.end(), rng);

  std::array<std::size_t, 3> ent_counts{};
  if (n > 0) {
    std::array<double, 3> w{};
    for (std::size_t s = 0; s < 3; ++s) w[s] = static_cast<double>(sizes[s]);
    ent_counts = detail::largest_remainder(w, entailed.size());
    for (std::size_t s = 0; s < 3; ++s) ent_counts[s] = std::min(ent_counts[s], sizes[s]);
  }
  static constexpr std::array<Split, 3> order = {Split::train, Split::test, Split::validation};
  std::size_t e = 0, ne = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t c = 0; c < ent_counts[s]; ++c) records[entailed[e++]].split = order[s];
    for (std::size_t c = 0; c < sizes[s] - ent_counts[s]; ++c) records[not_entailed[ne++]].split = order[s];
  }
  return records;
}

struct CorpusConfig {
  PromptTemplates templates;
  BuildOptions build;
  SplitFractions fractions;
  std::string id_prefix = "alr-";
  std::size_t threads = 1;
};

/// Builds one record per task (stages run per sample, possibly in parallel)
/// and assigns splits. Record order follows task order.
template <typename Rng>
std::vector<SampleRecord> build_corpus(std::span<const LogicTask> tasks, ReasoningGenerator& gen,
                                       SpeechSynthesizer& tts, const CorpusConfig& cfg, Rng& rng) {
  cfg.templates.validate();
  std::vector<SampleRecord> records(tasks.size());
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
    std::ostringstream id;
    id << cfg.id_prefix << std::setw(6) << std::setfill('0') << i;
    records[i] = build_sample(id.str(), to_triplet(tasks[i]), tasks[i].label, gen, tts, cfg.templates, cfg.build);
  });
  return assign_splits(std::move(records), cfg.fractions, rng);
}

}  // namespace soundmind
