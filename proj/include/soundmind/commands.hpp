#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "soundmind/checkpoint.hpp"
#include "soundmind/datapipe.hpp"
#include "soundmind/env.hpp"
#include "soundmind/manifest.hpp"
#include "soundmind/metrics.hpp"
#include "soundmind/train.hpp"

// Subcommand bodies behind the command-line tool. Each takes a validated
// config plus output/error streams and returns the process exit status.

namespace soundmind::cli {

enum class Provider { mock, external_command };

struct GenDataConfig {
  std::size_t n = 1000;
  std::uint64_t seed = 7;
  int n_atoms = 2;
  double entailed_fraction = 0.449;
  SplitFractions fractions;
  std::string out = "manifest.jsonl";
  std::string templates_path;
  Provider provider = Provider::mock;
  std::string generator_cmd;
  std::string tts_cmd;
  double seconds_per_word = 0.4;
  std::size_t threads = 1;

  void validate() const {
    if (n == 0) throw ConfigError("--n must be positive");
    TaskConfig{n_atoms, entailed_fraction}.validate();
    fractions.validate();
    if (out.empty()) throw ConfigError("--out is required");
    if (provider == Provider::external_command && (generator_cmd.empty() || tts_cmd.empty())) {
      throw ConfigError("external-command provider needs --generator-cmd and --tts-cmd");
    }
    if (!(seconds_per_word > 0.0)) throw ConfigError("--seconds-per-word must be positive");
    if (threads == 0) throw ConfigError("--threads must be positive");
  }
};

inline std::vector<SampleRecord> generate_corpus(const GenDataConfig& cfg) {
  cfg.validate();
  CorpusConfig corpus;
  if (!cfg.templates_path.empty()) corpus.templates = load_templates(cfg.templates_path);
  corpus.fractions = cfg.fractions;
  corpus.threads = cfg.threads;

  std::unique_ptr<ReasoningGenerator> gen;
  std::unique_ptr<SpeechSynthesizer> tts;
  if (cfg.provider == Provider::mock) {
    gen = std::make_unique<OracleReasoningGenerator>();
    tts = std::make_unique<MockSpeechSynthesizer>(cfg.seconds_per_word);
  } else {
    gen = std::make_unique<ExternalCommandGenerator>(cfg.generator_cmd);
    tts = std::make_unique<ExternalCommandSynthesizer>(cfg.tts_cmd);
    corpus.build.require_label_match = false;
  }

  std::mt19937_64 rng(cfg.seed);
  auto vocab = Vocabulary::desk();
  TaskConfig tcfg{cfg.n_atoms, cfg.entailed_fraction};
  auto instances = generate_tasks(rng, tcfg, vocab, cfg.n);
  std::vector<LogicTask> tasks;
  tasks.reserve(instances.size());
  for (auto& inst : instances) tasks.push_back(std::move(inst.task));
  return build_corpus(std::span<const LogicTask>(tasks), *gen, *tts, corpus, rng);
}

inline int gen_data(const GenDataConfig& cfg, std::ostream& out) {
  auto records = generate_corpus(cfg);
  write_manifest_file(cfg.out, records);
  out << to_json(dataset_stats(records)).dump() << '\n';
  return 0;
}

struct TrainCommandConfig {
  TrainConfig train;
  std::string checkpoint = "policy.ckpt";
  std::string log;  // empty: log records go to the output stream
  bool wall_time = false;
  std::size_t eval_tasks = 1024;
  std::uint64_t eval_seed = 99;
};

struct TrainSummary {
  double initial_reward = 0.0;
  double final_reward = 0.0;
  double heldout_accuracy = 0.0;
};

/// Held-out comparison: mean reward of one stochastic rollout on each of
/// `count` fresh tasks, for the uniform start and the trained parameters,
/// plus greedy accuracy of the trained parameters.
inline TrainSummary summarize_training(const TrainConfig& cfg, const Vocabulary& vocab, const TrainResult& res,
                                       std::size_t count, std::uint64_t eval_seed) {
  std::mt19937_64 rng(eval_seed);
  auto held = generate_tasks(rng, cfg.tasks, vocab, count, 1ULL << 40);
  EpisodeContext ctx{&vocab, cfg.weights, cfg.max_len, cfg.k};
  TrainSummary s;
  s.initial_reward = mean_rollout_reward(res.reference, held, ctx, eval_seed, cfg.threads);
  s.final_reward = mean_rollout_reward(res.params, held, ctx, eval_seed, cfg.threads);
  s.heldout_accuracy = greedy_accuracy(res.params, held, ctx);
  return s;
}

inline int train(const TrainCommandConfig& cfg, std::ostream& out, std::ostream& err) {
  auto vocab = Vocabulary::desk();
  std::ofstream log_file;
  std::ostream* log = &out;
  if (!cfg.log.empty()) {
    log_file.open(cfg.log, std::ios::binary);
    if (!log_file) throw ConfigError("cannot open log file " + cfg.log);
    log = &log_file;
  }
  TrainResult res;
  try {
    res = soundmind::train(cfg.train, vocab, [&](const StepRecord& r) { *log << to_json(r).dump() << '\n'; }, {},
                           cfg.wall_time);
  } catch (const NonFiniteGradient& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  save_checkpoint(cfg.checkpoint, res.params, vocab.hash());
  if (cfg.eval_tasks > 0) {
    auto s = summarize_training(cfg.train, vocab, res, cfg.eval_tasks, cfg.eval_seed);
    nlohmann::ordered_json j;
    j["summary"] = {{"initial_reward", s.initial_reward},
                    {"final_reward", s.final_reward},
                    {"heldout_accuracy", s.heldout_accuracy},
                    {"eval_tasks", cfg.eval_tasks}};
    (cfg.log.empty() ? err : out) << j.dump() << '\n';
  }
  return 0;
}

struct EvalConfig {
  std::string checkpoint;
  std::string manifest;
  OutputModality modality = OutputModality::text_out;
  std::optional<Split> split;
  std::size_t max_len = 8;
  std::string detail;  // optional per-sample JSON Lines file
  RewardWeights weights;
};

/// Greedy decoding per manifest sample. Samples whose user content does not
/// hold a parseable triplet are reported and skipped (exit status 1).
inline int eval(const EvalConfig& cfg, std::ostream& out, std::ostream& err) {
  auto vocab = Vocabulary::desk();
  auto ck = load_checkpoint(cfg.checkpoint);
  if (ck.vocab_hash != vocab.hash()) throw CheckpointError("checkpoint was trained with a different vocabulary");
  if (ck.params.shape.task_dim != kTaskFeatureDim) throw CheckpointError("checkpoint task feature size mismatch");
  auto records = read_manifest_file(cfg.manifest);
  EpisodeContext ctx{&vocab, cfg.weights, cfg.max_len, ck.params.shape.k};

  std::ofstream detail;
  if (!cfg.detail.empty()) {
    detail.open(cfg.detail, std::ios::binary);
    if (!detail) throw ConfigError("cannot open detail file " + cfg.detail);
  }
  std::vector<std::optional<AnswerLabel>> preds;
  std::vector<AnswerLabel> truths;
  double wer_sum = 0.0;
  std::size_t skipped = 0;
  for (const auto& rec : records) {
    if (cfg.split && rec.split != *cfg.split) continue;
    auto task = logic_task_from_content(rec.user_content_text);
    if (!task) {
      err << "sample " << rec.id << ": user content has no parseable triplet for " << to_string(cfg.modality)
          << " evaluation\n";
      ++skipped;
      continue;
    }
    task->label = rec.answer;
    auto inst = make_instance(preds.size(), *task, vocab, cfg.modality);
    auto resp = vocab.make_response(greedy_decode(ck.params, inst, ctx), cfg.weights.answer_window);
    auto pred = active_answer(resp, cfg.weights, cfg.modality);
    preds.push_back(pred);
    truths.push_back(rec.answer);
    std::optional<double> wer;
    if (uses_audio(cfg.modality)) {
      wer = word_error_rate(resp.audio_transcript, rec.cot_text);
      wer_sum += *wer;
    }
    if (detail.is_open()) {
      nlohmann::ordered_json j;
      j["id"] = rec.id;
      j["prediction"] = pred ? nlohmann::json(std::string(to_string(*pred))) : nlohmann::json(nullptr);
      j["truth"] = to_string(rec.answer);
      if (uses_text(cfg.modality)) j["text"] = resp.text_rendering;
      if (uses_audio(cfg.modality)) {
        j["audio_transcript"] = resp.audio_transcript;
        j["wer"] = *wer;
      }
      detail << j.dump() << '\n';
    }
  }
  if (preds.empty()) {
    err << "error: no evaluable samples\n";
    return 1;
  }
  std::optional<double> wer;
  if (uses_audio(cfg.modality)) wer = wer_sum / static_cast<double>(preds.size());
  auto report = to_json(make_report(preds, truths, wer));
  report["modality"] = to_string(cfg.modality);
  report["skipped"] = skipped;
  out << report.dump() << '\n';
  return skipped ? 1 : 0;
}

struct ScoreConfig {
  std::string responses;
  std::string manifest;
  RewardWeights weights;
  OutputModality modality = OutputModality::text_out;
};

/// Response file: JSON Lines with "id", optional "text", optional "audio"
/// (transcript) and optional "modality". Token counts are whitespace words;
/// both reference lengths come from the manifest's output_tokens.
inline BimodalResponse response_from_strings(const std::string& text, const std::string& audio,
                                             std::size_t answer_window) {
  BimodalResponse r;
  r.text_rendering = text;
  r.audio_transcript = audio;
  r.text_tokens.assign(whitespace_tokens(text), 0);
  r.audio_tokens.assign(whitespace_tokens(audio), 0);
  r.extracted_answer = extract_answer(text, answer_window);
  if (!r.extracted_answer) r.extracted_answer = extract_answer(audio, answer_window);
  return r;
}

inline nlohmann::ordered_json to_json(const RewardBreakdown& b) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::ordered_json j;
  j["format_text"] = opt(b.format_text);
  j["format_audio"] = opt(b.format_audio);
  j["answer"] = b.answer;
  j["length_text"] = opt(b.length_text);
  j["length_audio"] = opt(b.length_audio);
  j["total"] = b.total();
  return j;
}

inline int score(const ScoreConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.weights.validate();
  auto records = read_manifest_file(cfg.manifest);
  std::map<std::string, const SampleRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;

  std::ifstream in(cfg.responses, std::ios::binary);
  if (!in) throw ConfigError("cannot open response file " + cfg.responses);
  std::vector<std::string> unmatched;
  std::size_t failures = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ManifestError(line_no, "response line is not valid JSON");
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw ManifestError(line_no, "response needs a string \"id\"");
    }
    auto id = j["id"].get<std::string>();
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      unmatched.push_back(id);
      continue;
    }
    auto modality = cfg.modality;
    if (j.contains("modality")) {
      auto m = parse_modality(j["modality"].get<std::string>());
      if (!m) throw ManifestError(line_no, "unknown modality");
      modality = *m;
    }
    auto resp = response_from_strings(j.value("text", std::string()), j.value("audio", std::string()),
                                      cfg.weights.answer_window);
    const auto& rec = *it->second;
    LengthAnnotation ann{rec.output_tokens, rec.output_tokens};
    try {
      auto b = reward_breakdown(resp, rec.answer, ann, cfg.weights, modality);
      nlohmann::ordered_json row;
      row["id"] = id;
      row["modality"] = to_string(modality);
      auto terms = to_json(b);
      for (auto& [k, v] : terms.items()) row[k] = v;
      out << row.dump() << '\n';
    } catch (const InvalidAnnotation& e) {
      err << "sample " << id << ": " << e.what() << '\n';
      ++failures;
    }
  }
  if (!unmatched.empty()) {
    nlohmann::ordered_json j;
    j["unmatched"] = unmatched;
    out << j.dump() << '\n';
    err << unmatched.size() << " response id(s) not present in the manifest\n";
  }
  return unmatched.empty() && failures == 0 ? 0 : 2;
}

inline int stats(const std::string& manifest, std::ostream& out) {
  auto records = read_manifest_file(manifest);
  out << to_json(dataset_stats(records)).dump() << '\n';
  return 0;
}

}  // namespace soundmind::cli
