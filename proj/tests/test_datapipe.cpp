#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "soundmind/datapipe.hpp"
#include "soundmind/metrics.hpp"
#include "soundmind/task.hpp"

using namespace soundmind;

namespace {

class FailingSynthesizer : public SpeechSynthesizer {
public:
  SpeechClip synthesize(const std::string&) override { throw Error("synthesizer offline"); }
};

class SilentGenerator : public ReasoningGenerator {
public:
  std::string generate(const std::string&) override { return "I am not sure."; }
};

std::vector<LogicTask> tasks(std::size_t n, std::uint64_t seed, double fraction = 0.449) {
  std::mt19937_64 rng(seed);
  auto vocab = Vocabulary::desk();
  std::vector<LogicTask> out;
  for (auto& inst : generate_tasks(rng, TaskConfig{2, fraction}, vocab, n)) out.push_back(inst.task);
  return out;
}

}  // namespace

TEST(Colloquialize, ContainsTripletAndClosingPrompt) {
  PromptTemplates t;
  Triplet tri{"if A then B", "A", "B"};
  auto out = colloquialize(tri, t);
  for (const auto& s : {tri.major, tri.minor, tri.conclusion}) EXPECT_NE(out.find(s), std::string::npos);
  const std::string closing = "entailed\" or \"not-entailed\" based on these premises.";
  ASSERT_GE(out.size(), closing.size());
  EXPECT_EQ(out.substr(out.size() - closing.size()), closing);
  EXPECT_EQ(out, colloquialize(tri, t));
  EXPECT_EQ(out.rfind(t.before_major, 0), 0u);
}

TEST(Colloquialize, RejectsEmptyParts) {
  EXPECT_THROW(colloquialize(Triplet{"", "A", "B"}, PromptTemplates{}), ConfigError);
  EXPECT_THROW(colloquialize(Triplet{"A", "A", ""}, PromptTemplates{}), ConfigError);
}

TEST(Colloquialize, TripletRoundTrip) {
  for (const auto& t : tasks(200, 3)) {
    auto content = colloquialize(to_triplet(t), PromptTemplates{});
    auto back = logic_task_from_content(content);
    ASSERT_TRUE(back);
    EXPECT_EQ(back->major_premise, t.major_premise);
    EXPECT_EQ(back->conclusion, t.conclusion);
    EXPECT_EQ(back->label, t.label);
  }
}

TEST(Templates, DefaultsCarryTheAnswerFormat) {
  PromptTemplates t;
  EXPECT_NO_THROW(t.validate());
  EXPECT_NE(t.system.find("Answer: YOUR ANSWER"), std::string::npos);
  t.system = "think hard";
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Templates, ParseSectionFile) {
  std::istringstream in("[system]\nEnd with Answer: X\n\n[before_major]\n  Setup:  \n[behind_conclusion]\nDecide.\n");
  auto t = parse_templates(in);
  EXPECT_EQ(t.system, "End with Answer: X");
  EXPECT_EQ(t.before_major, "Setup:");
  EXPECT_EQ(t.behind_conclusion, "Decide.");
  std::istringstream missing("[system]\nAnswer:\n");
  EXPECT_THROW(parse_templates(missing), ConfigError);
}

TEST(BuildSample, OracleMockEntailed) {
  LogicTask t;
  t.major_premise = Formula::implies(Formula::atom(0), Formula::atom(1));
  t.minor_premise = Formula::atom(0);
  t.conclusion = Formula::atom(1);
  t.n_atoms = 2;
  t.label = AnswerLabel::entailed;
  OracleReasoningGenerator gen;
  MockSpeechSynthesizer tts;
  auto rec = build_sample("s1", to_triplet(t), t.label, gen, tts, PromptTemplates{});
  EXPECT_EQ(rec.answer, AnswerLabel::entailed);
  const std::string tail = "Answer: entailed.";
  EXPECT_EQ(rec.cot_text.substr(rec.cot_text.size() - tail.size()), tail);
  EXPECT_EQ(rec.input_tokens, whitespace_tokens(rec.user_content_text));
  EXPECT_DOUBLE_EQ(rec.input_duration_s, 0.4 * static_cast<double>(rec.input_tokens));
  EXPECT_GT(rec.output_duration_s, 0.0);
}

TEST(BuildSample, NotEntailedCotExplainsCounterexample) {
  OracleReasoningGenerator gen;
  MockSpeechSynthesizer tts;
  Triplet tri{"if A then B", "B", "A"};
  auto rec = build_sample("s2", tri, AnswerLabel::not_entailed, gen, tts, PromptTemplates{});
  EXPECT_EQ(rec.answer, AnswerLabel::not_entailed);
  EXPECT_NE(rec.cot_text.find("A is false and B is true"), std::string::npos) << rec.cot_text;
}

TEST(MockTts, RateTimesWords) {
  MockSpeechSynthesizer tts(0.4);
  std::string text;
  for (int i = 0; i < 150; ++i) text += "word ";
  auto clip = tts.synthesize(text);
  EXPECT_NEAR(clip.duration_s, 60.0, 1e-9);
  EXPECT_EQ(clip.handle, tts.synthesize(text).handle);
  EXPECT_NE(clip.handle, tts.synthesize("other").handle);
  EXPECT_THROW(MockSpeechSynthesizer(0.0), ConfigError);
}

TEST(BuildSample, ErrorsNameStageAndSample) {
  OracleReasoningGenerator gen;
  FailingSynthesizer bad_tts;
  MockSpeechSynthesizer tts;
  SilentGenerator silent;
  Triplet tri{"if A then B", "A", "B"};
  try {
    build_sample("alr-000042", tri, AnswerLabel::entailed, gen, bad_tts, PromptTemplates{});
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.stage, "tts");
    EXPECT_EQ(e.sample_id, "alr-000042");
    EXPECT_NE(std::string(e.what()).find("alr-000042"), std::string::npos);
  }
  try {
    build_sample("x", tri, AnswerLabel::entailed, silent, tts, PromptTemplates{});
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.stage, "generate");
  }
  try {
    build_sample("y", tri, AnswerLabel::not_entailed, gen, tts, PromptTemplates{});
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.stage, "generate");
  }
  try {
    build_sample("z", Triplet{"", "A", "B"}, AnswerLabel::entailed, gen, tts, PromptTemplates{});
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.stage, "colloquialize");
  }
}

TEST(ExternalProviders, ShellFiltersFollowTheContract) {
  ExternalCommandGenerator gen("cat >/dev/null; echo 'Fine. Answer: entailed.'");
  EXPECT_EQ(gen.generate("anything"), "Fine. Answer: entailed.");
  ExternalCommandSynthesizer tts("wc -w | awk '{print $1 * 0.5, \"/tmp/x.wav\"}'");
  auto clip = tts.synthesize("one two three four");
  EXPECT_DOUBLE_EQ(clip.duration_s, 2.0);
  EXPECT_EQ(clip.handle, "/tmp/x.wav");
  ExternalCommandGenerator failing("exit 3");
  EXPECT_THROW(failing.generate("x"), Error);
}

TEST(Manifest, RoundTripIsIdentity) {
  OracleReasoningGenerator gen;
  MockSpeechSynthesizer tts;
  std::mt19937_64 rng(5);
  auto recs = build_corpus(std::span<const LogicTask>(tasks(100, 9)), gen, tts, CorpusConfig{}, rng);
  std::stringstream ss;
  write_manifest(ss, recs);
  auto back = read_manifest(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].id, recs[i].id);
    EXPECT_EQ(back[i].user_content_text, recs[i].user_content_text);
    EXPECT_EQ(back[i].cot_text, recs[i].cot_text);
    EXPECT_EQ(back[i].answer, recs[i].answer);
    EXPECT_EQ(back[i].input_audio_ref, recs[i].input_audio_ref);
    EXPECT_EQ(back[i].output_audio_ref, recs[i].output_audio_ref);
    EXPECT_EQ(back[i].input_tokens, recs[i].input_tokens);
    EXPECT_EQ(back[i].output_tokens, recs[i].output_tokens);
    EXPECT_EQ(back[i].input_duration_s, recs[i].input_duration_s);
    EXPECT_EQ(back[i].output_duration_s, recs[i].output_duration_s);
    EXPECT_EQ(back[i].split, recs[i].split);
  }
}

TEST(Manifest, ErrorsCarryLineNumbers) {
  OracleReasoningGenerator gen;
  MockSpeechSynthesizer tts;
  std::mt19937_64 rng(5);
  auto recs = build_corpus(std::span<const LogicTask>(tasks(3, 9)), gen, tts, CorpusConfig{}, rng);
  std::stringstream ss;
  write_manifest(ss, recs);
  auto text = ss.str();
  auto cut = text.find('\n', text.find('\n') + 1) + 20;  // truncate inside line 3
  std::istringstream truncated(text.substr(0, cut));
  try {
    read_manifest(truncated);
    FAIL();
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line, 3u);
  }
  std::istringstream dup(text.substr(0, text.find('\n') + 1) + text.substr(0, text.find('\n') + 1));
  try {
    read_manifest(dup);
    FAIL();
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line, 2u);
  }
  std::istringstream bad_answer(R"({"id":"a","user_content":"u","cot":"c","answer":"maybe","input_audio":"","output_audio":"","input_tokens":1,"output_tokens":1,"input_duration_s":0,"output_duration_s":0,"split":"train"})");
  EXPECT_THROW(read_manifest(bad_answer), ManifestError);
}

TEST(AssignSplits, CorpusScaleSplitSizes) {
  std::vector<SampleRecord> recs(6446);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].id = std::to_string(i);
    recs[i].answer = i % 1000 < 449 ? AnswerLabel::entailed : AnswerLabel::not_entailed;
  }
  std::mt19937_64 rng(1);
  auto out = assign_splits(recs, SplitFractions{}, rng);
  auto st = dataset_stats(out);
  EXPECT_LE(std::abs(static_cast<long>(st[Split::train].count()) - 5184), 1);
  EXPECT_LE(std::abs(static_cast<long>(st[Split::test].count()) - 656), 1);
  EXPECT_LE(std::abs(static_cast<long>(st[Split::validation].count()) - 606), 1);
  double corpus = 0.0;
  for (const auto& r : recs) corpus += r.answer == AnswerLabel::entailed;
  corpus /= 6446.0;
  for (Split s : {Split::train, Split::test, Split::validation}) EXPECT_NEAR(st[s].entailed_fraction(), corpus, 0.02);
}

TEST(AssignSplits, AllTrainAndDeterminism) {
  auto make = [] {
    std::vector<SampleRecord> recs(300);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      recs[i].id = std::to_string(i);
      recs[i].answer = i % 3 ? AnswerLabel::not_entailed : AnswerLabel::entailed;
      recs[i].split = Split::test;
    }
    return recs;
  };
  std::mt19937_64 rng(2);
  for (const auto& r : assign_splits(make(), SplitFractions{1.0, 0.0, 0.0}, rng)) EXPECT_EQ(r.split, Split::train);
  std::mt19937_64 a(3), b(3);
  auto x = assign_splits(make(), SplitFractions{}, a), y = assign_splits(make(), SplitFractions{}, b);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].split, y[i].split);
  EXPECT_THROW(assign_splits(make(), SplitFractions{0.5, 0.5, 0.5}, rng), ConfigError);
}

TEST(Corpus, ParallelBuildIsIdentical) {
  OracleReasoningGenerator gen;
  MockSpeechSynthesizer tts;
  auto ts = tasks(200, 4);
  CorpusConfig cfg;
  std::mt19937_64 r1(8), r2(8);
  auto one = build_corpus(std::span<const LogicTask>(ts), gen, tts, cfg, r1);
  cfg.threads = 4;
  auto four = build_corpus(std::span<const LogicTask>(ts), gen, tts, cfg, r2);
  std::stringstream a, b;
  write_manifest(a, one);
  write_manifest(b, four);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(one[0].id, "alr-000000");
}
