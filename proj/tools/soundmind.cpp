#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "soundmind/commands.hpp"

namespace {

using namespace soundmind;

void add_weight_flags(CLI::App* cmd, RewardWeights& w) {
  cmd->add_option("--lambda1", w.lambda1, "text format weight");
  cmd->add_option("--lambda2", w.lambda2, "audio format weight");
  cmd->add_option("--lambda3", w.lambda3, "answer weight");
  cmd->add_option("--lambda4", w.lambda4, "text length weight");
  cmd->add_option("--lambda5", w.lambda5, "audio length weight");
  cmd->add_option("--answer-window", w.answer_window, "tail window (characters) for the answer marker");
}

void add_modality_flag(CLI::App* cmd, OutputModality& m) {
  cmd->add_option_function<std::string>(
         "--modality", [&m](const std::string& s) { m = *parse_modality(s); }, "text_out | audio_out | both")
      ->check(CLI::IsMember({"text_out", "audio_out", "both"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soundmind: rule-based RL for bimodal logical reasoning (desk scale)"};
  app.set_config("--config", "", "key = value configuration file");
  app.require_subcommand(1);

  std::uint64_t seed = 7;
  if (const char* env = std::getenv("SOUNDMIND_SEED")) {
    try {
      seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: SOUNDMIND_SEED is not an unsigned integer\n";
      return 2;
    }
  }

  // gen-data
  cli::GenDataConfig gen;
  gen.seed = seed;
  auto* gen_cmd = app.add_subcommand("gen-data", "build a synthetic manifest with the three-stage pipeline");
  gen_cmd->add_option("--n", gen.n, "number of samples");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--n-atoms", gen.n_atoms, "atoms per task (1-4)");
  gen_cmd->add_option("--entailed-fraction", gen.entailed_fraction, "fraction of entailed tasks");
  gen_cmd->add_option("--train-fraction", gen.fractions.train);
  gen_cmd->add_option("--test-fraction", gen.fractions.test);
  gen_cmd->add_option("--validation-fraction", gen.fractions.validation);
  gen_cmd->add_option("--out", gen.out, "manifest path");
  gen_cmd->add_option("--templates", gen.templates_path, "template file with [system], [before_major], [behind_conclusion]");
  std::string provider = "mock";
  gen_cmd->add_option("--provider", provider, "mock | external-command")->check(CLI::IsMember({"mock", "external-command"}));
  gen_cmd->add_option("--generator-cmd", gen.generator_cmd, "reasoning command (stdin: user content)");
  gen_cmd->add_option("--tts-cmd", gen.tts_cmd, "speech command (stdout: '<seconds> <path>')");
  gen_cmd->add_option("--seconds-per-word", gen.seconds_per_word, "mock speech rate");
  gen_cmd->add_option("--threads", gen.threads);

  // train
  cli::TrainCommandConfig tr;
  tr.train.seed = seed;
  auto* train_cmd = app.add_subcommand("train", "REINFORCE++ training on the synthetic logic environment");
  train_cmd->add_option("--seed", tr.train.seed);
  train_cmd->add_option("--steps", tr.train.steps, "update steps");
  train_cmd->add_option("--batch-size", tr.train.update.batch_size);
  train_cmd->add_option("--epochs", tr.train.update.epochs, "update epochs per batch");
  train_cmd->add_option("--lr", tr.train.update.learning_rate, "learning rate");
  train_cmd->add_option("--beta", tr.train.update.beta, "KL penalty coefficient");
  train_cmd->add_option("--epsilon", tr.train.update.epsilon, "clip radius");
  train_cmd->add_option("--sigma-floor", tr.train.update.sigma_floor);
  train_cmd->add_option("--max-len", tr.train.max_len, "maximum response tokens");
  train_cmd->add_option("--k", tr.train.k, "prefix window");
  train_cmd->add_option("--n-atoms", tr.train.tasks.n_atoms);
  train_cmd->add_option("--entailed-fraction", tr.train.tasks.entailed_fraction);
  add_modality_flag(train_cmd, tr.train.tasks.modality);
  train_cmd->add_option("--threads", tr.train.threads);
  train_cmd->add_option("--checkpoint", tr.checkpoint, "output checkpoint path");
  train_cmd->add_option("--log", tr.log, "training log path (default: standard output)");
  train_cmd->add_flag("--wall-time", tr.wall_time, "add wall-clock seconds to log records");
  train_cmd->add_option("--eval-tasks", tr.eval_tasks, "held-out tasks for the final summary (0 disables)");
  add_weight_flags(train_cmd, tr.train.weights);

  // eval
  cli::EvalConfig ev;
  auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation of a checkpoint on a manifest");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--manifest", ev.manifest)->required();
  add_modality_flag(eval_cmd, ev.modality);
  std::string split;
  eval_cmd->add_option("--split", split, "restrict to one split")->check(CLI::IsMember({"train", "test", "validation"}));
  eval_cmd->add_option("--max-len", ev.max_len);
  eval_cmd->add_option("--detail", ev.detail, "per-sample JSON Lines output");
  add_weight_flags(eval_cmd, ev.weights);

  // score
  cli::ScoreConfig sc;
  auto* score_cmd = app.add_subcommand("score", "offline reward breakdown for a response file");
  score_cmd->add_option("--responses", sc.responses)->required();
  score_cmd->add_option("--manifest", sc.manifest)->required();
  add_modality_flag(score_cmd, sc.modality);
  add_weight_flags(score_cmd, sc.weights);

  // stats
  std::string stats_manifest;
  auto* stats_cmd = app.add_subcommand("stats", "dataset statistics for a manifest");
  stats_cmd->add_option("--manifest", stats_manifest)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cout, std::cerr);
  }

  try {
    if (*gen_cmd) {
      gen.provider = provider == "mock" ? cli::Provider::mock : cli::Provider::external_command;
      return cli::gen_data(gen, std::cout);
    }
    if (*train_cmd) {
      return cli::train(tr, std::cout, std::cerr);
    }
    if (*eval_cmd) {
      if (!split.empty()) ev.split = parse_split(split);
      return cli::eval(ev, std::cout, std::cerr);
    }
    if (*score_cmd) return cli::score(sc, std::cout, std::cerr);
    if (*stats_cmd) return cli::stats(stats_manifest, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
