// Copyright 2026 The cs-forge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cs-forge: corpus synthesis, augmentation, training, decoding and
// evaluation driven by one experiment config.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "csforge/errors.h"
#include "csforge/experiment.h"
#include "csforge/manifest.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumeric = 4;

struct Options {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::string input;
  std::string output;
  bool quiet = false;
};

int Run(const std::string& command, const Options& opts) {
  csforge::ExperimentConfig config = csforge::ExperimentConfig::Load(opts.config);
  if (!opts.out.empty()) config.output_dir = std::filesystem::absolute(opts.out);
  if (opts.seed) config.seed = *opts.seed;
  csforge::Experiment ex(std::move(config), [&](const std::string& line) {
    if (!opts.quiet) std::cerr << line << "\n";
  });
  if (command == "synth") ex.Synth();
  else if (command == "augment") ex.Augment();
  else if (command == "testset") ex.Testset();
  else if (command == "train") ex.Train();
  else if (command == "finetune-da") ex.FinetuneDA();
  else if (command == "decode") ex.Decode();
  else if (command == "evaluate") ex.Evaluate();
  else if (command == "compare") ex.Compare();
  else if (command == "gradcheck") ex.GradCheck();
  else if (command == "punct-train") ex.PunctTrain();
  else if (command == "punct-apply") ex.PunctApply(opts.input, opts.output);
  else if (command == "reproduce") ex.Reproduce();
  if (command == "compare") std::cout << csforge::ReadTextFile(ex.out() / "eval" / "compare.txt");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-agnostic speech translation experiments on synthetic data"};
  app.require_subcommand(1);
  Options opts;
  const char* kCommands[][2] = {
      {"synth", "Generate lexicon, training corpora and monolingual test sets"},
      {"augment", "Build the concatenation-augmented training sets of the DA sweep"},
      {"testset", "Build the code-switching test set"},
      {"train", "Train the ASR, ST, LAST and LAST_half models"},
      {"finetune-da", "Fine-tune LAST on each augmented training set"},
      {"decode", "Decode every test set with every configured system"},
      {"evaluate", "Score decode outputs (WER, BLEU, BLEU without punctuation)"},
      {"compare", "Print the code-switching and monolingual comparison tables"},
      {"gradcheck", "Finite-difference gradient check on a tiny model"},
      {"punct-train", "Train the casing and punctuation restorer"},
      {"punct-apply", "Restore casing and punctuation of bare text"},
      {"reproduce", "Run every step; finished steps are skipped"},
  };
  for (const auto& [name, help] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "Experiment config (JSON)")->required();
    sub->add_option("--out", opts.out, "Override output_dir");
    sub->add_option("--seed", opts.seed, "Override the experiment seed");
    sub->add_flag("--quiet", opts.quiet, "Suppress progress output");
    if (std::string(name) == "punct-apply") {
      sub->add_option("--input", opts.input, "Bare text, one sentence per line");
      sub->add_option("--output", opts.output, "Destination of the restored text");
    }
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return Run(command, opts);
  } catch (const csforge::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const csforge::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissing;
  } catch (const csforge::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
