// Copyright 2026 The HSCJN Authors. All Rights Reserved.
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

// Command-line front end over the C API.
//
//   hscjn train    --train corpus.txt [--valid ...] [--checkpoint model.ckpt] [options]
//   hscjn generate --checkpoint model.ckpt (--context "hi __eou__ hello" | --input f --output g)
//   hscjn eval     --responses r.txt --references t.txt
//   hscjn eval     --checkpoint model.ckpt --test corpus.txt [--output r.txt]
//   hscjn ablate   --train corpus.txt --out-dir runs/ [options]
//
// Exit status: 0 on success, 1 on usage errors, 2 on runtime failures.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hscjn/hscjn.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Failure {
  int code;
  std::string message;
};

void check(hscjn_status s) {
  if (s != HSCJN_OK) throw Failure{s == HSCJN_ERROR_USAGE ? kExitUsage : kExitRuntime, hscjn_last_error()};
}

std::string take(char* s) {
  std::string out = s != nullptr ? s : "";
  hscjn_string_free(s);
  return out;
}

using ConfigPtr = std::unique_ptr<hscjn_config, decltype(&hscjn_config_destroy)>;
using ModelPtr = std::unique_ptr<hscjn_model, decltype(&hscjn_model_destroy)>;

ConfigPtr new_config() {
  hscjn_config* c = nullptr;
  check(hscjn_config_create(&c));
  return {c, &hscjn_config_destroy};
}

std::string get(const hscjn_config* c, const char* key) {
  char* v = nullptr;
  check(hscjn_config_get(c, key, &v));
  return take(v);
}

std::vector<std::string> config_keys() {
  char* raw = nullptr;
  check(hscjn_config_keys(&raw));
  std::istringstream in(take(raw));
  std::vector<std::string> keys;
  for (std::string k; std::getline(in, k);) keys.push_back(k);
  return keys;
}

std::string dashed(std::string key) {
  for (char& ch : key) {
    if (ch == '_') ch = '-';
  }
  return key;
}

// Every config key becomes a flag on `cmd`; booleans get a --no- form.
// Values are collected in `overrides` and applied after the config file.
void add_config_flags(CLI::App* cmd, std::string* config_file, std::map<std::string, std::string>* overrides) {
  cmd->add_option("--config", *config_file, "key=value configuration file");
  ConfigPtr defaults = new_config();
  for (const std::string& key : config_keys()) {
    const std::string flag = "--" + dashed(key);
    const std::string def = get(defaults.get(), key.c_str());
    if (def == "true" || def == "false") {
      cmd->add_flag_function(
          flag + ",!--no-" + dashed(key),
          [overrides, key](std::int64_t n) { (*overrides)[key] = n > 0 ? "true" : "false"; },
          "default " + def);
    } else {
      cmd->add_option_function<std::string>(
          flag, [overrides, key](const std::string& v) { (*overrides)[key] = v; },
          def.empty() ? std::string() : "default " + def);
    }
  }
  cmd->add_flag_function(
      "--two-turn", [overrides](std::int64_t) { (*overrides)["mode"] = "two_turn_target"; },
      "generate two consecutive turns (mode=two_turn_target)");
  cmd->add_flag_function(
      "--two-prev-source", [overrides](std::int64_t) { (*overrides)["mode"] = "two_prev_source"; },
      "use the two previous utterances as source (mode=two_prev_source)");
}

ConfigPtr build_config(const std::string& config_file, const std::map<std::string, std::string>& overrides) {
  ConfigPtr c = new_config();
  if (!config_file.empty()) check(hscjn_config_load_file(c.get(), config_file.c_str()));
  check(hscjn_config_apply_environment(c.get()));
  for (const auto& [k, v] : overrides) check(hscjn_config_set(c.get(), k.c_str(), v.c_str()));
  check(hscjn_config_validate(c.get()));
  return c;
}

ModelPtr load_model(const std::string& path) {
  if (path.empty()) throw Failure{kExitUsage, "--checkpoint is required"};
  hscjn_model* m = nullptr;
  check(hscjn_model_load(path.c_str(), &m));
  return {m, &hscjn_model_destroy};
}

void run_train(const hscjn_config* cfg) {
  if (get(cfg, "train").empty()) throw Failure{kExitUsage, "--train is required"};
  char* summary = nullptr;
  check(hscjn_train(cfg, nullptr, &summary));
  std::cout << take(summary) << '\n';
}

void run_generate(const hscjn_config* cfg, const std::string& context, const std::string& input) {
  ModelPtr model = load_model(get(cfg, "checkpoint"));
  if (!context.empty()) {
    char* out = nullptr;
    check(hscjn_generate(model.get(), cfg, context.c_str(), &out));
    std::cout << take(out) << '\n';
    return;
  }
  const std::string output = get(cfg, "output");
  if (input.empty() || output.empty()) throw Failure{kExitUsage, "give --context, or --input with --output"};
  check(hscjn_generate_file(model.get(), cfg, input.c_str(), output.c_str()));
}

void run_eval(const hscjn_config* cfg, const std::string& responses, std::size_t top_k, bool exclude_punct,
              const std::string& freq_out) {
  std::string report;
  std::string scored = responses;
  if (!responses.empty()) {
    const std::string refs = get(cfg, "references");
    if (refs.empty()) throw Failure{kExitUsage, "--references is required with --responses"};
    char* out = nullptr;
    check(hscjn_evaluate_files(responses.c_str(), refs.c_str(), get(cfg, "sentence_bleu") == "true", &out));
    report = take(out);
  } else {
    ModelPtr model = load_model(get(cfg, "checkpoint"));
    const std::string test = get(cfg, "test");
    if (test.empty()) throw Failure{kExitUsage, "give --responses and --references, or --checkpoint and --test"};
    const std::string output = get(cfg, "output");
    char* out = nullptr;
    check(hscjn_evaluate_corpus(model.get(), cfg, test.c_str(), output.empty() ? nullptr : output.c_str(), &out));
    report = take(out);
    scored = output;
  }
  std::cout << report << '\n';
  if (!freq_out.empty()) {
    if (scored.empty()) throw Failure{kExitUsage, "--freq-out needs --responses or --output"};
    char* table = nullptr;
    check(hscjn_frequency_table(scored.c_str(), top_k, exclude_punct ? 1 : 0, &table));
    std::ofstream f(freq_out);
    f << take(table);
    if (!f) throw Failure{kExitRuntime, "cannot write " + freq_out};
  }
}

void run_ablate(const hscjn_config* cfg) {
  if (get(cfg, "train").empty()) throw Failure{kExitUsage, "--train is required"};
  if (get(cfg, "out_dir").empty()) throw Failure{kExitUsage, "--out-dir is required"};
  char* summary = nullptr;
  check(hscjn_ablate(cfg, &summary));
  std::cout << take(summary) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HSCJN dialogue response generation", "hscjn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hscjn_version());

  std::string context, input, responses, freq_out;
  std::size_t top_k = 10;
  bool exclude_punct = false;

  CLI::App* train = app.add_subcommand("train", "train a model");
  CLI::App* generate = app.add_subcommand("generate", "generate responses from a checkpoint");
  CLI::App* eval = app.add_subcommand("eval", "score responses (BLEU, Distinct, word frequencies)");
  CLI::App* ablate = app.add_subcommand("ablate", "train and evaluate the four ablation variants");
  std::string cfgs[4];
  std::map<std::string, std::string> ovs[4];
  CLI::App* cmds[4] = {train, generate, eval, ablate};
  try {
    for (int i = 0; i < 4; ++i) add_config_flags(cmds[i], &cfgs[i], &ovs[i]);
  } catch (const Failure& f) {
    std::cerr << "hscjn: " << f.message << '\n';
    return f.code;
  }
  generate->add_option("--context", context, "dialogue context, utterances separated by __eou__");
  generate->add_option("--input", input, "file of contexts, one per line");
  eval->add_option("--responses", responses, "generated responses, one per line");
  eval->add_option("--top-k", top_k, "words in the frequency table")->check(CLI::PositiveNumber);
  eval->add_flag("--exclude-punct", exclude_punct, "leave punctuation out of the frequency table");
  eval->add_option("--freq-out", freq_out, "write the word frequency table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    for (int i = 0; i < 4; ++i) {
      if (!cmds[i]->parsed()) continue;
      ConfigPtr cfg = build_config(cfgs[i], ovs[i]);
      switch (i) {
        case 0: run_train(cfg.get()); break;
        case 1: run_generate(cfg.get(), context, input); break;
        case 2: run_eval(cfg.get(), responses, top_k, exclude_punct, freq_out); break;
        default: run_ablate(cfg.get()); break;
      }
    }
  } catch (const Failure& f) {
    std::cerr << "hscjn: " << f.message << '\n';
    return f.code;
  }
  return 0;
}
