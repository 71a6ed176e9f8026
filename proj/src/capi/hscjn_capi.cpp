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

#include "hscjn/hscjn.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "common/errors.hpp"
#include "corpus/corpus.hpp"
#include "decode/decode.hpp"
#include "metrics/metrics.hpp"
#include "train/checkpoint.hpp"
#include "train/config.hpp"
#include "train/trainer.hpp"

struct hscjn_config {
  hscjn::train::TrainConfig cfg;
};

struct hscjn_model {
  hscjn::train::TrainState state;
};

namespace {

thread_local std::string g_last_error;

hscjn_status fail(hscjn_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
hscjn_status guarded(F&& body) {
  try {
    body();
    return HSCJN_OK;
  } catch (const hscjn::UsageError& e) {
    return fail(HSCJN_ERROR_USAGE, e.what());
  } catch (const hscjn::DimensionError& e) {
    return fail(HSCJN_ERROR_USAGE, e.what());
  } catch (const hscjn::DomainError& e) {
    return fail(HSCJN_ERROR_USAGE, e.what());
  } catch (const hscjn::IoError& e) {
    return fail(HSCJN_ERROR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(HSCJN_ERROR_IO, e.what());
  } catch (const hscjn::FormatError& e) {
    return fail(HSCJN_ERROR_FORMAT, e.what());
  } catch (const hscjn::NumericError& e) {
    return fail(HSCJN_ERROR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(HSCJN_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(HSCJN_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(HSCJN_ERROR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw hscjn::UsageError(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

hscjn::decode::DecodeOptions decode_options(const hscjn::train::TrainConfig& c) {
  hscjn::decode::DecodeOptions o;
  o.width = c.beam_width;
  o.max_len = c.max_len;
  o.length_norm = c.length_norm;
  return o;
}

// Splits on `__eou__`; each non-empty utterance gets its EOU marker.
std::vector<std::vector<int>> encode_context(std::string_view line, const hscjn::corpus::Vocabulary& vocab) {
  std::vector<std::vector<int>> ctx;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t end = line.find(hscjn::corpus::kEouDelimiter, pos);
    if (end == std::string_view::npos) end = line.size();
    const hscjn::corpus::Tokens toks = hscjn::corpus::tokenize_utterance(line.substr(pos, end - pos));
    if (!toks.empty()) {
      std::vector<int> ids = vocab.encode(toks);
      ids.push_back(hscjn::corpus::kEou);
      ctx.push_back(std::move(ids));
    }
    pos = end + hscjn::corpus::kEouDelimiter.size();
  }
  if (ctx.empty()) throw hscjn::UsageError("context has no tokens");
  return ctx;
}

std::string respond(const hscjn_model* model, const hscjn::train::TrainConfig& c, std::string_view line) {
  const auto ctx = encode_context(line, model->state.vocab);
  const auto r = hscjn::decode::beam_search(model->state.params, ctx, decode_options(c));
  std::string out;
  for (const auto& t : model->state.vocab.decode(r.tokens)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

extern "C" {

const char* hscjn_version(void) { return "1.0.0"; }

const char* hscjn_last_error(void) { return g_last_error.c_str(); }

void hscjn_string_free(char* s) { std::free(s); }

hscjn_status hscjn_config_create(hscjn_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new hscjn_config();
  });
}

void hscjn_config_destroy(hscjn_config* config) { delete config; }

hscjn_status hscjn_config_set(hscjn_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->cfg.set(key, value);
  });
}

hscjn_status hscjn_config_get(const hscjn_config* config, const char* key, char** out) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(out, "out");
    *out = dup_string(config->cfg.get(key));
  });
}

hscjn_status hscjn_config_load_file(hscjn_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    hscjn::train::TrainConfig next = config->cfg;
    hscjn::train::apply_config_file(next, path);
    config->cfg = std::move(next);
  });
}

hscjn_status hscjn_config_apply_environment(hscjn_config* config) {
  return guarded([&] {
    require(config, "config");
    hscjn::train::apply_environment(config->cfg);
  });
}

hscjn_status hscjn_config_keys(char** out) {
  return guarded([&] {
    require(out, "out");
    std::string s;
    for (const auto& k : hscjn::train::TrainConfig::keys()) s += k + '\n';
    *out = dup_string(s);
  });
}

hscjn_status hscjn_config_validate(const hscjn_config* config) {
  return guarded([&] {
    require(config, "config");
    config->cfg.validate();
  });
}

hscjn_status hscjn_train(const hscjn_config* config, hscjn_model** out_model, char** out_summary) {
  return guarded([&] {
    require(config, "config");
    hscjn::train::TrainResult r = hscjn::train::train(config->cfg);
    if (out_summary != nullptr) {
      nlohmann::json j;
      j["epochs"] = r.state.epoch;
      j["steps"] = r.state.step;
      j["early_stopped"] = r.early_stopped;
      j["vocab_size"] = r.state.vocab.size();
      j["parameters"] = r.state.params.count();
      if (!r.log.empty()) j["last"] = r.log.back().to_json();
      *out_summary = dup_string(j.dump());
    }
    if (out_model != nullptr) *out_model = new hscjn_model{std::move(r.state)};
  });
}

hscjn_status hscjn_model_load(const char* path, hscjn_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new hscjn_model{hscjn::train::load_checkpoint(path)};
  });
}

hscjn_status hscjn_model_save(const hscjn_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    hscjn::train::save_checkpoint(model->state, path);
  });
}

void hscjn_model_destroy(hscjn_model* model) { delete model; }

hscjn_status hscjn_model_info(const hscjn_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    nlohmann::json j;
    j["model"] = hscjn::train::model_config_to_json(model->state.params.config());
    j["vocab_size"] = model->state.vocab.size();
    j["parameters"] = model->state.params.count();
    j["step"] = model->state.step;
    j["epoch"] = model->state.epoch;
    *out = dup_string(j.dump());
  });
}

hscjn_status hscjn_generate(const hscjn_model* model, const hscjn_config* config, const char* context,
                            char** out_response) {
  return guarded([&] {
    require(model, "model");
    require(context, "context");
    require(out_response, "out_response");
    const auto& c = config != nullptr ? config->cfg : model->state.config;
    *out_response = dup_string(respond(model, c, context));
  });
}

hscjn_status hscjn_generate_file(const hscjn_model* model, const hscjn_config* config, const char* input_path,
                                 const char* output_path) {
  return guarded([&] {
    require(model, "model");
    require(input_path, "input_path");
    require(output_path, "output_path");
    const auto& c = config != nullptr ? config->cfg : model->state.config;
    std::ifstream in(input_path);
    if (!in) throw hscjn::IoError(std::string("cannot read ") + input_path);
    std::ostringstream buf;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      buf << respond(model, c, line) << '\n';
      ++n;
    }
    if (n == 0) throw hscjn::FormatError(std::string("no contexts in ") + input_path);
    std::ofstream out(output_path, std::ios::trunc);
    out << buf.str();
    if (!out) throw hscjn::IoError(std::string("cannot write ") + output_path);
  });
}

hscjn_status hscjn_evaluate_corpus(const hscjn_model* model, const hscjn_config* config, const char* corpus_path,
                                   const char* output_path, char** out_report) {
  return guarded([&] {
    require(model, "model");
    require(corpus_path, "corpus_path");
    require(out_report, "out_report");
    const auto& c = config != nullptr ? config->cfg : model->state.config;
    const auto examples = hscjn::train::prepare_examples(corpus_path, c, model->state.vocab);
    const auto eval = hscjn::train::evaluate_split(model->state.params, model->state.vocab, examples, c);
    if (output_path != nullptr) {
      std::ofstream out(output_path, std::ios::trunc);
      for (const auto& r : eval.responses) out << r << '\n';
      if (!out) throw hscjn::IoError(std::string("cannot write ") + output_path);
    }
    *out_report = dup_string(eval.report.to_json().dump());
  });
}

hscjn_status hscjn_evaluate_files(const char* responses_path, const char* references_path, int sentence_bleu,
                                  char** out_report) {
  return guarded([&] {
    require(responses_path, "responses_path");
    require(references_path, "references_path");
    require(out_report, "out_report");
    hscjn::metrics::EvalOptions opts;
    opts.bleu.sentence_level = sentence_bleu != 0;
    *out_report = dup_string(hscjn::metrics::eval_report(responses_path, references_path, opts).to_json().dump());
  });
}

hscjn_status hscjn_frequency_table(const char* responses_path, size_t top_k, int exclude_punct, char** out) {
  return guarded([&] {
    require(responses_path, "responses_path");
    require(out, "out");
    const auto responses = hscjn::metrics::read_responses(responses_path);
    *out = dup_string(
        hscjn::metrics::frequency_table(hscjn::metrics::word_frequency_profile(responses, top_k, exclude_punct != 0)));
  });
}

hscjn_status hscjn_ablate(const hscjn_config* config, char** out_summary) {
  return guarded([&] {
    require(config, "config");
    const auto runs = hscjn::train::ablate(config->cfg);
    const std::string summary = hscjn::train::ablation_summary(runs).dump(2);
    std::ofstream f(std::filesystem::path(config->cfg.out_dir) / "summary.json", std::ios::trunc);
    f << summary << '\n';
    if (!f) throw hscjn::IoError("cannot write ablation summary under " + config->cfg.out_dir);
    if (out_summary != nullptr) *out_summary = dup_string(summary);
  });
}

}  // extern "C"
