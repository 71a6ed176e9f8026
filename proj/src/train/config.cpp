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

#include "train/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <type_traits>
#include <sstream>

#include "common/errors.hpp"

namespace hscjn::train {
namespace {

struct Entry {
  std::string key;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view key, std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw UsageError("invalid number '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw UsageError("invalid non-negative integer '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw UsageError("invalid boolean '" + std::string(s) + "' for " + std::string(key));
}

template <typename T>
Entry number(std::string key, T TrainConfig::*field) {
  if constexpr (std::is_same_v<T, double>) {
    return {key, [key, field](TrainConfig& c, std::string_view v) { c.*field = parse_double(key, v); },
            [field](const TrainConfig& c) { return format_double(c.*field); }};
  } else {
    return {key, [key, field](TrainConfig& c, std::string_view v) { c.*field = static_cast<T>(parse_unsigned(key, v)); },
            [field](const TrainConfig& c) { return std::to_string(c.*field); }};
  }
}

Entry flag(std::string key, bool TrainConfig::*field) {
  return {key, [key, field](TrainConfig& c, std::string_view v) { c.*field = parse_bool(key, v); },
          [field](const TrainConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

Entry text(std::string key, std::string TrainConfig::*field) {
  return {key, [field](TrainConfig& c, std::string_view v) { c.*field = std::string(v); },
          [field](const TrainConfig& c) { return c.*field; }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t = {
        number("alpha", &TrainConfig::alpha),
        number("beta", &TrainConfig::beta),
        number("learning_rate", &TrainConfig::learning_rate),
        number("batch_size", &TrainConfig::batch_size),
        number("dropout", &TrainConfig::dropout),
        number("epochs", &TrainConfig::epochs),
        flag("fixed_epochs", &TrainConfig::fixed_epochs),
        number("patience", &TrainConfig::patience),
        number("seed", &TrainConfig::seed),
        number("vocab_cap", &TrainConfig::vocab_cap),
        number("max_dialogue_tokens", &TrainConfig::max_dialogue_tokens),
        number("beam_width", &TrainConfig::beam_width),
        number("max_len", &TrainConfig::max_len),
        flag("length_norm", &TrainConfig::length_norm),
        flag("wo_me", &TrainConfig::wo_me),
        flag("wo_pn", &TrainConfig::wo_pn),
        flag("paper_scale", &TrainConfig::paper_scale),
        flag("wp_negatives", &TrainConfig::wp_negatives),
        flag("shuffle", &TrainConfig::shuffle),
        flag("sentence_bleu", &TrainConfig::sentence_bleu),
        number("init_std", &TrainConfig::init_std),
        number("clip_norm", &TrainConfig::clip_norm),
        number("threads", &TrainConfig::threads),
        number("embed_dim", &TrainConfig::embed_dim),
        number("word_enc_dim", &TrainConfig::word_enc_dim),
        number("utt_enc_dim", &TrainConfig::utt_enc_dim),
        number("dec_dim", &TrainConfig::dec_dim),
        number("attn_dim", &TrainConfig::attn_dim),
        number("head_hidden_dim", &TrainConfig::head_hidden_dim),
        flag("bidirectional", &TrainConfig::bidirectional),
        text("train", &TrainConfig::train_path),
        text("valid", &TrainConfig::valid_path),
        text("test", &TrainConfig::test_path),
        text("checkpoint", &TrainConfig::checkpoint_path),
        text("resume", &TrainConfig::resume_path),
        text("log", &TrainConfig::log_path),
        text("output", &TrainConfig::output_path),
        text("references", &TrainConfig::references_path),
        text("out_dir", &TrainConfig::out_dir),
    };
    t.push_back({"mode", [](TrainConfig& c, std::string_view v) { c.mode = corpus::parse_example_mode(v); },
                 [](const TrainConfig& c) { return std::string(corpus::to_string(c.mode)); }});
    t.push_back({"attention", [](TrainConfig& c, std::string_view v) { c.attention = model::parse_attention_form(v); },
                 [](const TrainConfig& c) { return std::string(model::to_string(c.attention)); }});
    t.push_back({"precision",
                 [](TrainConfig& c, std::string_view v) {
                   if (v == "single") {
                     c.precision = Precision::kSingle;
                   } else if (v == "double") {
                     c.precision = Precision::kDouble;
                   } else {
                     throw UsageError("precision must be single or double, got '" + std::string(v) + "'");
                   }
                 },
                 [](const TrainConfig& c) { return std::string(c.precision == Precision::kSingle ? "single" : "double"); }});
    return t;
  }();
  return table;
}

const Entry& find_entry(std::string_view key) {
  for (const Entry& e : entries()) {
    if (e.key == key) return e;
  }
  throw UsageError("unknown configuration key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

loss::LossWeights TrainConfig::loss_weights() const {
  loss::LossWeights w;
  w.alpha = wo_pn ? 0.0 : alpha;
  w.beta = wo_me ? 0.0 : beta;
  w.wp_negatives = wp_negatives;
  return w;
}

model::ModelConfig TrainConfig::model_config(std::size_t vocab_size) const {
  model::ModelConfig m = paper_scale ? model::ModelConfig::paper_scale(vocab_size) : model::ModelConfig{};
  m.vocab_size = vocab_size;
  if (!paper_scale) {
    m.embed_dim = embed_dim;
    m.word_enc_dim = word_enc_dim;
    m.utt_enc_dim = utt_enc_dim;
    m.dec_dim = dec_dim;
    m.attn_dim = attn_dim;
    m.head_hidden_dim = head_hidden_dim;
  }
  m.dropout_rate = dropout;
  m.init_std = init_std;
  m.bidirectional_word_encoder = bidirectional;
  m.attention = attention;
  return m;
}

void TrainConfig::set(std::string_view key, std::string_view value) { find_entry(key).set(*this, trim(value)); }

std::string TrainConfig::get(std::string_view key) const { return find_entry(key).get(*this); }

void TrainConfig::validate() const {
  loss::LossWeights{alpha, beta}.validate();
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
  };
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(epochs >= 1, "epochs must be at least 1");
  require(vocab_cap >= 1, "vocab_cap must be at least 1");
  require(max_dialogue_tokens >= 1, "max_dialogue_tokens must be at least 1");
  require(beam_width >= 1, "beam_width must be at least 1");
  require(max_len >= 1, "max_len must be at least 1");
  require(init_std > 0.0, "init_std must be positive");
  require(clip_norm >= 0.0, "clip_norm must be non-negative");
  require(embed_dim && word_enc_dim && utt_enc_dim && dec_dim && attn_dim && head_hidden_dim,
          "model dimensions must be at least 1");
}

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const Entry& e : entries()) out.push_back(e.key);
    return out;
  }();
  return k;
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> m;
  for (const Entry& e : entries()) m[e.key] = e.get(*this);
  return m;
}

void apply_config_text(TrainConfig& cfg, std::string_view text) {
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value, got '" + std::string(line) + "'");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

void apply_environment(TrainConfig& cfg) {
  if (const char* seed = std::getenv("HSCJN_SEED"); seed && *seed) cfg.set("seed", seed);
}

}  // namespace hscjn::train
