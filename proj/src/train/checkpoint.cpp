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

#include "train/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common/errors.hpp"

namespace hscjn::train {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void record(const std::string& name, const tensor::Tensor& t) {
    str(name);
    u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) u32(static_cast<std::uint32_t>(d));
    for (double v : t.values()) {
      const float f = static_cast<float>(v);
      bytes(&f, sizeof f);
    }
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  void bytes(void* p, std::size_t n) {
    if (n > data_.size() - pos_) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > data_.size() - pos_) throw FormatError("checkpoint string length exceeds file size");
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  // Reads one record and checks it against the expected name and shape.
  void record(const std::string& name, tensor::Tensor& into) {
    const std::string got = str();
    if (got != name) throw FormatError("checkpoint record '" + got + "' where '" + name + "' was expected");
    const std::uint32_t rank = u32();
    tensor::Shape shape(rank);
    for (auto& d : shape) d = u32();
    if (shape != into.shape()) {
      throw FormatError("checkpoint record '" + name + "' has shape " + tensor::to_string(shape) + ", expected " +
                        tensor::to_string(into.shape()));
    }
    for (double& v : into.values()) {
      float f = 0.0F;
      bytes(&f, sizeof f);
      v = static_cast<double>(f);
    }
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

nlohmann::json model_config_to_json(const model::ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"embed_dim", c.embed_dim},
          {"word_enc_dim", c.word_enc_dim},
          {"utt_enc_dim", c.utt_enc_dim},
          {"dec_dim", c.dec_dim},
          {"attn_dim", c.attn_dim},
          {"head_hidden_dim", c.head_hidden_dim},
          {"dropout_rate", c.dropout_rate},
          {"init_std", c.init_std},
          {"bidirectional_word_encoder", c.bidirectional_word_encoder},
          {"attention", std::string(model::to_string(c.attention))}};
}

model::ModelConfig model_config_from_json(const nlohmann::json& j) {
  model::ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.word_enc_dim = j.at("word_enc_dim").get<std::size_t>();
  c.utt_enc_dim = j.at("utt_enc_dim").get<std::size_t>();
  c.dec_dim = j.at("dec_dim").get<std::size_t>();
  c.attn_dim = j.at("attn_dim").get<std::size_t>();
  c.head_hidden_dim = j.at("head_hidden_dim").get<std::size_t>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.init_std = j.at("init_std").get<double>();
  c.bidirectional_word_encoder = j.at("bidirectional_word_encoder").get<bool>();
  c.attention = model::parse_attention_form(j.at("attention").get<std::string>());
  return c;
}

std::string serialize_checkpoint(const TrainState& s) {
  nlohmann::json h;
  h["format_version"] = kCheckpointVersion;
  h["model"] = model_config_to_json(s.params.config());
  const auto& toks = s.vocab.tokens();
  h["vocab"] = std::vector<std::string>(toks.begin() + corpus::kNumSpecial, toks.end());
  h["train"] = s.config.to_map();
  h["step"] = s.step;
  h["epoch"] = s.epoch;
  h["adam_t"] = s.adam.t;
  std::ostringstream rng;
  rng << s.rng;
  h["rng"] = rng.str();
  h["best_valid"] = std::isinf(s.best_valid) ? nlohmann::json(nullptr) : nlohmann::json(s.best_valid);
  h["bad_epochs"] = s.bad_epochs;

  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic - 1);
  w.str(h.dump());
  const auto params = s.params.all();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const tensor::Parameter* p : params) w.record(p->name, p->value);
  w.u32(static_cast<std::uint32_t>(2 * params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    w.record("adam.m/" + params[k]->name, s.adam.m[k]);
    w.record("adam.v/" + params[k]->name, s.adam.v[k]);
  }
  return w.take();
}

TrainState deserialize_checkpoint(const std::string& bytes) {
  const std::size_t magic_len = sizeof kCheckpointMagic - 1;
  if (bytes.size() < magic_len || bytes.compare(0, magic_len - 1, kCheckpointMagic, magic_len - 1) != 0) {
    throw FormatError("not an HSCJN checkpoint (bad magic)");
  }
  if (bytes.compare(0, magic_len, kCheckpointMagic) != 0) {
    throw FormatError("unsupported checkpoint version '" + bytes.substr(0, magic_len) + "', expected " +
                      kCheckpointMagic);
  }
  Reader r(bytes);
  char skip[sizeof kCheckpointMagic - 1];
  r.bytes(skip, magic_len);

  nlohmann::json h;
  try {
    h = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint header: ") + e.what());
  }

  try {
    if (h.at("format_version").get<int>() != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint format_version " + h.at("format_version").dump());
    }
    TrainConfig cfg;
    for (const auto& [k, v] : h.at("train").items()) cfg.set(k, v.get<std::string>());
    const model::ModelConfig mc = model_config_from_json(h.at("model"));
    corpus::Vocabulary vocab = corpus::Vocabulary::from_tokens(h.at("vocab").get<std::vector<std::string>>());
    if (vocab.size() != mc.vocab_size) throw FormatError("checkpoint vocabulary size disagrees with model config");

    model::ModelParams params = model::ModelParams::init(mc, 0);
    const auto all = params.all();
    if (r.u32() != all.size()) throw FormatError("checkpoint parameter count mismatch");
    for (tensor::Parameter* p : all) r.record(p->name, p->value);

    Adam adam(all, {});
    if (r.u32() != 2 * all.size()) throw FormatError("checkpoint optimizer record count mismatch");
    for (std::size_t k = 0; k < all.size(); ++k) {
      r.record("adam.m/" + all[k]->name, adam.m[k]);
      r.record("adam.v/" + all[k]->name, adam.v[k]);
    }
    if (!r.done()) throw FormatError("trailing bytes after checkpoint content");
    adam.t = h.at("adam_t").get<std::size_t>();

    std::mt19937_64 rng;
    std::istringstream rs(h.at("rng").get<std::string>());
    rs >> rng;
    if (!rs) throw FormatError("corrupt RNG state in checkpoint");

    TrainState s{cfg, std::move(vocab), std::move(params), std::move(adam), rng};
    s.adam.set_options(s.adam_options());
    s.step = h.at("step").get<std::size_t>();
    s.epoch = h.at("epoch").get<std::size_t>();
    s.best_valid = h.at("best_valid").is_null() ? std::numeric_limits<double>::infinity()
                                                : h.at("best_valid").get<double>();
    s.bad_epochs = h.at("bad_epochs").get<std::size_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint header: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(std::string("invalid checkpoint content: ") + e.what());
  }
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(state);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace hscjn::train
