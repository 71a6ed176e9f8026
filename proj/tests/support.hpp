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

// Shared fixtures for the test binaries.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "model/model.hpp"
#include "tensor/tensor.hpp"

namespace hscjn::testing {

inline tensor::Tensor random_tensor(tensor::Shape shape, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  tensor::Tensor t(std::move(shape));
  for (double& v : t.values()) v = u(rng);
  return t;
}

// vocab 7 and every hidden size 4; large init so gradients are not tiny.
inline model::ModelConfig tiny_config(std::size_t vocab = 7) {
  model::ModelConfig c;
  c.vocab_size = vocab;
  c.embed_dim = 4;
  c.word_enc_dim = 4;
  c.utt_enc_dim = 4;
  c.dec_dim = 4;
  c.attn_dim = 4;
  c.head_hidden_dim = 4;
  c.dropout_rate = 0.0;
  c.init_std = 0.5;
  return c;
}

// Example over ids >= kNumSpecial; every utterance and target ends in EOU.
inline corpus::TrainingExample tiny_example(std::vector<std::vector<int>> context, std::vector<std::vector<int>> targets) {
  corpus::TrainingExample ex;
  for (auto& u : context) {
    u.push_back(corpus::kEou);
    ex.context.push_back(std::move(u));
  }
  for (auto& t : targets) {
    t.push_back(corpus::kEou);
    ex.targets.push_back(std::move(t));
  }
  return ex;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("hscjn_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Twenty short small-talk dialogues with a 40-word vocabulary.
inline std::string toy_corpus_20() {
  static const char* const lines[] = {
      "hi there __eou__ hello how are you __eou__ fine thanks __eou__",
      "good morning __eou__ morning did you sleep well __eou__ yes very well __eou__",
      "what is your name __eou__ my name is sam __eou__ nice to meet you sam __eou__",
      "do you like tea __eou__ i like coffee more __eou__",
      "where do you live __eou__ i live in the city __eou__ is it big __eou__ very big __eou__",
      "are you hungry __eou__ yes let us eat __eou__",
      "it is cold today __eou__ take a coat __eou__ thanks i will __eou__",
      "can you help me __eou__ sure what do you need __eou__ a pen please __eou__",
      "how old are you __eou__ i am ten __eou__",
      "see you later __eou__ bye for now __eou__",
      "is the shop open __eou__ it opens at nine __eou__ thank you __eou__",
      "i lost my key __eou__ look under the bed __eou__ found it __eou__",
      "what time is it __eou__ it is noon __eou__",
      "do you have a dog __eou__ i have a cat __eou__ what is its name __eou__ tom __eou__",
      "the movie was great __eou__ i liked the music __eou__",
      "where is the bus __eou__ it is late again __eou__ let us walk __eou__",
      "happy birthday __eou__ thank you so much __eou__",
      "can i sit here __eou__ yes please sit __eou__",
      "the rain stopped __eou__ let us go out __eou__ good idea __eou__",
      "what did you eat __eou__ rice and fish __eou__",
  };
  std::string s;
  for (const char* l : lines) s += std::string(l) + "\n";
  return s;
}

// Dialogues drawn from a small generative grammar; `n_examples` next-turn
// examples in total, deterministic in the seed.
inline std::string synthetic_corpus(std::size_t n_examples, std::uint64_t seed) {
  static const std::vector<std::string> subjects = {"i", "you", "we", "they", "she", "he"};
  static const std::vector<std::string> verbs = {"like", "want", "see", "have", "need", "love", "eat", "buy"};
  static const std::vector<std::string> objects = {"tea", "coffee", "the cat", "a dog", "rice", "music",
                                                   "a book", "the park", "fish", "bread", "the city", "a car"};
  static const std::vector<std::string> replies = {"yes", "no", "maybe", "sure", "really", "ok", "why", "good"};
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::string out;
  std::size_t made = 0;
  while (made < n_examples) {
    const std::size_t turns = std::min<std::size_t>(2 + rng() % 3, n_examples - made + 1);
    for (std::size_t t = 0; t < turns; ++t) {
      if (rng() % 2 == 0) {
        out += pick(subjects) + " " + pick(verbs) + " " + pick(objects);
      } else {
        out += pick(replies) + " " + pick(subjects) + " " + pick(verbs) + " " + pick(objects);
      }
      out += " __eou__ ";
    }
    out += "\n";
    made += turns - 1;
  }
  return out;
}

}  // namespace hscjn::testing
