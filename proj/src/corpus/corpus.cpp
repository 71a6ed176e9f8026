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

#include "corpus/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "common/errors.hpp"

namespace hscjn::corpus {
namespace {

const std::string kReserved[kNumSpecial] = {"<pad>", "<unk>", "<sos>", "<eou>"};

}  // namespace

std::size_t Dialogue::token_count() const {
  std::size_t n = 0;
  for (const Tokens& u : utterances) n += u.size();
  return n;
}

Tokens tokenize_utterance(std::string_view raw) {
  Tokens out;
  std::string cur;
  for (char ch : raw) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

ParsedCorpus parse_corpus_text(std::string_view text) {
  ParsedCorpus out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    Dialogue d;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t cut = line.find(kEouDelimiter, start);
      std::string_view piece = line.substr(start, cut == std::string_view::npos ? line.size() - start : cut - start);
      Tokens toks = tokenize_utterance(piece);
      if (!toks.empty()) d.utterances.push_back(std::move(toks));
      if (cut == std::string_view::npos) break;
      start = cut + kEouDelimiter.size();
    }
    if (d.utterances.size() < 2) {
      ++out.dropped;
    } else {
      out.dialogues.push_back(std::move(d));
    }
  }
  if (out.dialogues.empty()) {
    throw FormatError("corpus contains no dialogue with at least two utterances (" + std::to_string(out.dropped) +
                      " lines dropped)");
  }
  return out;
}

ParsedCorpus parse_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  try {
    return parse_corpus_text(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

FilterResult filter_dialogues(std::vector<Dialogue> dialogues, std::size_t max_tokens) {
  if (max_tokens < 1) throw UsageError("max_tokens must be at least 1");
  FilterResult r;
  for (Dialogue& d : dialogues) {
    if (d.token_count() <= max_tokens) {
      r.kept.push_back(std::move(d));
    } else {
      ++r.removed;
    }
  }
  return r;
}

void Vocabulary::add(std::string token, std::size_t count) {
  const int id = static_cast<int>(tokens_.size());
  if (!index_.emplace(token, id).second) throw FormatError("duplicate vocabulary entry '" + token + "'");
  tokens_.push_back(std::move(token));
  counts_.push_back(count);
}

Vocabulary Vocabulary::build(const std::vector<Dialogue>& dialogues, std::size_t cap) {
  if (dialogues.empty()) throw UsageError("cannot build a vocabulary from an empty corpus");
  if (cap < 1) throw UsageError("vocabulary cap must be at least 1");
  std::unordered_map<std::string, std::size_t> freq;
  for (const Dialogue& d : dialogues) {
    for (const Tokens& u : d.utterances) {
      for (const std::string& t : u) ++freq[t];
    }
  }
  for (const std::string& r : kReserved) freq.erase(r);
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > cap) ranked.resize(cap);

  Vocabulary v;
  for (const std::string& r : kReserved) v.add(r, 0);
  for (auto& [tok, n] : ranked) v.add(std::move(tok), n);
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const std::string& r : kReserved) v.add(r, 0);
  for (const std::string& t : tokens) v.add(t, 0);
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw UsageError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocabulary::decode(std::span<const int> ids) const {
  Tokens out;
  for (int id : ids) {
    if (id == kPad || id == kSos || id == kEou) continue;
    out.push_back(token(id));
  }
  return out;
}

std::string Vocabulary::dump() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < tokens_.size(); ++i) os << tokens_[i] << '\t' << i << '\t' << counts_[i] << '\n';
  return os.str();
}

ExampleMode parse_example_mode(std::string_view name) {
  if (name == "next_turn") return ExampleMode::kNextTurn;
  if (name == "two_prev_source") return ExampleMode::kTwoPrevSource;
  if (name == "two_turn_target") return ExampleMode::kTwoTurnTarget;
  throw UsageError("unknown example mode '" + std::string(name) +
                   "' (expected next_turn, two_prev_source or two_turn_target)");
}

std::string_view to_string(ExampleMode mode) {
  switch (mode) {
    case ExampleMode::kNextTurn:
      return "next_turn";
    case ExampleMode::kTwoPrevSource:
      return "two_prev_source";
    case ExampleMode::kTwoTurnTarget:
      return "two_turn_target";
  }
  return "next_turn";
}

std::vector<TextExample> make_examples(const std::vector<Dialogue>& dialogues, ExampleMode mode) {
  std::vector<TextExample> out;
  for (const Dialogue& d : dialogues) {
    const auto& u = d.utterances;
    // i is the 0-based index of the (first) target turn.
    for (std::size_t i = 1; i < u.size(); ++i) {
      TextExample ex;
      switch (mode) {
        case ExampleMode::kNextTurn:
          ex.context.assign(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(i));
          ex.targets = {u[i]};
          break;
        case ExampleMode::kTwoPrevSource:
          if (i < 2) continue;
          ex.context = {u[i - 2], u[i - 1]};
          ex.targets = {u[i]};
          break;
        case ExampleMode::kTwoTurnTarget:
          if (i + 1 >= u.size()) continue;
          ex.context.assign(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(i));
          ex.targets = {u[i], u[i + 1]};
          break;
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

TrainingExample encode_example(const TextExample& example, const Vocabulary& vocab) {
  if (example.context.empty()) throw UsageError("example has no context utterance");
  if (example.targets.empty()) throw UsageError("example has no target");
  TrainingExample out;
  auto with_eou = [&](const Tokens& toks) {
    std::vector<int> ids = vocab.encode(toks);
    ids.push_back(kEou);
    return ids;
  };
  for (const Tokens& u : example.context) out.context.push_back(with_eou(u));
  for (const Tokens& t : example.targets) out.targets.push_back(with_eou(t));
  return out;
}

TextExample decode_example(const TrainingExample& example, const Vocabulary& vocab) {
  TextExample out;
  for (const auto& u : example.context) out.context.push_back(vocab.decode(u));
  for (const auto& t : example.targets) out.targets.push_back(vocab.decode(t));
  return out;
}

PaddedSequences pad_sequences(const std::vector<std::vector<int>>& seqs) {
  PaddedSequences p;
  p.rows = seqs.size();
  for (const auto& s : seqs) p.cols = std::max(p.cols, s.size());
  p.ids.assign(p.rows * p.cols, kPad);
  p.mask.assign(p.rows * p.cols, 0);
  for (std::size_t r = 0; r < p.rows; ++r) {
    p.lengths.push_back(seqs[r].size());
    for (std::size_t t = 0; t < seqs[r].size(); ++t) {
      if (seqs[r][t] == kPad) throw UsageError("PAD id inside an unpadded sequence");
      p.ids[r * p.cols + t] = seqs[r][t];
      p.mask[r * p.cols + t] = 1;
    }
  }
  return p;
}

std::vector<Batch> batch_examples(const std::vector<TrainingExample>& examples, std::size_t batch_size) {
  if (batch_size < 1) throw UsageError("batch size must be at least 1");
  std::vector<Batch> out;
  for (std::size_t begin = 0; begin < examples.size(); begin += batch_size) {
    const std::size_t end = std::min(examples.size(), begin + batch_size);
    Batch b;
    b.size = end - begin;
    std::size_t max_utts = 0;
    const std::size_t n_targets = examples[begin].targets.size();
    for (std::size_t i = begin; i < end; ++i) {
      max_utts = std::max(max_utts, examples[i].context.size());
      b.utterance_counts.push_back(examples[i].context.size());
      if (examples[i].targets.size() != n_targets) throw UsageError("batch mixes one-turn and two-turn targets");
    }
    for (std::size_t u = 0; u < max_utts; ++u) {
      std::vector<std::vector<int>> slot;
      for (std::size_t i = begin; i < end; ++i) {
        slot.push_back(u < examples[i].context.size() ? examples[i].context[u] : std::vector<int>{});
      }
      b.context.push_back(pad_sequences(slot));
    }
    for (std::size_t k = 0; k < n_targets; ++k) {
      std::vector<std::vector<int>> slot;
      for (std::size_t i = begin; i < end; ++i) slot.push_back(examples[i].targets[k]);
      b.targets.push_back(pad_sequences(slot));
    }
    out.push_back(std::move(b));
  }
  return out;
}

TrainingExample Batch::example(std::size_t i) const {
  if (i >= size) throw UsageError("batch index out of range");
  TrainingExample ex;
  for (std::size_t u = 0; u < utterance_counts[i]; ++u) {
    auto row = context[u].unpadded(i);
    ex.context.emplace_back(row.begin(), row.end());
  }
  for (const PaddedSequences& t : targets) {
    auto row = t.unpadded(i);
    ex.targets.emplace_back(row.begin(), row.end());
  }
  return ex;
}

}  // namespace hscjn::corpus
