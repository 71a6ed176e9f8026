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

#include "metrics/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "common/errors.hpp"

namespace hscjn::metrics {
namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const Tokens& toks, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

struct CorpusStats {
  std::vector<NgramCounts> orders;
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
};

CorpusStats collect(const Tokens& cand, const Tokens& ref, std::size_t max_n) {
  CorpusStats s;
  for (std::size_t n = 1; n <= max_n; ++n) s.orders.push_back(clipped_ngrams(cand, ref, n));
  s.cand_len = cand.size();
  s.ref_len = ref.size();
  return s;
}

// BLEU-1..max_n from aggregated statistics, 0..1 scale.
std::vector<double> bleu_from_stats(const CorpusStats& s, const BleuOptions& opts) {
  std::vector<double> log_p;
  for (std::size_t k = 0; k < s.orders.size(); ++k) {
    double m = static_cast<double>(s.orders[k].matches);
    double t = static_cast<double>(s.orders[k].total);
    if (k >= 1 && opts.smoothing == BleuSmoothing::kAddOne && s.orders[k].matches == 0) {
      m += 1.0;
      t += 1.0;
    }
    log_p.push_back(m > 0.0 && t > 0.0 ? std::log(m / t) : -std::numeric_limits<double>::infinity());
  }
  double bp = 1.0;
  if (s.cand_len < s.ref_len) {
    bp = s.cand_len == 0 ? 0.0
                         : std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.cand_len));
  }
  std::vector<double> out;
  double acc = 0.0;
  for (std::size_t n = 1; n <= log_p.size(); ++n) {
    acc += log_p[n - 1];
    out.push_back(std::isinf(acc) ? 0.0 : bp * std::exp(acc / static_cast<double>(n)));
  }
  return out;
}

}  // namespace

NgramCounts clipped_ngrams(const Tokens& candidate, const Tokens& reference, std::size_t n) {
  if (n < 1) throw UsageError("n-gram order must be at least 1");
  NgramCounts c;
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  for (const auto& [gram, count] : cand) {
    c.total += count;
    auto it = ref.find(gram);
    if (it != ref.end()) c.matches += std::min(count, it->second);
  }
  return c;
}

std::vector<double> bleu_score(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references,
                               const BleuOptions& opts) {
  if (candidates.empty()) throw UsageError("BLEU over an empty corpus");
  if (candidates.size() != references.size()) {
    throw UsageError("BLEU: " + std::to_string(candidates.size()) + " candidates vs " +
                     std::to_string(references.size()) + " references");
  }
  if (opts.max_n < 1 || opts.max_n > 4) throw UsageError("BLEU max_n must lie in 1..4");

  std::vector<double> scores(opts.max_n, 0.0);
  if (opts.sentence_level) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto b = bleu_from_stats(collect(candidates[i], references[i], opts.max_n), opts);
      for (std::size_t n = 0; n < b.size(); ++n) scores[n] += b[n];
    }
    for (double& s : scores) s = 100.0 * s / static_cast<double>(candidates.size());
    return scores;
  }

  CorpusStats total;
  total.orders.resize(opts.max_n);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CorpusStats s = collect(candidates[i], references[i], opts.max_n);
    for (std::size_t n = 0; n < opts.max_n; ++n) {
      total.orders[n].matches += s.orders[n].matches;
      total.orders[n].total += s.orders[n].total;
    }
    total.cand_len += s.cand_len;
    total.ref_len += s.ref_len;
  }
  scores = bleu_from_stats(total, opts);
  for (double& s : scores) s *= 100.0;
  return scores;
}

std::string Distinct::format() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f/%zu", ratio, count);
  return buf;
}

Distinct distinct_n(const std::vector<Tokens>& responses, std::size_t n, const std::optional<std::string>& ignore_token) {
  if (n < 1 || n > 3) throw UsageError("distinct-n is defined for n in 1..3");
  std::set<std::vector<std::string>> unique;
  Distinct d;
  for (const Tokens& r : responses) {
    for (const auto& [gram, count] : ngram_counts(r, n)) {
      if (ignore_token && std::find(gram.begin(), gram.end(), *ignore_token) != gram.end()) continue;
      unique.insert(gram);
      d.total += count;
    }
  }
  d.count = unique.size();
  d.ratio = d.total == 0 ? 0.0 : static_cast<double>(d.count) / static_cast<double>(d.total);
  return d;
}

bool is_punctuation(const std::string& token) {
  return std::none_of(token.begin(), token.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

std::vector<std::pair<std::string, std::size_t>> word_frequency_profile(const std::vector<Tokens>& responses,
                                                                       std::size_t k, bool exclude_punct) {
  std::map<std::string, std::size_t> freq;
  for (const Tokens& r : responses) {
    for (const std::string& t : r) {
      if (exclude_punct && is_punctuation(t)) continue;
      ++freq[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["pairs"] = pairs;
  j["bleu"] = bleu;
  j["distinct"] = nlohmann::json::array();
  for (std::size_t n = 0; n < distinct.size(); ++n) {
    j["distinct"].push_back({{"n", n + 1},
                             {"ratio", distinct[n].ratio},
                             {"count", distinct[n].count},
                             {"total", distinct[n].total},
                             {"formatted", distinct[n].format()}});
  }
  j["top_words"] = nlohmann::json::array();
  for (const auto& [tok, f] : top_words) j["top_words"].push_back({tok, f});
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.pairs = j.at("pairs").get<std::size_t>();
    r.bleu = j.at("bleu").get<std::array<double, 4>>();
    const auto& d = j.at("distinct");
    if (d.size() != 3) throw FormatError("report must list three distinct-n entries");
    for (std::size_t n = 0; n < 3; ++n) {
      r.distinct[n].ratio = d[n].at("ratio").get<double>();
      r.distinct[n].count = d[n].at("count").get<std::size_t>();
      r.distinct[n].total = d[n].at("total").get<std::size_t>();
    }
    for (const auto& e : j.at("top_words")) r.top_words.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::size_t>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
}

EvalReport evaluate(const std::vector<Tokens>& responses, const std::vector<Tokens>& references, const EvalOptions& opts) {
  EvalReport r;
  r.pairs = responses.size();
  BleuOptions bo = opts.bleu;
  bo.max_n = 4;
  const auto b = bleu_score(responses, references, bo);
  std::copy(b.begin(), b.end(), r.bleu.begin());
  for (std::size_t n = 1; n <= 3; ++n) r.distinct[n - 1] = distinct_n(responses, n, opts.ignore_token);
  r.top_words = word_frequency_profile(responses, opts.top_k, true);
  return r;
}

std::vector<Tokens> read_responses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<Tokens> out;
  std::string line;
  while (std::getline(in, line)) {
    Tokens toks;
    for (std::string& t : corpus::tokenize_utterance(line)) {
      if (t != corpus::kEouDelimiter) toks.push_back(std::move(t));
    }
    out.push_back(std::move(toks));
  }
  return out;
}

EvalReport eval_report(const std::filesystem::path& responses, const std::filesystem::path& references,
                       const EvalOptions& opts) {
  return evaluate(read_responses(responses), read_responses(references), opts);
}

std::string frequency_table(const std::vector<std::pair<std::string, std::size_t>>& profile) {
  std::ostringstream os;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    os << (i + 1) << '\t' << profile[i].first << '\t' << profile[i].second << '\n';
  }
  return os.str();
}

}  // namespace hscjn::metrics
