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

#include "train/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <optional>
#include <thread>

#include "common/errors.hpp"
#include "decode/decode.hpp"
#include "train/checkpoint.hpp"

namespace hscjn::train {
namespace {

using Clock = std::chrono::steady_clock;

std::vector<corpus::TrainingExample> batch_members(const corpus::Batch& b) {
  std::vector<corpus::TrainingExample> out;
  out.reserve(b.size);
  for (std::size_t i = 0; i < b.size; ++i) out.push_back(b.example(i));
  return out;
}

std::string join(const corpus::Tokens& toks) {
  std::string s;
  for (const auto& t : toks) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

std::string format_breakdown(const loss::LossBreakdown& b) {
  std::ostringstream os;
  os.precision(17);
  os << "nll=" << b.nll << " l_wp=" << b.l_wp << " l_me=" << b.l_me << " total=" << b.total;
  return os.str();
}

}  // namespace

TrainState TrainState::create(const TrainConfig& config, corpus::Vocabulary vocab) {
  config.validate();
  model::ModelParams params = model::ModelParams::init(config.model_config(vocab.size()), config.seed);
  if (config.precision == Precision::kSingle) {
    for (Parameter* p : params.all()) round_to_single(p->value);
  }
  AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  opts.single_precision = config.precision == Precision::kSingle;
  Adam adam(params.all(), opts);
  return TrainState{config, std::move(vocab), std::move(params), std::move(adam), std::mt19937_64(config.seed)};
}

AdamOptions TrainState::adam_options() const {
  AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  opts.single_precision = config.precision == Precision::kSingle;
  return opts;
}

nlohmann::json LogEntry::to_json() const {
  return {{"step", step},           {"epoch", epoch},       {"batch", batch},
          {"nll", loss.nll},        {"l_wp", loss.l_wp},    {"l_me", loss.l_me},
          {"total", loss.total},    {"mean_entropy", loss.mean_entropy}, {"wall_time", wall_time}};
}

std::vector<corpus::TrainingExample> prepare_examples(const std::filesystem::path& path, const TrainConfig& config,
                                                      const corpus::Vocabulary& vocab) {
  corpus::ParsedCorpus parsed = corpus::parse_corpus(path);
  corpus::FilterResult kept = corpus::filter_dialogues(std::move(parsed.dialogues), config.max_dialogue_tokens);
  std::vector<corpus::TrainingExample> out;
  for (const auto& ex : corpus::make_examples(kept.kept, config.mode)) out.push_back(corpus::encode_example(ex, vocab));
  return out;
}

std::vector<LogEntry> train_epoch(TrainState& state, const std::vector<corpus::Batch>& batches, std::ostream* log) {
  const loss::LossWeights weights = state.config.loss_weights();
  std::vector<std::size_t> order(batches.size());
  std::iota(order.begin(), order.end(), 0);
  if (state.config.shuffle) std::shuffle(order.begin(), order.end(), state.rng);

  const auto t0 = Clock::now();
  std::vector<LogEntry> entries;
  for (std::size_t bi : order) {
    const std::vector<corpus::TrainingExample> exs = batch_members(batches[bi]);
    tensor::Tape tape;
    const model::ForwardOptions fwd{true, &state.rng};
    loss::BatchLoss bl = loss::batch_loss(tape, state.params, exs, weights, fwd);
    const loss::LossBreakdown& b = bl.breakdown;
    if (!std::isfinite(b.total) || !std::isfinite(b.nll) || !std::isfinite(b.l_wp) || !std::isfinite(b.l_me)) {
      throw NumericError("non-finite loss at step " + std::to_string(state.step) + ", epoch " +
                         std::to_string(state.epoch) + ", batch " + std::to_string(bi) + ": " + format_breakdown(b));
    }
    state.params.zero_grad();
    tape.backward(bl.total);
    if (state.config.clip_norm > 0.0) clip_grad_norm(state.params.all(), state.config.clip_norm);
    state.adam.step(state.params.all());

    LogEntry e{state.step, state.epoch, bi, b, std::chrono::duration<double>(Clock::now() - t0).count()};
    e.loss.step_entropies.clear();
    ++state.step;
    if (log != nullptr) *log << e.to_json().dump() << '\n';
    entries.push_back(std::move(e));
  }
  if (log != nullptr) log->flush();
  return entries;
}

double validation_loss(const TrainState& state, const std::vector<corpus::Batch>& batches) {
  const loss::LossWeights weights = state.config.loss_weights();
  double sum = 0.0;
  std::size_t n = 0;
  for (const corpus::Batch& b : batches) {
    tensor::Tape tape(false);
    const loss::BatchLoss bl = loss::batch_loss(tape, state.params, batch_members(b), weights);
    sum += bl.breakdown.total * static_cast<double>(b.size);
    n += b.size;
  }
  if (n == 0) throw UsageError("validation set is empty");
  return sum / static_cast<double>(n);
}

DatasetLoss dataset_loss(const TrainState& state, const std::vector<corpus::TrainingExample>& examples) {
  if (examples.empty()) throw UsageError("dataset is empty");
  const loss::LossWeights weights = state.config.loss_weights();
  double nll = 0.0, l_wp = 0.0, l_me = 0.0, hsum = 0.0;
  std::size_t tokens = 0, steps = 0;
  for (const auto& ex : examples) {
    tensor::Tape tape(false);
    const loss::ExampleLoss l = loss::example_loss(tape, state.params, ex, weights);
    nll += l.nll.item();
    l_wp += l.l_wp.item();
    l_me += l.l_me.item();
    tokens += l.tokens;
    for (double h : l.step_entropies) hsum += h;
    steps += l.step_entropies.size();
  }
  const double n = static_cast<double>(examples.size());
  DatasetLoss out;
  out.mean = loss::loss_total(nll / n, l_wp / n, l_me / n, weights.alpha, weights.beta);
  out.mean.tokens = tokens;
  out.token_nll = tokens == 0 ? 0.0 : nll / static_cast<double>(tokens);
  out.mean_entropy = steps == 0 ? 0.0 : hsum / static_cast<double>(steps);
  out.mean.mean_entropy = out.mean_entropy;
  out.examples = examples.size();
  return out;
}

TrainResult train_examples(TrainState state, const std::vector<corpus::TrainingExample>& train_set,
                           const std::vector<corpus::TrainingExample>& valid_set, std::ostream* log,
                           const std::filesystem::path& checkpoint) {
  if (train_set.empty()) throw UsageError("training set is empty");
  const std::vector<corpus::Batch> batches = corpus::batch_examples(train_set, state.config.batch_size);
  const std::vector<corpus::Batch> valid_batches =
      valid_set.empty() ? std::vector<corpus::Batch>{} : corpus::batch_examples(valid_set, state.config.batch_size);
  const bool early_stopping = !state.config.fixed_epochs && !valid_batches.empty();

  std::vector<LogEntry> all;
  bool stopped = false;
  while (state.epoch < state.config.epochs) {
    if (early_stopping && state.bad_epochs >= state.config.patience) {
      stopped = true;
      break;
    }
    std::vector<LogEntry> entries = train_epoch(state, batches, log);
    all.insert(all.end(), std::make_move_iterator(entries.begin()), std::make_move_iterator(entries.end()));
    ++state.epoch;
    if (early_stopping) {
      const double v = validation_loss(state, valid_batches);
      if (v < state.best_valid) {
        state.best_valid = v;
        state.bad_epochs = 0;
      } else {
        ++state.bad_epochs;
      }
    }
    if (!checkpoint.empty()) save_checkpoint(state, checkpoint);
  }
  if (early_stopping && state.epoch < state.config.epochs && state.bad_epochs >= state.config.patience) stopped = true;
  return TrainResult{std::move(state), std::move(all), stopped};
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  if (config.train_path.empty()) throw UsageError("a training corpus is required");

  std::optional<TrainState> state;
  if (!config.resume_path.empty()) {
    TrainState s = load_checkpoint(config.resume_path);
    const model::ModelConfig want = config.model_config(s.vocab.size());
    if (!(want == s.params.config())) {
      throw UsageError("model settings disagree with the checkpoint being resumed");
    }
    s.config = config;
    s.adam.set_options(s.adam_options());
    state.emplace(std::move(s));
  } else {
    corpus::ParsedCorpus parsed = corpus::parse_corpus(config.train_path);
    corpus::FilterResult kept = corpus::filter_dialogues(std::move(parsed.dialogues), config.max_dialogue_tokens);
    if (kept.kept.empty()) throw UsageError("no training dialogue survives the length filter");
    state.emplace(TrainState::create(config, corpus::Vocabulary::build(kept.kept, config.vocab_cap)));
  }

  const auto train_set = prepare_examples(config.train_path, config, state->vocab);
  const auto valid_set = config.valid_path.empty() ? std::vector<corpus::TrainingExample>{}
                                                   : prepare_examples(config.valid_path, config, state->vocab);

  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (!config.log_path.empty()) {
    log_file.open(config.log_path, config.resume_path.empty() ? std::ios::trunc : std::ios::app);
    if (!log_file) throw IoError("cannot open log file " + config.log_path);
    log = &log_file;
  }
  return train_examples(std::move(*state), train_set, valid_set, log, config.checkpoint_path);
}

EvalOutput evaluate_split(const model::ModelParams& params, const corpus::Vocabulary& vocab,
                          const std::vector<corpus::TrainingExample>& examples, const TrainConfig& config) {
  if (examples.empty()) throw UsageError("nothing to evaluate");
  decode::DecodeOptions opts;
  opts.width = config.beam_width;
  opts.max_len = config.max_len;
  opts.length_norm = config.length_norm;

  const std::size_t n = examples.size();
  std::vector<std::vector<std::vector<int>>> generated(n);
  std::size_t workers = config.threads != 0 ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < n; i = next++) {
            generated[i] = decode::generate_turns(params, examples[i].context, examples[i].targets.size(), opts);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalOutput out;
  std::vector<corpus::Tokens> responses, references;
  for (std::size_t i = 0; i < n; ++i) {
    corpus::Tokens resp, ref;
    std::string resp_line, ref_line;
    for (std::size_t k = 0; k < generated[i].size(); ++k) {
      const corpus::Tokens turn = vocab.decode(generated[i][k]);
      const corpus::Tokens target = vocab.decode(examples[i].targets[k]);
      resp.insert(resp.end(), turn.begin(), turn.end());
      ref.insert(ref.end(), target.begin(), target.end());
      if (k > 0) {
        resp_line += " __eou__ ";
        ref_line += " __eou__ ";
      }
      resp_line += join(turn);
      ref_line += join(target);
    }
    responses.push_back(std::move(resp));
    references.push_back(std::move(ref));
    out.responses.push_back(std::move(resp_line));
    out.references.push_back(std::move(ref_line));
  }
  metrics::EvalOptions eo;
  eo.bleu.sentence_level = config.sentence_bleu;
  out.report = metrics::evaluate(responses, references, eo);
  return out;
}

std::vector<AblationRun> ablate(const TrainConfig& config) {
  config.validate();
  if (config.train_path.empty()) throw UsageError("a training corpus is required");
  if (config.out_dir.empty()) throw UsageError("ablate needs an output directory");

  struct Variant {
    const char* label;
    const char* dir;
    bool wo_me;
    bool wo_pn;
  };
  constexpr Variant variants[] = {
      {"HSCJN", "hscjn", false, false},
      {"HSCJN(w/o ME)", "wo_me", true, false},
      {"HSCJN(w/o PN)", "wo_pn", false, true},
      {"HRED", "baseline", true, true},
  };

  corpus::ParsedCorpus parsed = corpus::parse_corpus(config.train_path);
  corpus::FilterResult kept = corpus::filter_dialogues(std::move(parsed.dialogues), config.max_dialogue_tokens);
  if (kept.kept.empty()) throw UsageError("no training dialogue survives the length filter");
  const corpus::Vocabulary vocab = corpus::Vocabulary::build(kept.kept, config.vocab_cap);
  const auto train_set = prepare_examples(config.train_path, config, vocab);
  const auto valid_set = config.valid_path.empty() ? std::vector<corpus::TrainingExample>{}
                                                   : prepare_examples(config.valid_path, config, vocab);
  const auto test_set = !config.test_path.empty() ? prepare_examples(config.test_path, config, vocab)
                        : !valid_set.empty()      ? valid_set
                                                  : train_set;

  std::vector<AblationRun> runs;
  for (const Variant& v : variants) {
    TrainConfig c = config;
    c.wo_me = config.wo_me || v.wo_me;
    c.wo_pn = config.wo_pn || v.wo_pn;
    const std::filesystem::path dir = std::filesystem::path(config.out_dir) / v.dir;
    std::filesystem::create_directories(dir);
    c.resume_path.clear();
    c.checkpoint_path = (dir / "model.ckpt").string();
    c.log_path = (dir / "train.log").string();

    std::ofstream log(c.log_path, std::ios::trunc);
    if (!log) throw IoError("cannot open log file " + c.log_path);
    TrainResult r = train_examples(TrainState::create(c, vocab), train_set, valid_set, &log, c.checkpoint_path);
    EvalOutput eval = evaluate_split(r.state.params, vocab, test_set, c);

    std::ofstream resp(dir / "responses.txt", std::ios::trunc);
    for (const auto& line : eval.responses) resp << line << '\n';
    std::ofstream rep(dir / "report.json", std::ios::trunc);
    rep << eval.report.to_json().dump(2) << '\n';
    if (!resp || !rep) throw IoError("cannot write results under " + dir.string());

    const loss::LossWeights w = c.loss_weights();
    runs.push_back(AblationRun{v.label, v.dir, w.alpha, w.beta, std::move(r.log), eval.report});
  }
  return runs;
}

nlohmann::json ablation_summary(const std::vector<AblationRun>& runs) {
  nlohmann::json out = nlohmann::json::array();
  for (const AblationRun& r : runs) {
    nlohmann::json j;
    j["label"] = r.label;
    j["dir"] = r.dir;
    j["alpha"] = r.alpha;
    j["beta"] = r.beta;
    j["steps"] = r.log.size();
    if (!r.log.empty()) j["step0"] = r.log.front().to_json();
    j["report"] = r.report.to_json();
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace hscjn::train
