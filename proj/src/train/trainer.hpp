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

// Training loop, evaluation and the ablation grid.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "corpus/corpus.hpp"
#include "loss/hscjn_loss.hpp"
#include "metrics/metrics.hpp"
#include "model/model.hpp"
#include "train/config.hpp"
#include "train/optim.hpp"

namespace hscjn::train {

struct TrainState {
  TrainConfig config;
  corpus::Vocabulary vocab;
  model::ModelParams params;
  Adam adam;
  std::mt19937_64 rng;
  std::size_t step = 0;   // optimizer updates applied
  std::size_t epoch = 0;  // completed epochs
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs = 0;

  // Fresh parameters from config.seed; single precision rounds them to float.
  static TrainState create(const TrainConfig& config, corpus::Vocabulary vocab);

  AdamOptions adam_options() const;
};

struct LogEntry {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::size_t batch = 0;
  loss::LossBreakdown loss;
  double wall_time = 0.0;

  // {"step", "epoch", "batch", "nll", "l_wp", "l_me", "total", "mean_entropy", "wall_time"}
  nlohmann::json to_json() const;
};

// Parse, filter, build examples and encode.
std::vector<corpus::TrainingExample> prepare_examples(const std::filesystem::path& path, const TrainConfig& config,
                                                      const corpus::Vocabulary& vocab);

// One pass over the batches (order shuffled by the state RNG when enabled):
// forward with dropout, backward, optional clipping, Adam. Each entry is also
// written to `log` as one JSON line. Throws NumericError on a non-finite loss.
std::vector<LogEntry> train_epoch(TrainState& state, const std::vector<corpus::Batch>& batches,
                                  std::ostream* log = nullptr);

// Mean total loss without dropout.
double validation_loss(const TrainState& state, const std::vector<corpus::Batch>& batches);
struct DatasetLoss {
  loss::LossBreakdown mean;   // per-example means, as in a batch
  double token_nll = 0.0;     // summed NLL over summed target tokens
  double mean_entropy = 0.0;  // over every decoder step of every example
  std::size_t examples = 0;
};

// Teacher-forced losses without dropout.
DatasetLoss dataset_loss(const TrainState& state, const std::vector<corpus::TrainingExample>& examples);

struct TrainResult {
  TrainState state;
  std::vector<LogEntry> log;
  bool early_stopped = false;
};

// Full run from config paths: vocabulary from `train`, optional `valid` for
// early stopping, optional `resume` checkpoint, `checkpoint` written after
// every epoch, `log` as JSON lines.
TrainResult train(const TrainConfig& config);

// Training on already-encoded examples; the file-free core of train().
TrainResult train_examples(TrainState state, const std::vector<corpus::TrainingExample>& train_set,
                           const std::vector<corpus::TrainingExample>& valid_set, std::ostream* log = nullptr,
                           const std::filesystem::path& checkpoint = {});

struct EvalOutput {
  metrics::EvalReport report;
  std::vector<std::string> responses;   // one line per example, turns joined by " __eou__ "
  std::vector<std::string> references;
};

// Beam-decodes every example (as many turns as it has targets) across worker
// threads and scores the responses against the targets.
EvalOutput evaluate_split(const model::ModelParams& params, const corpus::Vocabulary& vocab,
                          const std::vector<corpus::TrainingExample>& examples, const TrainConfig& config);

struct AblationRun {
  std::string label;  // HSCJN, HSCJN(w/o ME), HSCJN(w/o PN), HRED
  std::string dir;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<LogEntry> log;
  metrics::EvalReport report;
};

// Trains the four variants under one seed and evaluates each on `test`
// (falling back to `valid`, then `train`). Artifacts go under out_dir/<dir>/.
std::vector<AblationRun> ablate(const TrainConfig& config);
nlohmann::json ablation_summary(const std::vector<AblationRun>& runs);

}  // namespace hscjn::train
