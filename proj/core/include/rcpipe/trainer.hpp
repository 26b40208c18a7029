#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rcpipe/config.hpp"
#include "rcpipe/model.hpp"

namespace rcpipe {

// One end-to-end optimization step, recorded for logging and tests.
struct TrainStepRecord {
  std::string example_id;
  std::set<int> sampled_rationale;  // global sentence ids, post force-include
  AnswerLabel effective_label = AnswerLabel::Cna;
  bool covers_gold = true;   // sampled rationale superset of the gold rationale
  bool forced_sentence = false;  // empty sample repaired by argmax inclusion
  double loss_total = 0.0;
  double loss_answer = 0.0;
  double loss_rationale = 0.0;
  double loss_no_answer = 0.0;
};

struct EpochStats {
  int epoch = 0;
  std::int64_t steps = 0;
  double mean_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::vector<TrainStepRecord> step_log;  // filled by train_e2e only
};

// Global ids of passage sentences whose normalized text contains the gold
// answer span; empty for non-Span targets.
std::set<int> answer_bearing_sentences(const Example& example);

// Appends one negative-sampled CNA example per input example (pool = that
// example's non-gold paragraphs); examples already labelled CNA, or without a
// usable pool, contribute nothing. Per-example seeds derive from `seed`.
std::vector<Example> augment_with_cna(const std::vector<Example>& examples,
                                      std::uint64_t seed);

// Extraction-module pre-training: mean sentence-level binary cross-entropy
// against the gold rationale, over each example's gold paragraph pair.
TrainReport pretrain_extractor(PipelineModel& model, const std::vector<Example>& examples,
                               const TrainingConfig& config);

// Answer-module pre-training on (query, gold rationale) pairs. Pass an
// augmented dataset (see augment_with_cna) to include CNA supervision.
TrainReport pretrain_answerer(PipelineModel& model, const std::vector<Example>& examples,
                              const TrainingConfig& config);

// Paragraph-ranker training: per-paragraph binary cross-entropy against
// gold-paragraph membership over each example's full passage.
TrainReport train_ranker(PipelineModel& model, const std::vector<Example>& examples,
                         const TrainingConfig& config);

// One end-to-end step on one example: sample a hard rationale with the
// straight-through estimator, replace the answer target with CNA when the
// sample misses part of the gold rationale, and backpropagate
// L = L_answer + lambda_r * L_rationale + lambda_na * L_no_answer.
// Gradients accumulate into the model's parameter set; the caller steps the
// optimizer.
TrainStepRecord e2e_step(PipelineModel& model, const Example& example,
                         const TrainingConfig& config, std::mt19937_64& rng);

// Full end-to-end training loop with shuffling, gradient accumulation to
// config.batch_size, and optional answer-module freezing.
TrainReport train_e2e(PipelineModel& model, const std::vector<Example>& examples,
                      const TrainingConfig& config);

}  // namespace rcpipe
