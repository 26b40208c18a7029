#pragma once

#include <set>
#include <string>
#include <vector>

#include "rcpipe/evaluator.hpp"
#include "rcpipe/model.hpp"

namespace rcpipe {

struct ParagraphPairScore {
  int first = 0;   // paragraph indices, first < second
  int second = 0;
  double score = 0.0;          // S_first + S_second
  double mean_score() const { return score / 2.0; }
};

struct PredictionCandidate {
  ParagraphPairScore pair;
  AnswerPrediction answer;
  std::set<int> rationale;     // global sentence ids
  double rerank_score = 0.0;   // (S_i + S_j)/2 - cna_probability
  bool empty_span = false;     // Span label with an empty decoded span
  std::optional<std::string> best_span;  // top span regardless of label
};

// Scores every paragraph with the ranker head, ranks all C(N^p, 2) pairs by
// summed score, and keeps the top K. Ties break lexicographically on (i, j).
std::vector<ParagraphPairScore> rank_paragraphs(const PipelineModel& model,
                                                const std::string& query,
                                                const Passage& passage, int k);

// One paragraph pair through the pipeline: threshold extraction, answer
// decoding, then argmax-probability rationale growth while the decoded label
// stays CNA and |rationale| < n_r.
PredictionCandidate run_pipeline(const PipelineModel& model, const std::string& query,
                                 const Passage& passage, const ParagraphPairScore& pair,
                                 double alpha, int n_r);

// Picks the candidate with the best rerank score. With `apply_beta_gate`,
// the output label is CNA iff the winner's CNA probability exceeds beta;
// without it (distractor setting) the best non-CNA label is emitted.
PredictionCandidate rerank_and_answer(const std::vector<PredictionCandidate>& candidates,
                                      double beta, bool apply_beta_gate = true);

struct InferenceOptions {
  double alpha = 0.5;
  double beta = 0.5;
  int k = 3;
  int n_r = 5;
  bool apply_beta_gate = true;
};

// Full per-example inference (Algorithm: rank pairs, run each, rerank).
Prediction infer_example(const PipelineModel& model, const Example& example,
                         const InferenceOptions& options);

std::vector<Prediction> infer_dataset(const PipelineModel& model,
                                      const std::vector<Example>& examples,
                                      const InferenceOptions& options);

}  // namespace rcpipe
