#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "rcpipe/autodiff.hpp"

namespace rcpipe {

// Indices below are local packed-sentence indices (0..N^s-1 in pack order);
// callers map them to global sentence ids via PackedInput.packed_sentence_ids.

struct SentenceScores {
  ad::Var logits;  // N x 1 node on the tape

  std::vector<double> logit_values() const;
  std::vector<double> probs() const;  // sigmoid(logit), strictly in (0,1)
};

struct SampledRationale {
  std::vector<int> hard_mask;            // 1 iff g + log p > g' + log(1-p)
  std::vector<ad::Var> relaxed;          // z_i, 1x1 nodes
  std::vector<std::pair<double, double>> gumbel_pairs;

  std::set<int> extracted() const;
};

// Linear sentence-scoring head over the extraction encoder's marker rows.
class ExtractionHead {
 public:
  ExtractionHead(ad::ParamSet& params, const std::string& prefix, int dim);
  void init_weights(std::uint64_t seed);

  // p_i = sigmoid(W^s s_i + b^s) where s_i is the i-th marker row.
  SentenceScores score_sentences(ad::Tape& tape, ad::Var embeddings,
                                 const std::vector<int>& marker_positions) const;

 private:
  ad::Param* w_;  // d x 1
  ad::Param* b_;  // 1 x 1
};

// {i : p_i > alpha}; possibly empty.
std::set<int> threshold_extract(const std::vector<double>& probs, double alpha);

// One Gumbel sample per sentence. Relaxed value z_i = sigmoid((logit_i +
// g_i - g'_i)/tau); the hard decision follows the comparison rule with ties
// resolved as "not extracted".
SampledRationale gumbel_sample(ad::Tape& tape, const SentenceScores& scores, double tau,
                               std::mt19937_64& rng);

double sample_gumbel(std::mt19937_64& rng);

// Mean binary cross-entropy between extraction probabilities and the gold
// rationale indicator, probabilities clamped by 1e-7.
ad::Var rationale_loss(ad::Tape& tape, const SentenceScores& scores,
                       const std::set<int>& gold);

// Hinge max(0, max_{r in extracted} logit_r - max_{i in answer_sentences}
// logit_i); zero when either set is empty.
ad::Var no_answer_penalty(ad::Tape& tape, const SentenceScores& scores,
                          const std::set<int>& extracted,
                          const std::set<int>& answer_sentences);

}  // namespace rcpipe
