#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcpipe/autodiff.hpp"
#include "rcpipe/corpus.hpp"
#include "rcpipe/packing.hpp"

namespace rcpipe {

// Label slot order in the classification head.
constexpr int kLabelYes = 0;
constexpr int kLabelNo = 1;
constexpr int kLabelSpan = 2;
constexpr int kLabelCna = 3;
constexpr int kLabelCount = 4;

int label_index(AnswerLabel label);
AnswerLabel label_from_index(int idx);

struct AnswerScores {
  ad::Var label_logits;  // 1 x 4, from the [CLS] row
  ad::Var span_logits;   // L x 2, start/end score per token
  std::vector<int> sentence_token_indices;  // rationale-segment token positions

  std::array<double, kLabelCount> label_values() const;
  std::array<double, kLabelCount> label_softmax() const;
};

struct AnswerPrediction {
  AnswerLabel label = AnswerLabel::Cna;
  std::optional<std::string> span_text;
  double cna_probability = 0.0;
  std::array<double, kLabelCount> label_scores{};
};

struct AnswerLossInfo {
  ad::Var loss;
  bool span_terms_included = false;
  bool span_target_truncated = false;
};

class AnswerHead {
 public:
  AnswerHead(ad::ParamSet& params, const std::string& prefix, int dim);
  void init_weights(std::uint64_t seed);

  AnswerScores compute_answer_scores(ad::Tape& tape, ad::Var embeddings,
                                     const PackedInput& packed) const;

 private:
  ad::Param *w_c_, *b_c_;  // d x 4, 1 x 4
  ad::Param *w_a_, *b_a_;  // d x 2, 1 x 2
};

// Label = argmax over label scores (the beta CNA gate is applied later, in
// inference). Span decoding is a joint argmax of a^s_i + a^e_j over
// rationale-segment positions with i <= j and j - i < max_answer_tokens;
// ties prefer smaller i, then smaller j. With no valid span position the
// best non-Span label is emitted instead.
AnswerPrediction decode_answer(const AnswerScores& scores, const PackedInput& packed,
                               int max_answer_tokens = 30);

// Best-scoring span irrespective of the decoded label; nullopt when the
// rationale segment is empty.
std::optional<std::string> decode_best_span(const AnswerScores& scores,
                                            const PackedInput& packed,
                                            int max_answer_tokens = 30);

// Cross-entropy of the label plus, for Span targets, cross-entropies of the
// start and end token over rationale-segment positions. Span targets whose
// aligned tokens were truncated away keep only the label term.
AnswerLossInfo answer_loss(ad::Tape& tape, const AnswerScores& scores,
                           const AnswerTarget& target, const PackedInput& packed);

}  // namespace rcpipe
