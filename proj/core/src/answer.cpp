#include "rcpipe/answer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rcpipe/text.hpp"

namespace rcpipe {

using ad::Mat;
using ad::Var;

int label_index(AnswerLabel label) {
  switch (label) {
    case AnswerLabel::Yes: return kLabelYes;
    case AnswerLabel::No: return kLabelNo;
    case AnswerLabel::Span: return kLabelSpan;
    case AnswerLabel::Cna: return kLabelCna;
  }
  return kLabelCna;
}

AnswerLabel label_from_index(int idx) {
  switch (idx) {
    case kLabelYes: return AnswerLabel::Yes;
    case kLabelNo: return AnswerLabel::No;
    case kLabelSpan: return AnswerLabel::Span;
    default: return AnswerLabel::Cna;
  }
}

std::array<double, kLabelCount> AnswerScores::label_values() const {
  std::array<double, kLabelCount> out{};
  for (int i = 0; i < kLabelCount; ++i) out[i] = label_logits.value()(0, i);
  return out;
}

std::array<double, kLabelCount> AnswerScores::label_softmax() const {
  auto v = label_values();
  double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (auto& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto& x : v) x /= sum;
  return v;
}

AnswerHead::AnswerHead(ad::ParamSet& params, const std::string& prefix, int dim) {
  w_c_ = &params.add(prefix + ".w_c", dim, kLabelCount);
  b_c_ = &params.add(prefix + ".b_c", 1, kLabelCount);
  w_a_ = &params.add(prefix + ".w_a", dim, 2);
  b_a_ = &params.add(prefix + ".b_a", 1, 2);
}

void AnswerHead::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.02);
  auto fill = [&](ad::Param* p) {
    for (int i = 0; i < p->value.size(); ++i) p->value(i) = dist(rng);
  };
  fill(w_c_);
  b_c_->value.setZero();
  fill(w_a_);
  b_a_->value.setZero();
}

AnswerScores AnswerHead::compute_answer_scores(ad::Tape& tape, Var embeddings,
                                               const PackedInput& packed) const {
  Var cls = tape.slice_rows(embeddings, 0, 1);  // h^a_0
  Var label_logits =
      tape.add_row_broadcast(tape.matmul(cls, tape.leaf(*w_c_)), tape.leaf(*b_c_));
  Var span =
      tape.add_row_broadcast(tape.matmul(embeddings, tape.leaf(*w_a_)), tape.leaf(*b_a_));

  AnswerScores scores{label_logits, span, {}};
  for (int i = 0; i < packed.length(); ++i) {
    if (packed.tokens[i].source == TokenSource::Sentence)
      scores.sentence_token_indices.push_back(i);
  }
  return scores;
}

AnswerPrediction decode_answer(const AnswerScores& scores, const PackedInput& packed,
                               int max_answer_tokens) {
  AnswerPrediction pred;
  pred.label_scores = scores.label_values();
  pred.cna_probability = scores.label_softmax()[kLabelCna];

  int best_label = 0;
  for (int i = 1; i < kLabelCount; ++i) {
    if (pred.label_scores[i] > pred.label_scores[best_label]) best_label = i;
  }
  pred.label = label_from_index(best_label);

  if (pred.label != AnswerLabel::Span) return pred;

  auto span = decode_best_span(scores, packed, max_answer_tokens);
  if (!span) {
    // No rationale segment to point into; fall back to the best non-Span label.
    int fallback = -1;
    for (int i = 0; i < kLabelCount; ++i) {
      if (i == kLabelSpan) continue;
      if (fallback < 0 || pred.label_scores[i] > pred.label_scores[fallback]) fallback = i;
    }
    pred.label = label_from_index(fallback);
    return pred;
  }
  pred.span_text = *span;
  return pred;
}

std::optional<std::string> decode_best_span(const AnswerScores& scores,
                                            const PackedInput& packed,
                                            int max_answer_tokens) {
  const auto& idx = scores.sentence_token_indices;
  if (idx.empty()) return std::nullopt;

  const Mat& span = scores.span_logits.value();
  double best = -std::numeric_limits<double>::infinity();
  int best_i = -1, best_j = -1;
  for (size_t a = 0; a < idx.size(); ++a) {
    for (size_t b = a; b < idx.size() && static_cast<int>(b - a) < max_answer_tokens; ++b) {
      double s = span(idx[a], 0) + span(idx[b], 1);
      if (s > best) {
        best = s;
        best_i = idx[a];
        best_j = idx[b];
      }
    }
  }
  const auto& ti = packed.tokens[best_i];
  const auto& tj = packed.tokens[best_j];
  return text::normalize_whitespace(
      packed.rationale_text.substr(ti.char_start, tj.char_end - ti.char_start));
}

AnswerLossInfo answer_loss(ad::Tape& tape, const AnswerScores& scores,
                           const AnswerTarget& target, const PackedInput& packed) {
  std::vector<Var> terms;
  std::vector<double> coeffs;
  terms.push_back(tape.cross_entropy(scores.label_logits, label_index(target.label)));
  coeffs.push_back(1.0);

  AnswerLossInfo info{terms.front(), false, false};
  if (target.label != AnswerLabel::Span) {
    info.loss = tape.add_scaled(terms, coeffs);
    return info;
  }

  // Map the gold (sentence, char range) to token positions in the packed
  // rationale segment.
  int gstart = -1, gend = -1;
  if (target.span_sentence_id && target.span_char_range) {
    for (size_t i = 0; i < packed.packed_sentence_ids.size(); ++i) {
      if (packed.packed_sentence_ids[i] == *target.span_sentence_id) {
        gstart = packed.sentence_char_ranges[i].first + target.span_char_range->first;
        gend = packed.sentence_char_ranges[i].first + target.span_char_range->second;
        break;
      }
    }
  }
  int start_pos = -1, end_pos = -1;
  const auto& idx = scores.sentence_token_indices;
  if (gstart >= 0) {
    for (size_t k = 0; k < idx.size(); ++k) {
      const auto& t = packed.tokens[idx[k]];
      if (start_pos < 0 && t.char_start <= gstart && gstart < t.char_end)
        start_pos = static_cast<int>(k);
      if (t.char_start < gend && gend <= t.char_end) end_pos = static_cast<int>(k);
    }
  }
  if (start_pos < 0 || end_pos < 0) {
    info.span_target_truncated = true;
    info.loss = tape.add_scaled(terms, coeffs);
    return info;
  }

  Var start_logits = tape.gather_rows(tape.slice_cols(scores.span_logits, 0, 1), idx);
  Var end_logits = tape.gather_rows(tape.slice_cols(scores.span_logits, 1, 1), idx);
  terms.push_back(tape.cross_entropy(start_logits, start_pos));
  coeffs.push_back(1.0);
  terms.push_back(tape.cross_entropy(end_logits, end_pos));
  coeffs.push_back(1.0);
  info.span_terms_included = true;
  info.loss = tape.add_scaled(terms, coeffs);
  return info;
}

}  // namespace rcpipe
