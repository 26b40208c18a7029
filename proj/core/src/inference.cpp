#include "rcpipe/inference.hpp"

#include <algorithm>
#include <stdexcept>

namespace rcpipe {

std::vector<ParagraphPairScore> rank_paragraphs(const PipelineModel& model,
                                                const std::string& query,
                                                const Passage& passage, int k) {
  int n = passage.paragraph_count();
  if (n < 2) throw std::invalid_argument("ranking needs at least two paragraphs");

  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) scores[i] = model.ranker_score(query, passage.paragraphs[i]);

  std::vector<ParagraphPairScore> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      pairs.push_back(ParagraphPairScore{i, j, scores[i] + scores[j]});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const ParagraphPairScore& a, const ParagraphPairScore& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.first != b.first) return a.first < b.first;
                     return a.second < b.second;
                   });
  if (static_cast<int>(pairs.size()) > k) pairs.resize(k);
  return pairs;
}

namespace {

std::vector<Sentence> pair_sentences(const Passage& passage, const ParagraphPairScore& pair) {
  std::vector<Sentence> out;
  auto all = passage.sentences();
  for (const auto& s : all) {
    auto [pi, si] = passage.locate(s.id);
    (void)si;
    if (pi == pair.first || pi == pair.second) out.push_back(s);
  }
  return out;
}

}  // namespace

PredictionCandidate run_pipeline(const PipelineModel& model, const std::string& query,
                                 const Passage& passage, const ParagraphPairScore& pair,
                                 double alpha, int n_r) {
  std::vector<Sentence> sentences = pair_sentences(passage, pair);

  ad::Tape tape;
  auto extraction = model.run_extraction(tape, query, sentences);
  auto probs = extraction.scores.probs();
  const auto& packed_ids = extraction.packed.packed_sentence_ids;

  std::set<int> local = threshold_extract(probs, alpha);

  auto decode_for = [&](const std::set<int>& local_rationale) {
    std::vector<Sentence> rationale;
    for (int i : local_rationale) {
      for (const auto& s : sentences) {
        if (s.id == packed_ids[i]) rationale.push_back(s);
      }
    }
    ad::Tape answer_tape;
    auto run = model.run_answer(answer_tape, query, rationale);
    PredictionCandidate cand;
    cand.answer = decode_answer(run.scores, run.packed);
    cand.best_span = decode_best_span(run.scores, run.packed);
    if (cand.answer.label == AnswerLabel::Span &&
        (!cand.answer.span_text || cand.answer.span_text->empty())) {
      cand.empty_span = true;
    }
    return cand;
  };

  PredictionCandidate cand = decode_for(local);
  while (cand.answer.label == AnswerLabel::Cna &&
         static_cast<int>(local.size()) < n_r) {
    // Grow by the highest-probability sentence not yet extracted.
    int best = -1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
      if (local.count(i)) continue;
      if (best < 0 || probs[i] > probs[best]) best = i;
    }
    if (best < 0) break;  // all sentences exhausted
    local.insert(best);
    cand = decode_for(local);
  }

  cand.pair = pair;
  for (int i : local) cand.rationale.insert(packed_ids[i]);
  cand.rerank_score = pair.mean_score() - cand.answer.cna_probability;
  return cand;
}

PredictionCandidate rerank_and_answer(const std::vector<PredictionCandidate>& candidates,
                                      double beta, bool apply_beta_gate) {
  if (candidates.empty()) throw std::invalid_argument("no prediction candidates");

  // Span candidates with an empty decoded span rank below everything else.
  int best = -1;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    if (best < 0) {
      best = i;
      continue;
    }
    const auto& a = candidates[i];
    const auto& b = candidates[best];
    if (a.empty_span != b.empty_span) {
      if (!a.empty_span && b.empty_span) best = i;
      continue;
    }
    if (a.rerank_score > b.rerank_score) best = i;
  }

  PredictionCandidate winner = candidates[best];
  auto best_non_cna = [&] {
    int idx = -1;
    for (int i = 0; i < kLabelCount; ++i) {
      if (i == kLabelCna) continue;
      if (idx < 0 || winner.answer.label_scores[i] > winner.answer.label_scores[idx]) idx = i;
    }
    return label_from_index(idx);
  };

  if (apply_beta_gate) {
    if (winner.answer.cna_probability > beta) {
      winner.answer.label = AnswerLabel::Cna;
      winner.answer.span_text.reset();
    } else if (winner.answer.label == AnswerLabel::Cna) {
      winner.answer.label = best_non_cna();
    }
  } else if (winner.answer.label == AnswerLabel::Cna) {
    winner.answer.label = best_non_cna();
  }
  if (winner.answer.label == AnswerLabel::Span && !winner.answer.span_text) {
    if (winner.best_span) {
      winner.answer.span_text = winner.best_span;
    } else {
      // No span available at all; take the best non-CNA, non-Span label.
      int idx = winner.answer.label_scores[kLabelYes] >= winner.answer.label_scores[kLabelNo]
                    ? kLabelYes
                    : kLabelNo;
      winner.answer.label = label_from_index(idx);
    }
  }
  return winner;
}

Prediction infer_example(const PipelineModel& model, const Example& example,
                         const InferenceOptions& options) {
  auto pairs = rank_paragraphs(model, example.query, example.passage, options.k);
  std::vector<PredictionCandidate> candidates;
  for (const auto& pair : pairs) {
    candidates.push_back(
        run_pipeline(model, example.query, example.passage, pair, options.alpha, options.n_r));
  }
  PredictionCandidate winner =
      rerank_and_answer(candidates, options.beta, options.apply_beta_gate);

  Prediction pred;
  pred.example_id = example.id;
  pred.label = winner.answer.label;
  pred.rationale = winner.rationale;
  switch (winner.answer.label) {
    case AnswerLabel::Yes: pred.answer_text = "yes"; break;
    case AnswerLabel::No: pred.answer_text = "no"; break;
    case AnswerLabel::Cna: pred.answer_text = "noanswer"; break;
    case AnswerLabel::Span:
      pred.answer_text = winner.answer.span_text.value_or("");
      break;
  }
  return pred;
}

std::vector<Prediction> infer_dataset(const PipelineModel& model,
                                      const std::vector<Example>& examples,
                                      const InferenceOptions& options) {
  std::vector<Prediction> preds;
  preds.reserve(examples.size());
  for (const auto& e : examples) preds.push_back(infer_example(model, e, options));
  return preds;
}

}  // namespace rcpipe
