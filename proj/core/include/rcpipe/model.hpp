#pragma once

#include <map>
#include <memory>
#include <string>

#include "rcpipe/answer.hpp"
#include "rcpipe/encoder.hpp"
#include "rcpipe/extraction.hpp"
#include "rcpipe/packing.hpp"
#include "rcpipe/tokenizer.hpp"

namespace rcpipe {

// The full pipeline: an extraction encoder + sentence-scoring head, an
// answer encoder + label/span heads, and a paragraph-ranker encoder + linear
// head. The three encoders share a shape but not weights.
class PipelineModel {
 public:
  PipelineModel(Tokenizer tokenizer, EncoderConfig config);
  PipelineModel(PipelineModel&&) = default;
  PipelineModel& operator=(PipelineModel&&) = default;

  void init_weights(std::uint64_t seed);

  const Tokenizer& tokenizer() const { return tokenizer_; }
  const EncoderConfig& config() const { return config_; }
  ad::ParamSet& params() { return params_; }
  const ad::ParamSet& params() const { return params_; }
  PackingLimits& limits() { return limits_; }
  const PackingLimits& limits() const { return limits_; }

  const Encoder& extraction_encoder() const { return *ext_encoder_; }
  const Encoder& answer_encoder() const { return *ans_encoder_; }
  const Encoder& ranker_encoder() const { return *rank_encoder_; }
  const ExtractionHead& extraction_head() const { return *ext_head_; }
  const AnswerHead& answer_head() const { return *ans_head_; }

  // Extraction forward: packs (query, sentences) and scores every sentence.
  struct ExtractionRun {
    PackedInput packed;
    SentenceScores scores;
  };
  ExtractionRun run_extraction(ad::Tape& tape, const std::string& query,
                               const std::vector<Sentence>& sentences) const;

  // Answer forward over a rationale. `gates` optionally maps a global
  // sentence id to a 1x1 tape node multiplying that sentence's token
  // embeddings (the straight-through coupling point).
  struct AnswerRun {
    PackedInput packed;
    AnswerScores scores;
  };
  AnswerRun run_answer(ad::Tape& tape, const std::string& query,
                       const std::vector<Sentence>& rationale,
                       const std::map<int, ad::Var>* gates = nullptr) const;

  // Per-paragraph ranker score in (0,1), and its pre-sigmoid logit.
  double ranker_score(const std::string& query, const Paragraph& paragraph) const;
  ad::Var ranker_score_var(ad::Tape& tape, const std::string& query,
                           const Paragraph& paragraph) const;
  ad::Var ranker_logit_var(ad::Tape& tape, const std::string& query,
                           const Paragraph& paragraph) const;

  void save(const std::string& path) const;
  static PipelineModel load(const std::string& path);

  // Keys written verbatim into the checkpoint (resolved training config etc.).
  std::map<std::string, std::string> metadata;

 private:
  Tokenizer tokenizer_;
  EncoderConfig config_;
  PackingLimits limits_;
  ad::ParamSet params_;
  std::unique_ptr<Encoder> ext_encoder_, ans_encoder_, rank_encoder_;
  std::unique_ptr<ExtractionHead> ext_head_;
  std::unique_ptr<AnswerHead> ans_head_;
  ad::Param *rank_w_, *rank_b_;
};

}  // namespace rcpipe
