#include "rcpipe/extraction.hpp"

#include <cmath>
#include <random>

namespace rcpipe {

using ad::Mat;
using ad::Var;

std::vector<double> SentenceScores::logit_values() const {
  const Mat& v = logits.value();
  std::vector<double> out(v.rows());
  for (int i = 0; i < v.rows(); ++i) out[i] = v(i, 0);
  return out;
}

std::vector<double> SentenceScores::probs() const {
  auto out = logit_values();
  for (auto& v : out) v = 1.0 / (1.0 + std::exp(-v));
  return out;
}

std::set<int> SampledRationale::extracted() const {
  std::set<int> out;
  for (int i = 0; i < static_cast<int>(hard_mask.size()); ++i) {
    if (hard_mask[i]) out.insert(i);
  }
  return out;
}

ExtractionHead::ExtractionHead(ad::ParamSet& params, const std::string& prefix, int dim) {
  w_ = &params.add(prefix + ".w_s", dim, 1);
  b_ = &params.add(prefix + ".b_s", 1, 1);
}

void ExtractionHead::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.02);
  for (int i = 0; i < w_->value.size(); ++i) w_->value(i) = dist(rng);
  b_->value.setZero();
}

SentenceScores ExtractionHead::score_sentences(ad::Tape& tape, Var embeddings,
                                               const std::vector<int>& marker_positions) const {
  Var markers = tape.gather_rows(embeddings, marker_positions);  // N x d
  Var logits = tape.matmul(markers, tape.leaf(*w_));             // N x 1
  // Broadcast the scalar bias over sentences.
  Var ones = tape.constant(Mat::Ones(static_cast<int>(marker_positions.size()), 1));
  logits = tape.add(logits, tape.matmul(ones, tape.leaf(*b_)));
  return SentenceScores{logits};
}

std::set<int> threshold_extract(const std::vector<double>& probs, double alpha) {
  std::set<int> out;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    if (probs[i] > alpha) out.insert(i);
  }
  return out;
}

double sample_gumbel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = uniform(rng);
  while (u <= 0.0 || u >= 1.0) u = uniform(rng);  // measure-zero guard
  return -std::log(-std::log(u));
}

SampledRationale gumbel_sample(ad::Tape& tape, const SentenceScores& scores, double tau,
                               std::mt19937_64& rng) {
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
  SampledRationale sample;
  auto logits = scores.logit_values();
  int n = static_cast<int>(logits.size());
  for (int i = 0; i < n; ++i) {
    double g = sample_gumbel(rng);
    double gp = sample_gumbel(rng);
    sample.gumbel_pairs.emplace_back(g, gp);
    // g + log p > g' + log(1-p)  <=>  logit + g - g' > 0; ties not extracted.
    double margin = logits[i] + g - gp;
    sample.hard_mask.push_back(margin > 0.0 ? 1 : 0);

    Var logit_i = tape.select(scores.logits, i, 0);
    Var shifted = tape.add(logit_i, tape.constant(Mat::Constant(1, 1, g - gp)));
    sample.relaxed.push_back(tape.sigmoid(tape.scale(shifted, 1.0 / tau)));
  }
  return sample;
}

ad::Var rationale_loss(ad::Tape& tape, const SentenceScores& scores, const std::set<int>& gold) {
  int n = scores.logits.rows();
  std::vector<double> targets(n, 0.0);
  for (int i : gold) {
    if (i >= 0 && i < n) targets[i] = 1.0;
  }
  return tape.bce_with_logits_mean(scores.logits, targets);
}

ad::Var no_answer_penalty(ad::Tape& tape, const SentenceScores& scores,
                          const std::set<int>& extracted,
                          const std::set<int>& answer_sentences) {
  if (extracted.empty() || answer_sentences.empty()) {
    return tape.constant(Mat::Zero(1, 1));
  }
  auto logits = scores.logit_values();
  auto argmax_over = [&](const std::set<int>& idx) {
    int best = *idx.begin();
    for (int i : idx) {
      if (logits[i] > logits[best]) best = i;
    }
    return best;
  };
  int ext_best = argmax_over(extracted);
  int ans_best = argmax_over(answer_sentences);
  Var gap = tape.sub(tape.select(scores.logits, ext_best, 0),
                     tape.select(scores.logits, ans_best, 0));
  return tape.relu(gap);
}

}  // namespace rcpipe
