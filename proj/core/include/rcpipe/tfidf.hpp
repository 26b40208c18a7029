#pragma once

#include <map>
#include <string>
#include <vector>

namespace rcpipe {

// Unigram TF-IDF over sentence-level documents; cosine similarity.
// idf(t) = ln(N / (1 + df(t))) + 1.
class TfidfIndex {
 public:
  static TfidfIndex build(const std::vector<std::string>& sentences);

  // Sparse vector for an arbitrary text, using the index vocabulary.
  std::map<int, double> vectorize(const std::string& text) const;

  // Cosine similarity between a query text and the i-th indexed sentence.
  double similarity(const std::string& query, int sentence_idx) const;

  int sentence_count() const { return static_cast<int>(vectors_.size()); }
  double idf(const std::string& term) const;

 private:
  std::map<std::string, int> vocabulary_;
  std::vector<double> idf_;
  std::vector<std::map<int, double>> vectors_;  // per-sentence tf-idf, L2-normalized
};

}  // namespace rcpipe
