#include "rcpipe/tfidf.hpp"

#include <cmath>

#include "rcpipe/text.hpp"

namespace rcpipe {

TfidfIndex TfidfIndex::build(const std::vector<std::string>& sentences) {
  TfidfIndex index;
  std::vector<std::map<std::string, int>> counts(sentences.size());
  std::map<std::string, int> df;
  for (size_t i = 0; i < sentences.size(); ++i) {
    for (const auto& t : text::tfidf_terms(sentences[i])) counts[i][t]++;
    for (const auto& [t, n] : counts[i]) {
      (void)n;
      df[t]++;
    }
  }
  for (const auto& [t, d] : df) {
    int id = static_cast<int>(index.vocabulary_.size());
    index.vocabulary_.emplace(t, id);
    double n = static_cast<double>(sentences.size());
    index.idf_.push_back(std::log(n / (1.0 + d)) + 1.0);
    if (index.idf_.back() < 0.0) index.idf_.back() = 0.0;
  }
  index.vectors_.resize(sentences.size());
  for (size_t i = 0; i < sentences.size(); ++i) {
    double norm2 = 0.0;
    for (const auto& [t, n] : counts[i]) {
      int id = index.vocabulary_.at(t);
      double w = n * index.idf_[id];
      index.vectors_[i][id] = w;
      norm2 += w * w;
    }
    if (norm2 > 0.0) {
      double inv = 1.0 / std::sqrt(norm2);
      for (auto& [id, w] : index.vectors_[i]) w *= inv;
    }
  }
  return index;
}

std::map<int, double> TfidfIndex::vectorize(const std::string& txt) const {
  std::map<int, double> vec;
  for (const auto& t : text::tfidf_terms(txt)) {
    auto it = vocabulary_.find(t);
    if (it != vocabulary_.end()) vec[it->second] += 1.0;
  }
  double norm2 = 0.0;
  for (auto& [id, w] : vec) {
    w *= idf_[id];
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& [id, w] : vec) w *= inv;
  }
  return vec;
}

double TfidfIndex::similarity(const std::string& query, int sentence_idx) const {
  auto q = vectorize(query);
  const auto& s = vectors_.at(sentence_idx);
  double dot = 0.0;
  for (const auto& [id, w] : q) {
    auto it = s.find(id);
    if (it != s.end()) dot += w * it->second;
  }
  return dot;
}

double TfidfIndex::idf(const std::string& term) const {
  auto it = vocabulary_.find(term);
  return it == vocabulary_.end() ? 0.0 : idf_[it->second];
}

}  // namespace rcpipe
