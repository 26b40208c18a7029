#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rcpipe/answer.hpp"
#include "rcpipe/corpus.hpp"

namespace rcpipe {

struct AnswerMetric {
  double em = 0.0;
  double f1 = 0.0;
};

struct SfMetric {
  double em = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct CnaMetric {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct StratumRow {
  std::int64_t examples = 0;
  std::int64_t cna_predicted = 0;
  double cna_ratio() const { return examples == 0 ? 0.0 : 100.0 * cna_predicted / examples; }
};

struct StrataReport {
  // CNA-prediction ratio per absent-gold-SF class {0, 1, 2, 3+}.
  std::map<int, StratumRow> by_absent_class;
  // Class-0 examples split by predicted-SFs-cover-gold (sufficient) or not.
  StratumRow sufficient;
  StratumRow insufficient;
};

struct MetricReport {
  AnswerMetric answer;      // percentages
  SfMetric sf;              // percentages
  CnaMetric cna;            // percentages
  StrataReport strata;
  std::int64_t example_count = 0;

  std::string to_json() const;
  std::string format_tables() const;
};

struct Prediction {
  std::string example_id;
  AnswerLabel label = AnswerLabel::Cna;
  std::string answer_text;        // canonical string (yes/no span text); unused for CNA
  std::set<int> rationale;        // global sentence ids
};

// Per-example answer EM/F1 on normalized strings. Yes/No/CNA compare as
// labels; a label-vs-span mismatch scores zero; CNA matches iff both sides
// are CNA.
AnswerMetric answer_metrics(const Prediction& pred, const AnswerTarget& gold);

// Set EM/precision/recall/F1 on sentence ids. Both empty scores all-ones;
// empty gold with nonempty prediction scores zero.
SfMetric sf_metrics(const std::set<int>& pred, const std::set<int>& gold);

// Binary classification metrics with CNA as the positive class.
CnaMetric cna_detection_metrics(const std::vector<AnswerLabel>& preds,
                                const std::vector<AnswerLabel>& golds);

// Aggregate metrics and stratifications over aligned predictions/examples.
MetricReport evaluate(const std::vector<Example>& gold, const std::vector<Prediction>& preds);

// Official-schema prediction JSON: {"answer": {id: str}, "sp": {id: [[title, idx]...]}}.
void save_predictions(const std::vector<Prediction>& preds, const std::vector<Example>& gold,
                      const std::string& path);
std::vector<Prediction> load_predictions(const std::string& path,
                                         const std::vector<Example>& gold);

}  // namespace rcpipe
