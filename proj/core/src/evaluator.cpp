#include "rcpipe/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rcpipe/dataset_builder.hpp"
#include "rcpipe/text.hpp"

namespace rcpipe {

using nlohmann::json;

namespace {

bool is_label_only(AnswerLabel l) { return l != AnswerLabel::Span; }

double token_f1(const std::string& pred_norm, const std::string& gold_norm) {
  auto pred_tokens = text::split_words(pred_norm);
  auto gold_tokens = text::split_words(gold_norm);
  if (pred_tokens.empty() || gold_tokens.empty())
    return pred_tokens.empty() && gold_tokens.empty() ? 1.0 : 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : gold_tokens) counts[t]++;
  int common = 0;
  for (const auto& t : pred_tokens) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      ++common;
      --it->second;
    }
  }
  if (common == 0) return 0.0;
  double precision = static_cast<double>(common) / pred_tokens.size();
  double recall = static_cast<double>(common) / gold_tokens.size();
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

AnswerMetric answer_metrics(const Prediction& pred, const AnswerTarget& gold) {
  // CNA bypasses the string machinery entirely.
  if (pred.label == AnswerLabel::Cna || gold.label == AnswerLabel::Cna) {
    double hit = (pred.label == AnswerLabel::Cna && gold.label == AnswerLabel::Cna) ? 1.0 : 0.0;
    return AnswerMetric{hit, hit};
  }
  if (is_label_only(pred.label) || is_label_only(gold.label)) {
    double hit = pred.label == gold.label ? 1.0 : 0.0;
    return AnswerMetric{hit, hit};
  }
  std::string pred_norm = text::normalize_answer(pred.answer_text);
  std::string gold_norm = text::normalize_answer(gold.span_text.value_or(""));
  AnswerMetric m;
  m.em = pred_norm == gold_norm ? 1.0 : 0.0;
  m.f1 = token_f1(pred_norm, gold_norm);
  return m;
}

SfMetric sf_metrics(const std::set<int>& pred, const std::set<int>& gold) {
  SfMetric m;
  if (gold.empty() && pred.empty()) return SfMetric{1.0, 1.0, 1.0, 1.0};
  std::vector<int> common;
  std::set_intersection(pred.begin(), pred.end(), gold.begin(), gold.end(),
                        std::back_inserter(common));
  double tp = static_cast<double>(common.size());
  m.em = pred == gold ? 1.0 : 0.0;
  m.precision = pred.empty() ? 0.0 : tp / pred.size();
  m.recall = gold.empty() ? 0.0 : tp / gold.size();
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

CnaMetric cna_detection_metrics(const std::vector<AnswerLabel>& preds,
                                const std::vector<AnswerLabel>& golds) {
  if (preds.size() != golds.size())
    throw std::invalid_argument("prediction/gold length mismatch");
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    bool p = preds[i] == AnswerLabel::Cna;
    bool g = golds[i] == AnswerLabel::Cna;
    if (p && g) ++tp;
    else if (p && !g) ++fp;
    else if (!p && g) ++fn;
    else ++tn;
  }
  CnaMetric m;
  double n = static_cast<double>(preds.size());
  m.accuracy = n > 0 ? (tp + tn) / n : 0.0;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

MetricReport evaluate(const std::vector<Example>& gold, const std::vector<Prediction>& preds) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) by_id[p.example_id] = &p;

  MetricReport report;
  std::vector<AnswerLabel> pred_labels, gold_labels;
  for (const auto& g : gold) {
    static const Prediction kMissing{};
    auto it = by_id.find(g.id);
    const Prediction& p = it != by_id.end() ? *it->second : kMissing;

    auto am = answer_metrics(p, g.gold_answer);
    report.answer.em += am.em;
    report.answer.f1 += am.f1;
    auto sm = sf_metrics(p.rationale, g.gold_rationale);
    report.sf.em += sm.em;
    report.sf.precision += sm.precision;
    report.sf.recall += sm.recall;
    report.sf.f1 += sm.f1;
    pred_labels.push_back(p.label);
    gold_labels.push_back(g.gold_answer.label);

    int bucket = CnaStats::bucket(g.absent_gold_sfs);
    auto& row = report.strata.by_absent_class[bucket];
    row.examples++;
    bool predicted_cna = p.label == AnswerLabel::Cna;
    if (predicted_cna) row.cna_predicted++;
    if (bucket == 0) {
      bool sufficient = std::includes(p.rationale.begin(), p.rationale.end(),
                                      g.gold_rationale.begin(), g.gold_rationale.end());
      auto& split = sufficient ? report.strata.sufficient : report.strata.insufficient;
      split.examples++;
      if (predicted_cna) split.cna_predicted++;
    }
    report.example_count++;
  }
  double n = std::max<std::int64_t>(report.example_count, 1);
  report.answer.em *= 100.0 / n;
  report.answer.f1 *= 100.0 / n;
  report.sf.em *= 100.0 / n;
  report.sf.precision *= 100.0 / n;
  report.sf.recall *= 100.0 / n;
  report.sf.f1 *= 100.0 / n;
  auto cm = cna_detection_metrics(pred_labels, gold_labels);
  report.cna = CnaMetric{cm.accuracy * 100.0, cm.precision * 100.0, cm.recall * 100.0,
                         cm.f1 * 100.0};
  return report;
}

std::string MetricReport::to_json() const {
  json obj;
  obj["answer"] = {{"em", answer.em}, {"f1", answer.f1}};
  obj["sf"] = {{"em", sf.em},
               {"precision", sf.precision},
               {"recall", sf.recall},
               {"f1", sf.f1}};
  obj["cna"] = {{"accuracy", cna.accuracy},
                {"precision", cna.precision},
                {"recall", cna.recall},
                {"f1", cna.f1}};
  json strata_obj;
  const char* names[] = {"0", "1", "2", "3+"};
  for (const auto& [bucket, row] : strata.by_absent_class) {
    strata_obj["by_absent_class"][names[bucket]] = {{"examples", row.examples},
                                                    {"cna_ratio", row.cna_ratio()}};
  }
  strata_obj["class0_sufficient"] = {{"examples", strata.sufficient.examples},
                                     {"cna_ratio", strata.sufficient.cna_ratio()}};
  strata_obj["class0_insufficient"] = {{"examples", strata.insufficient.examples},
                                       {"cna_ratio", strata.insufficient.cna_ratio()}};
  obj["strata"] = std::move(strata_obj);
  obj["examples"] = example_count;
  return obj.dump(2);
}

std::string MetricReport::format_tables() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << "Answer / SFs\n";
  os << "  answer EM " << answer.em << "  F1 " << answer.f1 << "\n";
  os << "  SF EM " << sf.em << "  precision " << sf.precision << "  recall " << sf.recall
     << "  F1 " << sf.f1 << "\n";
  os << "CNA detection\n";
  os << "  accuracy " << cna.accuracy << "  precision " << cna.precision << "  recall "
     << cna.recall << "  F1 " << cna.f1 << "\n";
  os << "CNA prediction ratio by absent-gold-SF class\n";
  const char* names[] = {"0 ", "1 ", "2 ", "3+"};
  for (const auto& [bucket, row] : strata.by_absent_class) {
    os << "  " << names[bucket] << "  examples " << row.examples << "  cna-ratio "
       << row.cna_ratio() << "\n";
  }
  os << "Class-0 split by sufficient predicted SFs\n";
  os << "  sufficient    examples " << strata.sufficient.examples << "  cna-ratio "
     << strata.sufficient.cna_ratio() << "\n";
  os << "  insufficient  examples " << strata.insufficient.examples << "  cna-ratio "
     << strata.insufficient.cna_ratio() << "\n";
  return os.str();
}

void save_predictions(const std::vector<Prediction>& preds, const std::vector<Example>& gold,
                      const std::string& path) {
  std::map<std::string, const Example*> by_id;
  for (const auto& g : gold) by_id[g.id] = &g;

  json answer = json::object();
  json sp = json::object();
  for (const auto& p : preds) {
    std::string text;
    switch (p.label) {
      case AnswerLabel::Yes: text = "yes"; break;
      case AnswerLabel::No: text = "no"; break;
      case AnswerLabel::Cna: text = "noanswer"; break;
      case AnswerLabel::Span: text = p.answer_text; break;
    }
    answer[p.example_id] = text;
    json facts = json::array();
    auto it = by_id.find(p.example_id);
    if (it != by_id.end()) {
      for (int id : p.rationale) {
        auto [pi, si] = it->second->passage.locate(id);
        facts.push_back({it->second->passage.paragraphs[pi].title, si});
      }
    }
    sp[p.example_id] = std::move(facts);
  }
  json obj{{"answer", std::move(answer)}, {"sp", std::move(sp)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions " + path);
  out << obj.dump() << '\n';
}

std::vector<Prediction> load_predictions(const std::string& path,
                                         const std::vector<Example>& gold) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions " + path);
  json obj;
  in >> obj;
  std::map<std::string, const Example*> by_id;
  for (const auto& g : gold) by_id[g.id] = &g;

  std::vector<Prediction> preds;
  for (const auto& [id, value] : obj.at("answer").items()) {
    Prediction p;
    p.example_id = id;
    std::string text = value.get<std::string>();
    std::string lowered = text::lowercase(text);
    if (lowered == "yes") {
      p.label = AnswerLabel::Yes;
    } else if (lowered == "no") {
      p.label = AnswerLabel::No;
    } else if (lowered == "noanswer") {
      p.label = AnswerLabel::Cna;
    } else {
      p.label = AnswerLabel::Span;
      p.answer_text = text;
    }
    if (obj.contains("sp") && obj.at("sp").contains(id)) {
      auto it = by_id.find(id);
      for (const auto& fact : obj.at("sp").at(id)) {
        if (it == by_id.end()) break;
        auto gid = it->second->passage.global_id(fact.at(0).get<std::string>(),
                                                 fact.at(1).get<int>());
        if (gid) p.rationale.insert(*gid);
      }
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

}  // namespace rcpipe
