#include "rcpipe/dataset_builder.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "rcpipe/text.hpp"

namespace rcpipe {

std::int64_t CnaStats::total() const {
  std::int64_t n = 0;
  for (const auto& [k, v] : counts) {
    (void)k;
    n += v;
  }
  return n;
}

std::string CnaStats::to_json() const {
  nlohmann::json obj;
  obj["absent_gold_sfs"] = {{"0", counts.at(0)},
                            {"1", counts.at(1)},
                            {"2", counts.at(2)},
                            {"3+", counts.at(3)}};
  obj["excluded"] = excluded;
  obj["total"] = total();
  return obj.dump(2);
}

namespace {

// (title, sentence index) pairs of the example's gold rationale.
std::vector<std::pair<std::string, int>> rationale_keys(const Example& e) {
  std::vector<std::pair<std::string, int>> keys;
  for (int id : e.gold_rationale) {
    auto [pi, si] = e.passage.locate(id);
    keys.emplace_back(e.passage.paragraphs[pi].title, si);
  }
  return keys;
}

}  // namespace

BuildResult build_fullwiki_cna(const std::vector<Example>& gold,
                               const std::vector<Example>& retrieved) {
  std::unordered_map<std::string, const Example*> by_id;
  for (const auto& r : retrieved) by_id.emplace(r.id, &r);

  BuildResult result;
  for (const auto& g : gold) {
    if (g.gold_paragraph_titles.empty() || g.gold_rationale.empty()) {
      result.stats.excluded++;
      continue;
    }
    auto it = by_id.find(g.id);
    if (it == by_id.end()) {
      result.stats.excluded++;
      continue;
    }
    Example out = g;
    out.passage = it->second->passage;
    out.gold_rationale.clear();

    int absent = 0;
    for (const auto& [title, si] : rationale_keys(g)) {
      auto gid = out.passage.global_id(title, si);
      if (gid) {
        out.gold_rationale.insert(*gid);
      } else {
        ++absent;
      }
    }
    out.absent_gold_sfs = absent;
    if (absent > 0) {
      out.gold_answer = AnswerTarget{AnswerLabel::Cna, std::nullopt, std::nullopt, std::nullopt};
    } else if (out.gold_answer.label == AnswerLabel::Span) {
      out.gold_answer.span_char_range.reset();
      out.gold_answer.span_sentence_id.reset();
      align_answer_span(out);
    }
    result.stats.counts[CnaStats::bucket(absent)]++;
    result.examples.push_back(std::move(out));
  }
  return result;
}

std::optional<Example> negative_sample_cna(const Example& example,
                                           const std::vector<Paragraph>& pool,
                                           std::uint64_t rng_seed) {
  if (pool.empty()) return std::nullopt;

  // Index every pool sentence; remember its (paragraph, sentence) origin.
  std::vector<std::string> sentences;
  std::vector<std::pair<int, int>> origin;
  for (int pi = 0; pi < static_cast<int>(pool.size()); ++pi) {
    for (int si = 0; si < static_cast<int>(pool[pi].sentences.size()); ++si) {
      sentences.push_back(pool[pi].sentences[si]);
      origin.emplace_back(pi, si);
    }
  }
  if (sentences.empty()) return std::nullopt;

  auto index = TfidfIndex::build(sentences);
  int best = 0;
  double best_sim = -1.0;
  for (int i = 0; i < static_cast<int>(sentences.size()); ++i) {
    double sim = index.similarity(example.query, i);
    if (sim > best_sim) {
      best_sim = sim;
      best = i;
    }
  }
  const Paragraph& replacement = pool[origin[best].first];

  // Gold paragraph positions within the example's passage.
  std::vector<int> gold_positions;
  for (int pi = 0; pi < example.passage.paragraph_count(); ++pi) {
    const auto& title = example.passage.paragraphs[pi].title;
    if (std::find(example.gold_paragraph_titles.begin(), example.gold_paragraph_titles.end(),
                  title) != example.gold_paragraph_titles.end()) {
      gold_positions.push_back(pi);
    }
  }
  if (gold_positions.empty()) return std::nullopt;

  std::mt19937_64 rng(rng_seed);
  int victim = gold_positions[rng() % gold_positions.size()];

  Example out = example;
  out.id = example.id + "#cna";
  const std::string victim_title = example.passage.paragraphs[victim].title;
  out.passage.paragraphs[victim] = replacement;
  out.gold_answer = AnswerTarget{AnswerLabel::Cna, std::nullopt, std::nullopt, std::nullopt};
  // The sample's "gold" paragraphs are the surviving gold plus the
  // replacement, so restricting to them yields the intended training pair.
  for (auto& title : out.gold_paragraph_titles) {
    if (title == victim_title) title = replacement.title;
  }

  out.gold_rationale.clear();
  for (const auto& [title, si] : [&] {
         std::vector<std::pair<std::string, int>> keys;
         for (int id : example.gold_rationale) {
           auto [pi2, si2] = example.passage.locate(id);
           keys.emplace_back(example.passage.paragraphs[pi2].title, si2);
         }
         return keys;
       }()) {
    auto gid = out.passage.global_id(title, si);
    if (gid) out.gold_rationale.insert(*gid);
  }
  out.absent_gold_sfs = static_cast<int>(example.gold_rationale.size() - out.gold_rationale.size());
  return out;
}

Example restrict_to_gold_paragraphs(const Example& example) {
  Example out = example;
  out.passage.paragraphs.clear();
  for (const auto& p : example.passage.paragraphs) {
    if (std::find(example.gold_paragraph_titles.begin(), example.gold_paragraph_titles.end(),
                  p.title) != example.gold_paragraph_titles.end()) {
      out.passage.paragraphs.push_back(p);
    }
  }
  out.gold_rationale.clear();
  for (int id : example.gold_rationale) {
    auto [pi, si] = example.passage.locate(id);
    auto gid = out.passage.global_id(example.passage.paragraphs[pi].title, si);
    if (gid) out.gold_rationale.insert(*gid);
  }
  if (out.gold_answer.label == AnswerLabel::Span) {
    out.gold_answer.span_char_range.reset();
    out.gold_answer.span_sentence_id.reset();
    align_answer_span(out);
  }
  return out;
}

std::vector<Paragraph> non_gold_paragraphs(const Example& example) {
  std::vector<Paragraph> pool;
  for (const auto& p : example.passage.paragraphs) {
    if (std::find(example.gold_paragraph_titles.begin(), example.gold_paragraph_titles.end(),
                  p.title) == example.gold_paragraph_titles.end()) {
      pool.push_back(p);
    }
  }
  return pool;
}

std::uint64_t derive_seed(std::uint64_t global_seed, const std::string& example_id) {
  std::uint64_t h = 1469598103934665603ULL ^ global_seed;
  for (char c : example_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  h ^= global_seed * 0x9e3779b97f4a7c15ULL;
  return h;
}

}  // namespace rcpipe
