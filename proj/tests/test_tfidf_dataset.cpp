#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "rcpipe/dataset_builder.hpp"
#include "rcpipe/synthetic.hpp"
#include "rcpipe/text.hpp"
#include "rcpipe/tfidf.hpp"

using namespace rcpipe;

namespace {

// Independent cosine-similarity oracle: recompute tf, idf and the dot
// product with plain loops over term strings.
double naive_cosine(const std::vector<std::string>& docs, const std::string& query, int idx) {
  auto terms_of = [](const std::string& s) {
    std::map<std::string, double> tf;
    for (const auto& t : text::tfidf_terms(s)) tf[t] += 1.0;
    return tf;
  };
  std::map<std::string, double> df;
  for (const auto& d : docs) {
    for (const auto& [t, c] : terms_of(d)) {
      (void)c;
      df[t] += 1.0;
    }
  }
  auto idf = [&](const std::string& t) {
    auto it = df.find(t);
    if (it == df.end()) return 0.0;
    double v = std::log(docs.size() / (1.0 + it->second)) + 1.0;
    return v < 0.0 ? 0.0 : v;
  };
  auto weight = [&](const std::string& s) {
    auto tf = terms_of(s);
    std::map<std::string, double> w;
    double norm = 0.0;
    for (const auto& [t, c] : tf) {
      double v = c * idf(t);
      w[t] = v;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (auto& [t, v] : w) {
        (void)t;
        v /= norm;
      }
    return w;
  };
  auto qw = weight(query);
  auto dw = weight(docs[idx]);
  double dot = 0.0;
  for (const auto& [t, v] : qw) {
    auto it = dw.find(t);
    if (it != dw.end()) dot += v * it->second;
  }
  return dot;
}

}  // namespace

TEST_CASE("tf-idf similarity matches a naive loop oracle") {
  std::vector<std::string> docs = {
      "the cat sat on the mat",
      "dogs chase the cat",
      "a completely different sentence about planets",
      "planets orbit the sun",
      "cat cat cat",
  };
  TfidfIndex index = TfidfIndex::build(docs);
  std::vector<std::string> queries = {"the cat", "planets", "sun orbit", "unrelated words",
                                      "cat mat planets"};
  for (const auto& q : queries) {
    for (int i = 0; i < static_cast<int>(docs.size()); ++i) {
      CHECK(index.similarity(q, i) == doctest::Approx(naive_cosine(docs, q, i)).epsilon(1e-9));
    }
  }
}

TEST_CASE("tf-idf similarity is 1 for identical single-term docs and 0 for disjoint") {
  std::vector<std::string> docs = {"alpha beta", "gamma delta"};
  TfidfIndex index = TfidfIndex::build(docs);
  CHECK(index.similarity("alpha beta", 0) == doctest::Approx(1.0));
  CHECK(index.similarity("alpha beta", 1) == doctest::Approx(0.0));
}

TEST_CASE("fullwiki construction removes absent facts and flips the label") {
  // Gold annotation with two supporting facts in two paragraphs.
  Example gold;
  gold.id = "g1";
  gold.query = "where does bo live ?";
  gold.passage.paragraphs = {{"A", {"al works with bo .", "filler one ."}},
                             {"B", {"al lives in zurich .", "filler two ."}}};
  gold.gold_paragraph_titles = {"A", "B"};
  gold.gold_rationale = {0, 2};
  gold.gold_answer.label = AnswerLabel::Span;
  gold.gold_answer.span_text = "zurich";

  SUBCASE("both gold paragraphs retrieved: class 0, label preserved") {
    Example retrieved = gold;
    auto result = build_fullwiki_cna({gold}, {retrieved});
    REQUIRE(result.examples.size() == 1);
    CHECK(result.stats.counts.at(0) == 1);
    CHECK(result.examples[0].gold_answer.label == AnswerLabel::Span);
    CHECK(result.examples[0].gold_rationale.size() == 2);
    CHECK(result.examples[0].absent_gold_sfs == 0);
  }

  SUBCASE("one gold sentence absent: class 1, label becomes CNA") {
    Example retrieved = gold;
    retrieved.passage.paragraphs[1] = {"C", {"something else entirely ."}};
    auto result = build_fullwiki_cna({gold}, {retrieved});
    REQUIRE(result.examples.size() == 1);
    CHECK(result.stats.counts.at(1) == 1);
    const auto& e = result.examples[0];
    CHECK(e.gold_answer.label == AnswerLabel::Cna);
    CHECK(e.absent_gold_sfs == 1);
    // Only the surviving fact remains, re-resolved against the new passage.
    CHECK(e.gold_rationale == std::set<int>{0});
  }

  SUBCASE("examples without annotations or retrievals are excluded") {
    Example no_gold = gold;
    no_gold.id = "g2";
    no_gold.gold_paragraph_titles.clear();
    Example unmatched = gold;
    unmatched.id = "g3";
    auto result = build_fullwiki_cna({gold, no_gold, unmatched}, {gold});
    CHECK(result.stats.excluded == 2);
    CHECK(result.stats.total() == 1);
  }
}

TEST_CASE("label-replacement rule: absent fact iff CNA in the built dataset") {
  SyntheticSpec spec;
  spec.example_count = 40;
  spec.cna_fraction = 0.4;
  spec.seed = 9;
  auto examples = generate_synthetic(spec);
  auto result = build_fullwiki_cna(examples, examples);
  for (const auto& e : result.examples) {
    // Synthetic CNA provenance is carried in the gold annotation itself, so
    // rebuilding against the same passage keeps class 0 for answerable
    // examples and the CNA label exactly where a fact was already absent.
    bool cna = e.gold_answer.label == AnswerLabel::Cna;
    bool absent = e.absent_gold_sfs > 0;
    CHECK(cna == (absent || e.gold_rationale.size() < 2));
  }
}

TEST_CASE("negative sampling picks the most query-similar pool sentence") {
  Example e;
  e.id = "ns1";
  e.query = "where does the person that works with kiki live ?";
  e.passage.paragraphs = {
      {"G1", {"bobo works with kiki ."}},
      {"G2", {"bobo lives in paris ."}},
      {"N1", {"momo paints with lulu ."}},
      {"N2", {"the person that works with kiki is unknown ."}},  // query overlap
  };
  e.gold_paragraph_titles = {"G1", "G2"};
  e.gold_rationale = {0, 1};
  e.gold_answer.label = AnswerLabel::Span;
  e.gold_answer.span_text = "paris";

  auto pool = non_gold_paragraphs(e);
  REQUIRE(pool.size() == 2);
  auto sampled = negative_sample_cna(e, pool, 123);
  REQUIRE(sampled.has_value());
  CHECK(sampled->id == "ns1#cna");
  CHECK(sampled->gold_answer.label == AnswerLabel::Cna);
  // N2 shares far more query terms, so it must be the replacement.
  bool has_replacement = false;
  for (const auto& p : sampled->passage.paragraphs)
    if (p.title == "N2") has_replacement = true;
  CHECK(has_replacement);
  // Exactly one gold paragraph was replaced.
  int gold_present = 0;
  for (const auto& p : sampled->passage.paragraphs)
    if (p.title == "G1" || p.title == "G2") ++gold_present;
  CHECK(gold_present == 1);
  // The new "gold" titles name the surviving gold plus the replacement.
  CHECK(sampled->gold_paragraph_titles.size() == 2);
  CHECK(std::find(sampled->gold_paragraph_titles.begin(), sampled->gold_paragraph_titles.end(),
                  "N2") != sampled->gold_paragraph_titles.end());
}

TEST_CASE("zero-similarity pool falls back to the lowest paragraph index") {
  Example e;
  e.id = "ns2";
  e.query = "xyzzy quux";
  e.passage.paragraphs = {
      {"G1", {"bobo works with kiki ."}},
      {"G2", {"bobo lives in paris ."}},
      {"N1", {"alpha beta ."}},
      {"N2", {"gamma delta ."}},
  };
  e.gold_paragraph_titles = {"G1", "G2"};
  e.gold_rationale = {0, 1};

  auto sampled = negative_sample_cna(e, non_gold_paragraphs(e), 7);
  REQUIRE(sampled.has_value());
  bool has_n1 = false;
  for (const auto& p : sampled->passage.paragraphs)
    if (p.title == "N1") has_n1 = true;
  CHECK(has_n1);
}

TEST_CASE("negative sampling is deterministic under a fixed seed") {
  SyntheticSpec spec;
  spec.example_count = 6;
  auto examples = generate_synthetic(spec);
  const auto& e = examples[0];
  auto a = negative_sample_cna(e, non_gold_paragraphs(e), 42);
  auto b = negative_sample_cna(e, non_gold_paragraphs(e), 42);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(example_to_json(*a) == example_to_json(*b));
}

TEST_CASE("empty pool yields no sample") {
  Example e;
  e.id = "ns3";
  e.gold_paragraph_titles = {"G"};
  e.passage.paragraphs = {{"G", {"only gold ."}}};
  CHECK(!negative_sample_cna(e, {}, 1).has_value());
}

TEST_CASE("per-example seed stream differs by id and global seed") {
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
}

TEST_CASE("restriction to gold paragraphs remaps rationale ids") {
  Example e;
  e.id = "r1";
  e.passage.paragraphs = {
      {"D1", {"distractor ."}},
      {"G1", {"bobo works with kiki ."}},
      {"D2", {"more noise ."}},
      {"G2", {"bobo lives in paris ."}},
  };
  e.gold_paragraph_titles = {"G1", "G2"};
  e.gold_rationale = {1, 3};
  e.gold_answer.label = AnswerLabel::Span;
  e.gold_answer.span_text = "paris";

  auto r = restrict_to_gold_paragraphs(e);
  CHECK(r.passage.paragraph_count() == 2);
  CHECK(r.gold_rationale == std::set<int>{0, 1});
  REQUIRE(r.gold_answer.span_sentence_id.has_value());
  CHECK(*r.gold_answer.span_sentence_id == 1);
}
