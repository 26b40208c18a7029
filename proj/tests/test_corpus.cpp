#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "rcpipe/corpus.hpp"
#include "rcpipe/synthetic.hpp"

using namespace rcpipe;

namespace {

// Minimal record-schema file with two two-sentence paragraphs.
const char* kFixture = R"fx([
  {
    "_id": "fx1",
    "question": "Which 1992 game precedes Fade to Black?",
    "answer": "Flashback",
    "supporting_facts": [["Flashback (1992 video game)", 0], ["Fade to Black (video game)", 0]],
    "context": [
      ["Flashback (1992 video game)",
       ["Flashback is a 1992 science fiction cinematic platform game.",
        "It was developed by Delphine Software."]],
      ["Fade to Black (video game)",
       ["Fade to Black is the sequel to Flashback.",
        "It was released in 1995."]]
    ]
  },
  {
    "_id": "fx2",
    "question": "Is water wet?",
    "answer": "yes",
    "supporting_facts": [["Missing title", 0]],
    "context": [
      ["Water", ["Water is a liquid.", "It covers most of the planet."]]
    ]
  }
])fx";

std::string write_temp(const char* text) {
  std::string path = "corpus_fixture_test.json";
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("record ingestion resolves supporting facts to global sentence ids") {
  auto path = write_temp(kFixture);
  auto examples = load_hotpot_file(path);
  std::remove(path.c_str());
  REQUIRE(examples.size() == 2);

  const Example& e = examples[0];
  CHECK(e.id == "fx1");
  CHECK(e.passage.paragraph_count() == 2);
  CHECK(e.passage.sentence_count() == 4);
  // Supporting facts are sentence 0 of each paragraph: global ids 0 and 2.
  CHECK(e.gold_rationale == std::set<int>{0, 2});
  CHECK(e.gold_answer.label == AnswerLabel::Span);
  REQUIRE(e.gold_answer.span_text.has_value());
  CHECK(*e.gold_answer.span_text == "Flashback");

  // Unresolvable supporting fact is dropped and flagged.
  const Example& f = examples[1];
  CHECK(f.gold_answer.label == AnswerLabel::Yes);
  CHECK(f.gold_rationale.empty());
  CHECK(f.has_flag("unresolvable_sf"));
}

TEST_CASE("span alignment prefers gold-rationale sentences") {
  Example e;
  e.query = "q";
  e.passage.paragraphs = {
      {"p0", {"Flashback was released early.", "Nothing here."}},
      {"p1", {"The Flashback sequel came later."}},
  };
  e.gold_answer.label = AnswerLabel::Span;
  e.gold_answer.span_text = "Flashback";
  e.gold_rationale = {2};  // only the p1 sentence is gold

  auto target = align_answer_span(e);
  REQUIRE(target.span_sentence_id.has_value());
  CHECK(*target.span_sentence_id == 2);
  REQUIRE(target.span_char_range.has_value());
  auto [b, c] = *target.span_char_range;
  CHECK(e.passage.paragraphs[1].sentences[0].substr(b, c - b) == "Flashback");
}

TEST_CASE("unalignable spans flag the example") {
  Example e;
  e.passage.paragraphs = {{"p0", {"nothing relevant here."}}};
  e.gold_answer.label = AnswerLabel::Span;
  e.gold_answer.span_text = "absent phrase";
  align_answer_span(e);
  CHECK(e.has_flag("span_unalignable"));
}

TEST_CASE("passage global ids map bijectively to (paragraph, sentence)") {
  Passage p;
  p.paragraphs = {{"a", {"s0", "s1"}}, {"b", {"s2"}}, {"c", {"s3", "s4", "s5"}}};
  REQUIRE(p.sentence_count() == 6);
  for (int id = 0; id < p.sentence_count(); ++id) {
    auto [pi, si] = p.locate(id);
    auto round = p.global_id(p.paragraphs[pi].title, si);
    REQUIRE(round.has_value());
    CHECK(*round == id);
  }
  CHECK(!p.global_id("missing", 0).has_value());
  CHECK(!p.global_id("a", 9).has_value());
}

TEST_CASE("jsonl round trip preserves every example field") {
  SyntheticSpec spec;
  spec.example_count = 20;
  spec.cna_fraction = 0.3;
  spec.seed = 5;
  auto examples = generate_synthetic(spec);

  std::string path = "roundtrip_test.jsonl";
  save_jsonl(examples, path);
  auto loaded = load_jsonl(path);
  std::remove(path.c_str());

  REQUIRE(loaded.size() == examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& a = examples[i];
    const auto& b = loaded[i];
    CHECK(a.id == b.id);
    CHECK(a.query == b.query);
    CHECK(a.gold_rationale == b.gold_rationale);
    CHECK(a.gold_paragraph_titles == b.gold_paragraph_titles);
    CHECK(a.flags == b.flags);
    CHECK(a.absent_gold_sfs == b.absent_gold_sfs);
    CHECK(a.gold_answer.label == b.gold_answer.label);
    CHECK(a.gold_answer.span_text == b.gold_answer.span_text);
    CHECK(a.gold_answer.span_char_range == b.gold_answer.span_char_range);
    CHECK(a.gold_answer.span_sentence_id == b.gold_answer.span_sentence_id);
    REQUIRE(a.passage.paragraph_count() == b.passage.paragraph_count());
    for (int pi = 0; pi < a.passage.paragraph_count(); ++pi) {
      CHECK(a.passage.paragraphs[pi].title == b.passage.paragraphs[pi].title);
      CHECK(a.passage.paragraphs[pi].sentences == b.passage.paragraphs[pi].sentences);
    }
  }
}

TEST_CASE("record-schema export round trips through ingestion") {
  SyntheticSpec spec;
  spec.example_count = 8;
  spec.cna_fraction = 0.25;
  auto examples = generate_synthetic(spec);

  std::string path = "hotpot_export_test.json";
  save_hotpot_format(examples, path);
  auto loaded = load_hotpot_file(path);
  std::remove(path.c_str());

  REQUIRE(loaded.size() == examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    CHECK(loaded[i].id == examples[i].id);
    CHECK(loaded[i].query == examples[i].query);
    CHECK(loaded[i].gold_rationale == examples[i].gold_rationale);
    // Unanswerable examples serialize as the no-answer string.
    if (examples[i].gold_answer.label == AnswerLabel::Cna)
      CHECK(loaded[i].gold_answer.label == AnswerLabel::Cna);
  }
}
