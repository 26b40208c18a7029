#include <doctest.h>

#include <cmath>
#include <random>

#include "rcpipe/answer.hpp"
#include "rcpipe/text.hpp"
#include "rcpipe/tokenizer.hpp"

using namespace rcpipe;
using ad::Mat;
using ad::Var;

namespace {

Tokenizer fixture_tokenizer() {
  return Tokenizer::build_from_texts(
      {"stephen king wrote the long walk it is a novel about walking aa bb cc dd"});
}

struct Fixture {
  ad::Tape tape;
  PackedInput packed;
  AnswerScores scores;
};

// Builds answer scores with hand-set span logits over a real packed input.
Fixture make_fixture(const std::string& query, const std::vector<Sentence>& rationale,
                     const std::array<double, kLabelCount>& label_logits) {
  Fixture f;
  auto tok = fixture_tokenizer();
  f.packed = pack_answer_input(query, rationale, tok);
  Mat labels(1, kLabelCount);
  for (int i = 0; i < kLabelCount; ++i) labels(0, i) = label_logits[i];
  Mat span = Mat::Zero(f.packed.length(), 2);
  f.scores = AnswerScores{f.tape.constant(labels), f.tape.constant(span), {}};
  for (int i = 0; i < f.packed.length(); ++i) {
    if (f.packed.tokens[i].source == TokenSource::Sentence)
      f.scores.sentence_token_indices.push_back(i);
  }
  return f;
}

}  // namespace

TEST_CASE("label argmax decoding and shift invariance") {
  auto f = make_fixture("aa", {{0, "t", "stephen king wrote it"}}, {3.0, 1.0, 0.0, -1.0});
  auto pred = decode_answer(f.scores, f.packed);
  CHECK(pred.label == AnswerLabel::Yes);
  CHECK(!pred.span_text.has_value());

  auto g = make_fixture("aa", {{0, "t", "stephen king wrote it"}}, {8.0, 6.0, 5.0, 4.0});
  CHECK(decode_answer(g.scores, g.packed).label == AnswerLabel::Yes);
}

TEST_CASE("cna probability is the softmax mass of the CNA slot") {
  auto f = make_fixture("aa", {{0, "t", "stephen king wrote it"}}, {0.0, 0.0, 0.0, 0.0});
  auto pred = decode_answer(f.scores, f.packed);
  CHECK(pred.cna_probability == doctest::Approx(0.25));
}

TEST_CASE("span decoding picks the peaked start/end pair") {
  std::vector<Sentence> rationale = {{0, "t", "the long walk is a novel by stephen king"}};
  auto f = make_fixture("aa", rationale, {0.0, 0.0, 5.0, 0.0});
  // Peak the span head at the tokens of "stephen king".
  Mat span = Mat::Zero(f.packed.length(), 2);
  int start_tok = -1, end_tok = -1;
  for (int i = 0; i < f.packed.length(); ++i) {
    const auto& t = f.packed.tokens[i];
    if (t.source != TokenSource::Sentence) continue;
    std::string piece = f.packed.rationale_text.substr(t.char_start, t.char_end - t.char_start);
    if (piece == "stephen") start_tok = i;
    if (piece == "king") end_tok = i;
  }
  REQUIRE(start_tok >= 0);
  REQUIRE(end_tok >= 0);
  span(start_tok, 0) = 10.0;
  span(end_tok, 1) = 10.0;
  f.scores.span_logits = f.tape.constant(span);

  auto pred = decode_answer(f.scores, f.packed);
  CHECK(pred.label == AnswerLabel::Span);
  REQUIRE(pred.span_text.has_value());
  CHECK(*pred.span_text == "stephen king");
}

TEST_CASE("span decoding matches a brute-force argmax with tie preference") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<Sentence> rationale = {{0, "t", "aa bb cc"}, {1, "t", "dd stephen king"}};
  for (int trial = 0; trial < 50; ++trial) {
    auto f = make_fixture("aa", rationale, {0.0, 0.0, 5.0, 0.0});
    Mat span(f.packed.length(), 2);
    // Coarse values force frequent ties.
    for (int i = 0; i < span.size(); ++i) span(i) = std::round(dist(rng) * 2.0) / 2.0;
    f.scores.span_logits = f.tape.constant(span);

    const auto& idx = f.scores.sentence_token_indices;
    double best = -1e18;
    int bi = -1, bj = -1;
    for (size_t a = 0; a < idx.size(); ++a) {
      for (size_t b = a; b < idx.size() && static_cast<int>(b - a) < 30; ++b) {
        double s = span(idx[a], 0) + span(idx[b], 1);
        if (s > best) {  // strict: first (smallest i, then j) maximum wins
          best = s;
          bi = idx[a];
          bj = idx[b];
        }
      }
    }
    auto got = decode_best_span(f.scores, f.packed);
    REQUIRE(got.has_value());
    const auto& ti = f.packed.tokens[bi];
    const auto& tj = f.packed.tokens[bj];
    std::string want = text::normalize_whitespace(
        f.packed.rationale_text.substr(ti.char_start, tj.char_end - ti.char_start));
    CHECK(*got == want);
  }
}

TEST_CASE("empty rationale segment falls back to the best non-span label") {
  auto f = make_fixture("aa", {}, {1.0, 2.0, 9.0, 0.5});
  auto pred = decode_answer(f.scores, f.packed);
  CHECK(pred.label == AnswerLabel::No);  // best among {Yes, No, Cna}
  CHECK(!decode_best_span(f.scores, f.packed).has_value());
}

TEST_CASE("answer loss closed forms") {
  {
    // Uniform label logits over four classes.
    auto f = make_fixture("aa", {{0, "t", "aa bb"}}, {0.0, 0.0, 0.0, 0.0});
    AnswerTarget target{AnswerLabel::Yes, std::nullopt, std::nullopt, std::nullopt};
    auto info = answer_loss(f.tape, f.scores, target, f.packed);
    CHECK(info.loss.scalar() == doctest::Approx(std::log(4.0)));
    CHECK(!info.span_terms_included);
  }
  {
    // Perfectly peaked label and span scores: loss below 1e-4.
    std::vector<Sentence> rationale = {{0, "t", "stephen king wrote it"}};
    auto tok = fixture_tokenizer();
    auto packed = pack_answer_input("aa", rationale, tok);
    ad::Tape tape;
    Mat labels(1, kLabelCount);
    labels << 0.0, 0.0, 40.0, 0.0;
    Mat span = Mat::Constant(packed.length(), 2, -40.0);
    std::vector<int> idx;
    for (int i = 0; i < packed.length(); ++i)
      if (packed.tokens[i].source == TokenSource::Sentence) idx.push_back(i);
    span(idx[0], 0) = 40.0;  // start at "stephen"
    span(idx[1], 1) = 40.0;  // end at "king"
    AnswerScores scores{tape.constant(labels), tape.constant(span), idx};

    AnswerTarget target{AnswerLabel::Span, "stephen king", std::pair<int, int>{0, 12}, 0};
    auto info = answer_loss(tape, scores, target, packed);
    CHECK(info.span_terms_included);
    CHECK(info.loss.scalar() < 1e-4);
  }
}

TEST_CASE("answer loss equals an independent softmax oracle on random scores") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<Sentence> rationale = {{0, "t", "stephen king wrote it"}};
  auto tok = fixture_tokenizer();
  auto packed = pack_answer_input("aa", rationale, tok);
  std::vector<int> idx;
  for (int i = 0; i < packed.length(); ++i)
    if (packed.tokens[i].source == TokenSource::Sentence) idx.push_back(i);

  auto ce = [](const std::vector<double>& logits, int target) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    return -(logits[target] - mx - std::log(z));
  };

  for (int trial = 0; trial < 20; ++trial) {
    ad::Tape tape;
    Mat labels(1, kLabelCount);
    std::vector<double> lv(kLabelCount);
    for (int i = 0; i < kLabelCount; ++i) labels(0, i) = lv[i] = dist(rng);
    Mat span(packed.length(), 2);
    for (int i = 0; i < span.size(); ++i) span(i) = dist(rng);
    AnswerScores scores{tape.constant(labels), tape.constant(span), idx};

    // Gold span "stephen" = chars [0, 7) of sentence 0 = token position 0.
    AnswerTarget target{AnswerLabel::Span, "stephen", std::pair<int, int>{0, 7}, 0};
    auto info = answer_loss(tape, scores, target, packed);
    REQUIRE(info.span_terms_included);

    std::vector<double> starts, ends;
    for (int i : idx) {
      starts.push_back(span(i, 0));
      ends.push_back(span(i, 1));
    }
    double oracle = ce(lv, kLabelSpan) + ce(starts, 0) + ce(ends, 0);
    CHECK(info.loss.scalar() == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("span targets truncated out of the packed input keep only the label term") {
  std::vector<Sentence> rationale = {{0, "t", "aa bb"}};
  auto f = make_fixture("aa", rationale, {0.0, 0.0, 0.0, 0.0});
  // Sentence 5 never packed: the span cannot be aligned.
  AnswerTarget target{AnswerLabel::Span, "cc", std::pair<int, int>{0, 2}, 5};
  auto info = answer_loss(f.tape, f.scores, target, f.packed);
  CHECK(info.span_target_truncated);
  CHECK(!info.span_terms_included);
  CHECK(info.loss.scalar() == doctest::Approx(std::log(4.0)));
}

TEST_CASE("label index mapping is a bijection over the four slots") {
  for (int i = 0; i < kLabelCount; ++i) CHECK(label_index(label_from_index(i)) == i);
  CHECK(label_index(AnswerLabel::Yes) == 0);
  CHECK(label_index(AnswerLabel::No) == 1);
  CHECK(label_index(AnswerLabel::Span) == 2);
  CHECK(label_index(AnswerLabel::Cna) == 3);
}
