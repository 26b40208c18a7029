#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "rcpipe/config.hpp"
#include "rcpipe/model.hpp"
#include "rcpipe/synthetic.hpp"
#include "rcpipe/text.hpp"

using namespace rcpipe;

TEST_CASE("synthetic generation with zero cna fraction is fully answerable") {
  SyntheticSpec spec;
  spec.example_count = 30;
  auto examples = generate_synthetic(spec);
  REQUIRE(examples.size() == 30);
  for (const auto& e : examples) {
    CHECK(e.gold_answer.label == AnswerLabel::Span);
    CHECK(e.gold_rationale.size() == 2);
    CHECK(e.absent_gold_sfs == 0);
    CHECK(e.gold_paragraph_titles.size() == 2);
  }
}

TEST_CASE("cna fraction is honored exactly") {
  SyntheticSpec spec;
  spec.example_count = 200;
  spec.cna_fraction = 0.5;
  auto examples = generate_synthetic(spec);
  int cna = 0;
  for (const auto& e : examples)
    if (e.gold_answer.label == AnswerLabel::Cna) ++cna;
  CHECK(cna == 100);
  for (const auto& e : examples) {
    if (e.gold_answer.label == AnswerLabel::Cna) {
      CHECK(e.absent_gold_sfs == 1);
      CHECK(e.gold_rationale.size() == 1);  // the surviving bridge sentence
    }
  }
}

TEST_CASE("same seed reproduces the corpus; different seeds differ") {
  SyntheticSpec spec;
  spec.example_count = 15;
  spec.cna_fraction = 0.2;
  auto a = generate_synthetic(spec);
  auto b = generate_synthetic(spec);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(example_to_json(a[i]) == example_to_json(b[i]));

  spec.seed = 99;
  auto c = generate_synthetic(spec);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i)
    if (example_to_json(a[i]) != example_to_json(c[i])) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("answer spans never appear in distractor sentences") {
  SyntheticSpec spec;
  spec.example_count = 50;
  spec.seed = 4;
  auto examples = generate_synthetic(spec);
  for (const auto& e : examples) {
    REQUIRE(e.gold_answer.span_text.has_value());
    const std::string& span = *e.gold_answer.span_text;
    for (const auto& s : e.passage.sentences()) {
      bool is_gold = e.gold_rationale.count(s.id) > 0;
      bool contains = s.text.find(span) != std::string::npos;
      if (contains) CHECK(is_gold);
    }
  }
}

TEST_CASE("too small an entity vocabulary is rejected") {
  SyntheticSpec spec;
  spec.entity_vocab_size = 5;
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
  SyntheticSpec bad_frac;
  bad_frac.cna_fraction = 1.5;
  CHECK_THROWS_AS(generate_synthetic(bad_frac), std::invalid_argument);
}

TEST_CASE("config file parsing, precedence, and unknown keys") {
  std::string path = "config_parse_test.cfg";
  {
    std::ofstream out(path);
    out << "# a comment\n";
    out << "tau = 0.25\n";
    out << "batch_size = 8   # trailing comment\n";
    out << "embedding_dim = 48\n";
  }
  auto fc = FileConfig::parse_file(path);
  std::remove(path.c_str());
  CHECK(fc.training.tau == doctest::Approx(0.25));
  CHECK(fc.training.batch_size == 8);
  CHECK(fc.encoder.embedding_dim == 48);
  // Untouched keys keep their defaults.
  CHECK(fc.training.lambda_r == doctest::Approx(0.1));
  CHECK(fc.training.lambda_na == doctest::Approx(1.0));
  CHECK(fc.training.learning_rate == doctest::Approx(5e-5));
  CHECK(fc.training.batch_size == 8);
  CHECK(fc.training.n_r == 5);
  CHECK(fc.training.k == 3);

  // CLI-style override beats the file value.
  fc.apply_override("tau", "0.9");
  CHECK(fc.training.tau == doctest::Approx(0.9));

  CHECK_THROWS_AS(FileConfig::parse_text("bogus_key = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(FileConfig::parse_text("not a key value line\n"), std::invalid_argument);
}

TEST_CASE("table-style defaults are preserved in TrainingConfig") {
  TrainingConfig c;
  CHECK(c.tau == doctest::Approx(0.5));
  CHECK(c.batch_size == 72);
  CHECK(c.pretrain_epochs == 5);
  CHECK(c.e2e_epochs == 2);
  CHECK(c.learning_rate == doctest::Approx(5e-5));
  CHECK(c.weight_decay == doctest::Approx(0.0));
  CHECK(c.n_r == 5);
  CHECK(c.k == 3);
  CHECK(c.lambda_r == doctest::Approx(0.1));
  CHECK(c.lambda_na == doctest::Approx(1.0));
  PackingLimits limits;
  CHECK(limits.max_sequence_length == 512);
  CHECK(limits.max_query_length == 64);
  CHECK(limits.max_sentences == 20);
  CHECK(limits.max_sentence_length == 160);
}

TEST_CASE("checkpoint save/load round trips parameters and metadata exactly") {
  SyntheticSpec spec;
  spec.example_count = 4;
  auto corpus = generate_synthetic(spec);
  EncoderConfig config;
  config.embedding_dim = 16;
  config.layer_count = 1;
  config.head_count = 2;
  config.feed_forward_dim = 32;
  PipelineModel model(Tokenizer::build(corpus), config);
  model.init_weights(13);
  model.metadata["phase"] = "unit-test";

  std::string path = "checkpoint_roundtrip_test.json";
  model.save(path);
  auto loaded = PipelineModel::load(path);
  std::remove(path.c_str());

  CHECK(loaded.metadata.at("phase") == "unit-test");
  CHECK(loaded.tokenizer().vocab_size() == model.tokenizer().vocab_size());
  for (const auto& p : model.params().params()) {
    const auto& q = loaded.params().at(p->name);
    CHECK((p->value - q.value).cwiseAbs().maxCoeff() == 0.0);
  }
  // Identical forward behavior after reload.
  const auto& ex = corpus[0];
  ad::Tape t1, t2;
  auto a = model.run_extraction(t1, ex.query, ex.passage.sentences());
  auto b = loaded.run_extraction(t2, ex.query, ex.passage.sentences());
  auto av = a.scores.logit_values();
  auto bv = b.scores.logit_values();
  REQUIRE(av.size() == bv.size());
  for (size_t i = 0; i < av.size(); ++i) CHECK(av[i] == bv[i]);
}

TEST_CASE("run manifest serializes its fields") {
  RunManifest manifest;
  manifest.command = "unit";
  manifest.config["k"] = "3";
  manifest.inputs["data"] = "in.jsonl";
  manifest.outputs["model"] = "out.ckpt";
  manifest.wall_clock_seconds = 1.5;
  std::string path = "manifest_test.json";
  manifest.write(path);
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::remove(path.c_str());
  CHECK(content.find("\"command\": \"unit\"") != std::string::npos);
  CHECK(content.find("in.jsonl") != std::string::npos);
  CHECK(content.find(code_version()) != std::string::npos);
}

TEST_CASE("noisy_answer_pretrain config key parses and round trips") {
  TrainingConfig defaults;
  CHECK(defaults.noisy_answer_pretrain == false);

  auto fc = FileConfig::parse_text("noisy_answer_pretrain = true\n");
  CHECK(fc.training.noisy_answer_pretrain == true);
  fc.apply_override("noisy_answer_pretrain", "0");
  CHECK(fc.training.noisy_answer_pretrain == false);
  fc.apply_override("noisy_answer_pretrain", "1");
  CHECK(fc.training.to_map().at("noisy_answer_pretrain") == "true");
}
