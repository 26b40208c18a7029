#include <benchmark/benchmark.h>

#include <random>

#include "rcpipe/extraction.hpp"
#include "rcpipe/model.hpp"
#include "rcpipe/synthetic.hpp"
#include "rcpipe/trainer.hpp"

namespace {

using namespace rcpipe;

PipelineModel make_model(const std::vector<Example>& corpus) {
  EncoderConfig config;
  config.embedding_dim = 32;
  config.layer_count = 2;
  config.head_count = 4;
  config.feed_forward_dim = 64;
  PipelineModel model(Tokenizer::build(corpus), config);
  model.init_weights(7);
  return model;
}

void BM_EncoderForward(benchmark::State& state) {
  SyntheticSpec spec;
  spec.example_count = 4;
  auto corpus = generate_synthetic(spec);
  auto model = make_model(corpus);
  const auto& ex = corpus.front();
  for (auto _ : state) {
    ad::Tape tape;
    auto run = model.run_extraction(tape, ex.query, ex.passage.sentences());
    benchmark::DoNotOptimize(run.scores.logit_values());
  }
}
BENCHMARK(BM_EncoderForward);

void BM_GumbelSample(benchmark::State& state) {
  SyntheticSpec spec;
  spec.example_count = 4;
  auto corpus = generate_synthetic(spec);
  auto model = make_model(corpus);
  const auto& ex = corpus.front();
  ad::Tape tape;
  auto run = model.run_extraction(tape, ex.query, ex.passage.sentences());
  std::mt19937_64 rng(11);
  for (auto _ : state) {
    auto sample = gumbel_sample(tape, run.scores, 0.5, rng);
    benchmark::DoNotOptimize(sample.hard_mask);
  }
}
BENCHMARK(BM_GumbelSample);

void BM_E2EStepBackward(benchmark::State& state) {
  SyntheticSpec spec;
  spec.example_count = 4;
  auto corpus = generate_synthetic(spec);
  auto model = make_model(corpus);
  std::mt19937_64 rng(11);
  TrainingConfig config;
  for (auto _ : state) {
    auto record = e2e_step(model, corpus.front(), config, rng);
    benchmark::DoNotOptimize(record.loss_total);
    model.params().zero_grads();
  }
}
BENCHMARK(BM_E2EStepBackward);

}  // namespace

BENCHMARK_MAIN();
