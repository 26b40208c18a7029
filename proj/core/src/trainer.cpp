#include "rcpipe/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rcpipe/dataset_builder.hpp"
#include "rcpipe/extraction.hpp"
#include "rcpipe/text.hpp"

namespace rcpipe {

using ad::Var;

namespace {

void check_finite(double loss, const std::string& context) {
  if (!std::isfinite(loss))
    throw std::runtime_error("non-finite loss during " + context);
}

// Zeroes gradients of the answer encoder and answer head.
void drop_answerer_grads(ad::ParamSet& params) {
  for (auto& p : params.params()) {
    if (p->name.rfind("ans", 0) == 0) p->grad.setZero();
  }
}

// Shared epoch loop: shuffles, accumulates per-example gradients, steps the
// optimizer every batch_size examples (and at epoch end).
template <typename StepFn>
TrainReport run_epochs(PipelineModel& model, std::size_t example_count,
                       const TrainingConfig& config, int epochs, const std::string& context,
                       StepFn&& step_fn) {
  TrainReport report;
  ad::AdamW opt(config.learning_rate, config.weight_decay);
  model.params().zero_grads();

  std::vector<std::size_t> order(example_count);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(config.seed * 1000003ULL + epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::int64_t steps = 0;
    int pending = 0;
    for (std::size_t idx : order) {
      double loss = step_fn(idx, epoch, report);
      check_finite(loss, context);
      loss_sum += loss;
      ++steps;
      if (++pending == config.batch_size) {
        if (config.freeze_answerer_in_e2e && context == "end-to-end training")
          drop_answerer_grads(model.params());
        opt.step(model.params());
        model.params().zero_grads();
        pending = 0;
      }
    }
    if (pending > 0) {
      if (config.freeze_answerer_in_e2e && context == "end-to-end training")
        drop_answerer_grads(model.params());
      opt.step(model.params());
      model.params().zero_grads();
    }
    report.epochs.push_back(EpochStats{epoch, steps, steps > 0 ? loss_sum / steps : 0.0});
  }
  return report;
}

// One answerer pre-training input: a rationale variant and its target.
struct AnswerItem {
  std::string query;
  std::vector<Sentence> rationale;
  AnswerTarget target;
};

// Noisy-variant curriculum for answerer pre-training: alongside the gold
// rationale, emits incomplete rationales, rationales padded with off-gold
// sentences, rationales with one gold sentence swapped out, and off-gold-only
// rationales, each labeled CNA when the gold rationale is no longer covered.
// The variant skeleton per example is fixed; only the noise draws depend on
// the seed, so the item count is identical across epochs.
std::vector<AnswerItem> noisy_answer_items(const std::vector<Example>& examples,
                                           std::uint64_t seed) {
  std::mt19937_64 r(seed);
  const AnswerTarget cna{AnswerLabel::Cna, std::nullopt, std::nullopt, std::nullopt};
  std::vector<AnswerItem> items;
  auto by_id = [](const Sentence& a, const Sentence& b) { return a.id < b.id; };
  for (const auto& ex : examples) {
    std::vector<Sentence> gold, other;
    for (const auto& s : ex.passage.sentences())
      (ex.gold_rationale.count(s.id) ? gold : other).push_back(s);
    auto with_junk = [&](std::vector<Sentence> base, int count) {
      for (int j = 0; j < count && !other.empty(); ++j)
        base.push_back(other[r() % other.size()]);
      std::sort(base.begin(), base.end(), by_id);
      return base;
    };
    bool answerable = ex.gold_answer.label != AnswerLabel::Cna;
    // Clean gold rationale, twice to balance the CNA-heavy variants below.
    items.push_back({ex.query, gold, ex.gold_answer});
    items.push_back({ex.query, gold, ex.gold_answer});
    if (answerable && gold.size() >= 2) {
      // Missing one gold sentence: unanswerable.
      auto partial = gold;
      partial.erase(partial.begin() + static_cast<int>(r() % partial.size()));
      items.push_back({ex.query, partial, cna});
      // Gold plus off-gold padding: still answerable, twice for balance.
      items.push_back({ex.query, with_junk(gold, 1 + static_cast<int>(r() % 3)), ex.gold_answer});
      items.push_back({ex.query, with_junk(gold, 1), ex.gold_answer});
      // One gold sentence swapped for an off-gold one: unanswerable.
      if (!other.empty()) {
        auto swapped = gold;
        swapped[r() % swapped.size()] = other[r() % other.size()];
        std::sort(swapped.begin(), swapped.end(), by_id);
        items.push_back({ex.query, swapped, cna});
      }
    }
    // Incomplete (or inherently unanswerable) rationale plus padding.
    {
      auto base = gold;
      if (answerable && !base.empty())
        base.erase(base.begin() + static_cast<int>(r() % base.size()));
      auto padded = with_junk(base, 1 + static_cast<int>(r() % 4));
      if (!padded.empty()) items.push_back({ex.query, padded, cna});
    }
    // Off-gold sentences only.
    if (other.size() >= 2)
      items.push_back({ex.query, with_junk({}, 2 + static_cast<int>(r() % 3)), cna});
  }
  return items;
}

}  // namespace

std::set<int> answer_bearing_sentences(const Example& example) {
  std::set<int> out;
  if (example.gold_answer.label != AnswerLabel::Span || !example.gold_answer.span_text)
    return out;
  std::string needle = text::normalize_answer(*example.gold_answer.span_text);
  if (needle.empty()) return out;
  for (const auto& s : example.passage.sentences()) {
    if (text::normalize_answer(s.text).find(needle) != std::string::npos) out.insert(s.id);
  }
  return out;
}

std::vector<Example> augment_with_cna(const std::vector<Example>& examples,
                                      std::uint64_t seed) {
  std::vector<Example> out = examples;
  for (const auto& e : examples) {
    if (e.gold_answer.label == AnswerLabel::Cna) continue;
    auto pool = non_gold_paragraphs(e);
    auto sampled = negative_sample_cna(e, pool, derive_seed(seed, e.id));
    if (sampled) out.push_back(std::move(*sampled));
  }
  return out;
}

TrainReport pretrain_extractor(PipelineModel& model, const std::vector<Example>& examples,
                               const TrainingConfig& config) {
  std::vector<Example> restricted;
  restricted.reserve(examples.size());
  for (const auto& e : examples) restricted.push_back(restrict_to_gold_paragraphs(e));

  return run_epochs(
      model, restricted.size(), config, config.pretrain_epochs, "extractor pre-training",
      [&](std::size_t idx, int, TrainReport&) {
        const Example& ex = restricted[idx];
        ad::Tape tape;
        auto run = model.run_extraction(tape, ex.query, ex.passage.sentences());
        std::set<int> gold_local;
        const auto& ids = run.packed.packed_sentence_ids;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (ex.gold_rationale.count(ids[i])) gold_local.insert(static_cast<int>(i));
        }
        auto loss = rationale_loss(tape, run.scores, gold_local);
        tape.backward(loss);
        return loss.scalar();
      });
}

TrainReport pretrain_answerer(PipelineModel& model, const std::vector<Example>& examples,
                              const TrainingConfig& config) {
  if (config.noisy_answer_pretrain) {
    int cached_epoch = -1;
    std::vector<AnswerItem> items =
        noisy_answer_items(examples, derive_seed(config.seed, "answer-noise-0"));
    return run_epochs(
        model, items.size(), config, config.pretrain_epochs, "answerer pre-training",
        [&](std::size_t idx, int epoch, TrainReport&) {
          if (epoch != cached_epoch) {
            items = noisy_answer_items(
                examples, derive_seed(config.seed, "answer-noise-" + std::to_string(epoch)));
            cached_epoch = epoch;
          }
          const AnswerItem& item = items[idx];
          ad::Tape tape;
          auto run = model.run_answer(tape, item.query, item.rationale);
          auto info = answer_loss(tape, run.scores, item.target, run.packed);
          tape.backward(info.loss);
          return info.loss.scalar();
        });
  }

  std::vector<Example> restricted;
  restricted.reserve(examples.size());
  for (const auto& e : examples) restricted.push_back(restrict_to_gold_paragraphs(e));

  return run_epochs(
      model, restricted.size(), config, config.pretrain_epochs, "answerer pre-training",
      [&](std::size_t idx, int, TrainReport&) {
        const Example& ex = restricted[idx];
        std::vector<Sentence> rationale;
        for (const auto& s : ex.passage.sentences()) {
          if (ex.gold_rationale.count(s.id)) rationale.push_back(s);
        }
        ad::Tape tape;
        auto run = model.run_answer(tape, ex.query, rationale);
        auto info = answer_loss(tape, run.scores, ex.gold_answer, run.packed);
        tape.backward(info.loss);
        return info.loss.scalar();
      });
}

TrainReport train_ranker(PipelineModel& model, const std::vector<Example>& examples,
                         const TrainingConfig& config) {
  return run_epochs(
      model, examples.size(), config, config.pretrain_epochs, "ranker training",
      [&](std::size_t idx, int, TrainReport&) {
        const Example& ex = examples[idx];
        ad::Tape tape;
        std::vector<Var> terms;
        for (const auto& p : ex.passage.paragraphs) {
          bool gold = std::find(ex.gold_paragraph_titles.begin(),
                                ex.gold_paragraph_titles.end(),
                                p.title) != ex.gold_paragraph_titles.end();
          Var logit = model.ranker_logit_var(tape, ex.query, p);
          terms.push_back(tape.bce_with_logits_mean(logit, {gold ? 1.0 : 0.0}));
        }
        if (terms.empty()) return 0.0;
        std::vector<double> coeffs(terms.size(), 1.0 / terms.size());
        auto loss = tape.add_scaled(terms, coeffs);
        tape.backward(loss);
        return loss.scalar();
      });
}

TrainStepRecord e2e_step(PipelineModel& model, const Example& example,
                         const TrainingConfig& config, std::mt19937_64& rng) {
  Example ex = restrict_to_gold_paragraphs(example);

  ad::Tape tape;
  auto sentences = ex.passage.sentences();
  auto run = model.run_extraction(tape, ex.query, sentences);
  auto sample = gumbel_sample(tape, run.scores, config.tau, rng);
  std::set<int> extracted = sample.extracted();

  TrainStepRecord record;
  record.example_id = example.id;

  if (extracted.empty()) {
    // The answer module needs at least one sentence; include the most
    // probable one and let its relaxed gate carry the gradient.
    auto probs = run.scores.probs();
    int best = 0;
    for (int i = 1; i < static_cast<int>(probs.size()); ++i) {
      if (probs[i] > probs[best]) best = i;
    }
    extracted.insert(best);
    record.forced_sentence = true;
  }

  const auto& ids = run.packed.packed_sentence_ids;
  std::set<int> gold_local;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ex.gold_rationale.count(ids[i])) gold_local.insert(static_cast<int>(i));
  }
  record.covers_gold =
      std::includes(extracted.begin(), extracted.end(), gold_local.begin(), gold_local.end());

  AnswerTarget target = ex.gold_answer;
  if (!record.covers_gold)
    target = AnswerTarget{AnswerLabel::Cna, std::nullopt, std::nullopt, std::nullopt};
  record.effective_label = target.label;

  std::map<int, ad::Var> gates;
  std::vector<Sentence> rationale;
  for (int i : extracted) {
    int gid = ids[i];
    record.sampled_rationale.insert(gid);
    gates.emplace(gid, tape.straight_through(sample.relaxed[i], 1.0));
    for (const auto& s : sentences) {
      if (s.id == gid) rationale.push_back(s);
    }
  }

  auto answer_run = model.run_answer(tape, ex.query, rationale, &gates);
  auto answer = answer_loss(tape, answer_run.scores, target, answer_run.packed);
  auto rationale_term = rationale_loss(tape, run.scores, gold_local);

  std::set<int> sa_local;
  for (int gid : answer_bearing_sentences(ex)) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == gid) sa_local.insert(static_cast<int>(i));
    }
  }
  auto na_term = no_answer_penalty(tape, run.scores, extracted, sa_local);

  auto total = tape.add_scaled({answer.loss, rationale_term, na_term},
                               {1.0, config.lambda_r, config.lambda_na});
  tape.backward(total);

  record.loss_answer = answer.loss.scalar();
  record.loss_rationale = rationale_term.scalar();
  record.loss_no_answer = na_term.scalar();
  record.loss_total = total.scalar();
  return record;
}

TrainReport train_e2e(PipelineModel& model, const std::vector<Example>& examples,
                      const TrainingConfig& config) {
  std::mt19937_64 sample_rng(derive_seed(config.seed, "e2e-gumbel"));
  return run_epochs(model, examples.size(), config, config.e2e_epochs, "end-to-end training",
                    [&](std::size_t idx, int, TrainReport& report) {
                      auto record = e2e_step(model, examples[idx], config, sample_rng);
                      double loss = record.loss_total;
                      report.step_log.push_back(std::move(record));
                      return loss;
                    });
}

}  // namespace rcpipe
