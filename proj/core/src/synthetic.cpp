#include "rcpipe/synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "rcpipe/text.hpp"

namespace rcpipe {

namespace {

const char* kSyllables[] = {"ba", "do", "ki", "lu", "mer", "na", "po",
                            "ri", "sa", "tu", "ve", "zo", "cha", "fen"};
constexpr int kSyllableCount = 14;

const char* kRelations[] = {"works", "trains", "sings", "paints", "sails"};
constexpr int kRelationCount = 5;

std::string person_name(int i) {
  std::string name = kSyllables[i % kSyllableCount];
  name += kSyllables[(i / kSyllableCount + i) % kSyllableCount];
  name += std::to_string(i % 10);
  return name;
}

std::string place_name(int i) {
  std::string name = kSyllables[(i * 3 + 1) % kSyllableCount];
  name += kSyllables[(i * 5 + 2) % kSyllableCount];
  name += "ton";
  name += std::to_string(i % 10);
  return name;
}

}  // namespace

std::vector<Example> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.entity_vocab_size <
      2 + 2 * spec.paragraphs_per_passage * spec.sentences_per_paragraph)
    throw std::invalid_argument("entity vocabulary too small for collision-free passages");
  if (spec.cna_fraction < 0.0 || spec.cna_fraction > 1.0)
    throw std::invalid_argument("cna_fraction must be in [0,1]");
  if (spec.relations < 1 || spec.relations > kRelationCount)
    throw std::invalid_argument("relations out of range");
  if (spec.paragraphs_per_passage < 2 || spec.sentences_per_paragraph < 1)
    throw std::invalid_argument("passage shape too small");

  std::mt19937_64 rng(spec.seed);
  std::vector<Example> out;
  int target_cna = static_cast<int>(spec.example_count * spec.cna_fraction + 0.5);
  int emitted_cna = 0;

  for (int ei = 0; ei < spec.example_count; ++ei) {
    // Spread CNA examples evenly so every slice of the corpus has both kinds.
    bool is_cna = false;
    int remaining = spec.example_count - ei;
    int needed = target_cna - emitted_cna;
    if (needed == remaining) {
      is_cna = true;
    } else if (needed > 0) {
      double ratio = static_cast<double>(needed) / remaining;
      is_cna = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < ratio;
    }
    if (is_cna) ++emitted_cna;

    // Entities for this passage, sampled without replacement.
    std::vector<int> person_idx(spec.entity_vocab_size);
    std::vector<int> place_idx(spec.entity_vocab_size);
    for (int i = 0; i < spec.entity_vocab_size; ++i) person_idx[i] = place_idx[i] = i;
    std::shuffle(person_idx.begin(), person_idx.end(), rng);
    std::shuffle(place_idx.begin(), place_idx.end(), rng);
    int next_person = 0, next_place = 0;
    auto fresh_person = [&] { return person_name(person_idx[next_person++]); };
    auto fresh_place = [&] { return place_name(place_idx[next_place++]); };

    std::string qent = fresh_person();
    std::string bridge = fresh_person();
    std::string answer_city = fresh_place();
    std::string rel = kRelations[rng() % spec.relations];

    std::string sentence_a = bridge + " " + rel + " with " + qent + " .";
    std::string sentence_b = bridge + " lives in " + answer_city + " .";
    std::string query =
        "where does the person that " + rel + " with " + qent + " live ?";

    // Distractor sentence factory; never mentions qent, bridge, or the
    // answer city, so neither hop can be completed without the gold pair.
    auto distractor_first_hop = [&] {
      std::string a = fresh_person();
      std::string b = fresh_person();
      return a + " " + kRelations[rng() % spec.relations] + " with " + b + " .";
    };
    auto distractor_second_hop = [&] {
      return fresh_person() + " lives in " + fresh_place() + " .";
    };

    bool drop_first_hop = is_cna && (rng() % 2 == 0);
    bool drop_second_hop = is_cna && !drop_first_hop;

    Paragraph gold_a;
    gold_a.title = "about " + qent;
    if (!drop_first_hop) gold_a.sentences.push_back(sentence_a);
    while (static_cast<int>(gold_a.sentences.size()) < spec.sentences_per_paragraph)
      gold_a.sentences.push_back(distractor_first_hop());
    std::shuffle(gold_a.sentences.begin(), gold_a.sentences.end(), rng);

    Paragraph gold_b;
    gold_b.title = "about " + bridge;
    if (!drop_second_hop) gold_b.sentences.push_back(sentence_b);
    while (static_cast<int>(gold_b.sentences.size()) < spec.sentences_per_paragraph)
      gold_b.sentences.push_back(distractor_second_hop());
    std::shuffle(gold_b.sentences.begin(), gold_b.sentences.end(), rng);

    Example ex;
    ex.id = "syn-" + std::to_string(spec.seed) + "-" + std::to_string(ei);
    ex.query = query;
    ex.gold_paragraph_titles = {gold_a.title, gold_b.title};

    std::vector<Paragraph> paragraphs{gold_a, gold_b};
    while (static_cast<int>(paragraphs.size()) < spec.paragraphs_per_passage) {
      Paragraph filler;
      std::string owner = fresh_person();
      filler.title = "about " + owner;
      for (int si = 0; si < spec.sentences_per_paragraph; ++si) {
        filler.sentences.push_back(si % 2 == 0 ? distractor_first_hop()
                                               : distractor_second_hop());
      }
      paragraphs.push_back(std::move(filler));
    }
    std::shuffle(paragraphs.begin(), paragraphs.end(), rng);
    ex.passage.paragraphs = paragraphs;

    auto find_sentence = [&](const std::string& s) -> std::optional<int> {
      auto sentences = ex.passage.sentences();
      for (const auto& sent : sentences) {
        if (sent.text == s) return sent.id;
      }
      return std::nullopt;
    };

    if (is_cna) {
      ex.gold_answer.label = AnswerLabel::Cna;
      ex.absent_gold_sfs = 1;
      auto kept = drop_first_hop ? find_sentence(sentence_b) : find_sentence(sentence_a);
      if (kept) ex.gold_rationale.insert(*kept);
    } else {
      ex.gold_answer.label = AnswerLabel::Span;
      ex.gold_answer.span_text = answer_city;
      auto ida = find_sentence(sentence_a);
      auto idb = find_sentence(sentence_b);
      if (!ida || !idb) throw std::logic_error("bridge sentence lost during generation");
      ex.gold_rationale = {*ida, *idb};
      align_answer_span(ex);

      // Structural checks: the answer span occurs exactly once, and the query
      // entity's link sentence is unique.
      int span_occurrences = 0;
      int link_occurrences = 0;
      for (const auto& s : ex.passage.sentences()) {
        if (s.text.find(" " + answer_city + " ") != std::string::npos) ++span_occurrences;
        if (s.text.find(" " + qent + " ") != std::string::npos) ++link_occurrences;
      }
      if (span_occurrences != 1 || link_occurrences != 1)
        throw std::logic_error("synthetic passage violates the two-hop structure");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace rcpipe
