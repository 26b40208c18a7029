#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcpipe {

enum class AnswerLabel { Yes, No, Span, Cna };

std::string to_string(AnswerLabel label);
AnswerLabel answer_label_from_string(const std::string& s);

struct Sentence {
  int id = -1;  // global index within the passage
  std::string paragraph_title;
  std::string text;
};

struct Paragraph {
  std::string title;
  std::vector<std::string> sentences;
};

struct Passage {
  std::vector<Paragraph> paragraphs;

  int sentence_count() const;
  int paragraph_count() const { return static_cast<int>(paragraphs.size()); }

  // Flat view with stable global ids, ordered by (paragraph, sentence).
  std::vector<Sentence> sentences() const;
  // Maps a global sentence id back to (paragraph index, sentence index).
  std::pair<int, int> locate(int sentence_id) const;
  // Global id for (title, sentence index); nullopt when not present.
  std::optional<int> global_id(const std::string& title, int sent_idx) const;
};

struct AnswerTarget {
  AnswerLabel label = AnswerLabel::Span;
  std::optional<std::string> span_text;
  // Character offsets into the sentence named by span_sentence_id.
  std::optional<std::pair<int, int>> span_char_range;
  std::optional<int> span_sentence_id;
};

struct Example {
  std::string id;
  std::string query;
  Passage passage;
  AnswerTarget gold_answer;
  std::set<int> gold_rationale;
  std::vector<std::string> gold_paragraph_titles;
  std::vector<std::string> flags;        // e.g. unresolvable_sf, span_unalignable
  int absent_gold_sfs = 0;               // provenance from dataset construction

  bool has_flag(const std::string& f) const;
};

struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads a HotpotQA-format JSON file (array of records with question, answer,
// context, supporting_facts) into the internal data model. Supporting facts
// are resolved to global sentence ids; missing referents flag the example
// `unresolvable_sf` and the fact is dropped.
std::vector<Example> load_hotpot_file(const std::string& path);

// Resolves the span character range for a Span-labelled example: first
// occurrence inside a gold-rationale sentence (in id order), then anywhere
// in the passage, else the example is flagged `span_unalignable`.
AnswerTarget align_answer_span(Example& example);

// Internal dataset format: JSON Lines, one Example per line, UTF-8.
void save_jsonl(const std::vector<Example>& examples, const std::string& path);
std::vector<Example> load_jsonl(const std::string& path);
std::string example_to_json(const Example& e);
Example example_from_json(const std::string& line);

// Serializes examples back out in the HotpotQA record schema.
void save_hotpot_format(const std::vector<Example>& examples, const std::string& path);

}  // namespace rcpipe
