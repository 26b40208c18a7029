#pragma once

#include <string>
#include <vector>

#include "rcpipe/corpus.hpp"
#include "rcpipe/tokenizer.hpp"

namespace rcpipe {

enum class TokenSource { Marker, Query, Sentence };

struct PackedToken {
  int id = 0;
  TokenSource source = TokenSource::Marker;
  int sentence_id = -1;   // global sentence id for Sentence tokens
  int char_start = -1;    // offsets into rationale_text (answer packing only)
  int char_end = -1;
};

struct PackingLimits {
  int max_sequence_length = 512;
  int max_query_length = 64;
  int max_sentences = 20;
  int max_sentence_length = 160;
};

struct PackedInput {
  std::vector<PackedToken> tokens;
  // Extraction packing: index of each sentence's [CLS_S], in sentence-id
  // order. Answer packing: {0}, the [CLS] position.
  std::vector<int> marker_positions;
  // Global ids of the sentences actually packed, in pack order.
  std::vector<int> packed_sentence_ids;
  // Answer packing: the concatenated rationale string token offsets refer to.
  std::string rationale_text;
  // Answer packing: [first, last) token index range per packed sentence.
  std::vector<std::pair<int, int>> sentence_token_ranges;
  // Answer packing: [start, end) char range of each packed sentence inside
  // rationale_text, aligned with packed_sentence_ids.
  std::vector<std::pair<int, int>> sentence_char_ranges;
  bool truncated = false;

  std::vector<int> ids() const;
  int length() const { return static_cast<int>(tokens.size()); }
};

// [CLS_Q] query [SEP_Q] ([CLS_S] sentence_i [SEP_S]) x N^s. Overflow drops
// whole trailing sentences first, then truncates the last kept sentence.
PackedInput pack_extraction_input(const std::string& query,
                                  const std::vector<Sentence>& sentences,
                                  const Tokenizer& tok,
                                  const PackingLimits& limits = {});

// [CLS] query [SEP] rationale [SEP], rationale sentences concatenated in
// sentence-id order; the rationale tail is truncated to fit.
PackedInput pack_answer_input(const std::string& query,
                              const std::vector<Sentence>& rationale_sentences,
                              const Tokenizer& tok,
                              const PackingLimits& limits = {});

}  // namespace rcpipe
