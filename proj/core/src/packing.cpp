#include "rcpipe/packing.hpp"

#include <algorithm>
#include <stdexcept>

namespace rcpipe {

std::vector<int> PackedInput::ids() const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.id);
  return out;
}

PackedInput pack_extraction_input(const std::string& query,
                                  const std::vector<Sentence>& sentences,
                                  const Tokenizer& tok, const PackingLimits& limits) {
  if (sentences.empty()) throw std::invalid_argument("extraction packing needs sentences");

  PackedInput packed;
  auto query_tokens = tok.encode(query);
  if (static_cast<int>(query_tokens.size()) > limits.max_query_length) {
    query_tokens.resize(limits.max_query_length);
    packed.truncated = true;
  }

  std::vector<Sentence> kept(sentences.begin(), sentences.end());
  std::sort(kept.begin(), kept.end(),
            [](const Sentence& a, const Sentence& b) { return a.id < b.id; });
  if (static_cast<int>(kept.size()) > limits.max_sentences) {
    kept.resize(limits.max_sentences);
    packed.truncated = true;
  }

  std::vector<std::vector<TokenSpan>> sent_tokens;
  for (const auto& s : kept) {
    auto ts = tok.encode(s.text);
    if (static_cast<int>(ts.size()) > limits.max_sentence_length) {
      ts.resize(limits.max_sentence_length);
      packed.truncated = true;
    }
    sent_tokens.push_back(std::move(ts));
  }

  // Drop whole trailing sentences until the sequence fits, then truncate the
  // last kept sentence if a single unit still overflows.
  auto total_len = [&](size_t n_sent) {
    int len = 2 + static_cast<int>(query_tokens.size());
    for (size_t i = 0; i < n_sent; ++i) len += 2 + static_cast<int>(sent_tokens[i].size());
    return len;
  };
  size_t n_sent = kept.size();
  while (n_sent > 1 && total_len(n_sent) > limits.max_sequence_length) {
    --n_sent;
    packed.truncated = true;
  }
  if (total_len(n_sent) > limits.max_sequence_length) {
    int overflow = total_len(n_sent) - limits.max_sequence_length;
    auto& last = sent_tokens[n_sent - 1];
    last.resize(last.size() - overflow);
    packed.truncated = true;
  }

  packed.tokens.push_back(PackedToken{Tokenizer::kClsQ, TokenSource::Marker, -1, -1, -1});
  for (const auto& t : query_tokens)
    packed.tokens.push_back(PackedToken{t.id, TokenSource::Query, -1, -1, -1});
  packed.tokens.push_back(PackedToken{Tokenizer::kSepQ, TokenSource::Marker, -1, -1, -1});
  for (size_t i = 0; i < n_sent; ++i) {
    packed.marker_positions.push_back(static_cast<int>(packed.tokens.size()));
    packed.packed_sentence_ids.push_back(kept[i].id);
    packed.tokens.push_back(
        PackedToken{Tokenizer::kClsS, TokenSource::Marker, kept[i].id, -1, -1});
    for (const auto& t : sent_tokens[i])
      packed.tokens.push_back(PackedToken{t.id, TokenSource::Sentence, kept[i].id, -1, -1});
    packed.tokens.push_back(
        PackedToken{Tokenizer::kSepS, TokenSource::Marker, kept[i].id, -1, -1});
  }
  return packed;
}

PackedInput pack_answer_input(const std::string& query,
                              const std::vector<Sentence>& rationale_sentences,
                              const Tokenizer& tok, const PackingLimits& limits) {
  PackedInput packed;
  auto query_tokens = tok.encode(query);
  if (static_cast<int>(query_tokens.size()) > limits.max_query_length) {
    query_tokens.resize(limits.max_query_length);
    packed.truncated = true;
  }

  std::vector<Sentence> ordered(rationale_sentences.begin(), rationale_sentences.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const Sentence& a, const Sentence& b) { return a.id < b.id; });

  // Concatenate rationale text; remember per-sentence char offsets.
  std::vector<std::pair<int, int>> sentence_char_ranges;
  for (const auto& s : ordered) {
    if (!packed.rationale_text.empty()) packed.rationale_text.push_back(' ');
    int start = static_cast<int>(packed.rationale_text.size());
    packed.rationale_text += s.text;
    sentence_char_ranges.emplace_back(start, static_cast<int>(packed.rationale_text.size()));
  }

  auto rationale_tokens = tok.encode(packed.rationale_text);
  int budget = limits.max_sequence_length - 3 - static_cast<int>(query_tokens.size());
  if (static_cast<int>(rationale_tokens.size()) > budget) {
    rationale_tokens.resize(std::max(budget, 0));
    packed.truncated = true;
  }

  packed.tokens.push_back(PackedToken{Tokenizer::kCls, TokenSource::Marker, -1, -1, -1});
  packed.marker_positions.push_back(0);
  for (const auto& t : query_tokens)
    packed.tokens.push_back(PackedToken{t.id, TokenSource::Query, -1, -1, -1});
  packed.tokens.push_back(PackedToken{Tokenizer::kSep, TokenSource::Marker, -1, -1, -1});

  int rationale_first = static_cast<int>(packed.tokens.size());
  for (const auto& t : rationale_tokens) {
    int sent_id = -1;
    for (size_t i = 0; i < ordered.size(); ++i) {
      if (t.char_start >= sentence_char_ranges[i].first &&
          t.char_start < sentence_char_ranges[i].second) {
        sent_id = ordered[i].id;
        break;
      }
    }
    packed.tokens.push_back(
        PackedToken{t.id, TokenSource::Sentence, sent_id, t.char_start, t.char_end});
  }
  packed.tokens.push_back(PackedToken{Tokenizer::kSep, TokenSource::Marker, -1, -1, -1});

  for (size_t i = 0; i < ordered.size(); ++i) {
    int first = -1, last = -1;
    for (int ti = rationale_first; ti < static_cast<int>(packed.tokens.size()) - 1; ++ti) {
      if (packed.tokens[ti].sentence_id == ordered[i].id) {
        if (first < 0) first = ti;
        last = ti + 1;
      }
    }
    if (first >= 0) {
      packed.packed_sentence_ids.push_back(ordered[i].id);
      packed.sentence_token_ranges.emplace_back(first, last);
      packed.sentence_char_ranges.push_back(sentence_char_ranges[i]);
    }
  }
  return packed;
}

}  // namespace rcpipe
