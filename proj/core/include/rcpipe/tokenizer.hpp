#pragma once

#include <map>
#include <string>
#include <vector>

#include "rcpipe/corpus.hpp"

namespace rcpipe {

struct TokenSpan {
  int id = 0;
  int char_start = 0;  // offsets into the source string
  int char_end = 0;
};

// Lowercase word-level tokenizer with character fallback for unknown words.
// The vocabulary is built from the training corpus; single characters seen
// anywhere in the corpus are always present, so fallback cannot miss.
class Tokenizer {
 public:
  // Special token ids are fixed and precede the learned vocabulary.
  static constexpr int kClsQ = 0;
  static constexpr int kSepQ = 1;
  static constexpr int kClsS = 2;
  static constexpr int kSepS = 3;
  static constexpr int kCls = 4;
  static constexpr int kSep = 5;
  static constexpr int kUnk = 6;
  static constexpr int kSpecialCount = 7;

  static Tokenizer build(const std::vector<Example>& corpus);
  static Tokenizer build_from_texts(const std::vector<std::string>& texts);

  std::vector<TokenSpan> encode(const std::string& txt) const;
  int vocab_size() const { return kSpecialCount + static_cast<int>(terms_.size()); }

  std::vector<std::string> terms() const { return terms_; }
  static Tokenizer from_terms(const std::vector<std::string>& terms);

 private:
  std::vector<std::string> terms_;          // learned vocabulary, id = kSpecialCount + index
  std::map<std::string, int> term_to_id_;   // term -> full id
};

}  // namespace rcpipe
