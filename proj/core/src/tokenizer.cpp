#include "rcpipe/tokenizer.hpp"

#include <cctype>
#include <set>

namespace rcpipe {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
char to_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

struct RawToken {
  std::string word;
  int start;
  int end;
};

// Lowercased word split; punctuation characters are standalone tokens.
std::vector<RawToken> raw_tokens(const std::string& txt) {
  std::vector<RawToken> out;
  std::string cur;
  int cur_start = 0;
  auto flush = [&](int end) {
    if (!cur.empty()) {
      out.push_back(RawToken{cur, cur_start, end});
      cur.clear();
    }
  };
  for (int i = 0; i < static_cast<int>(txt.size()); ++i) {
    char c = txt[i];
    if (is_space(c)) {
      flush(i);
    } else if (is_punct(c)) {
      flush(i);
      out.push_back(RawToken{std::string(1, to_lower(c)), i, i + 1});
    } else {
      if (cur.empty()) cur_start = i;
      cur.push_back(to_lower(c));
    }
  }
  flush(static_cast<int>(txt.size()));
  return out;
}

}  // namespace

Tokenizer Tokenizer::build_from_texts(const std::vector<std::string>& texts) {
  std::set<std::string> words;
  std::set<std::string> chars;
  for (const auto& txt : texts) {
    for (const auto& t : raw_tokens(txt)) {
      words.insert(t.word);
      for (char c : t.word) chars.insert(std::string(1, c));
    }
  }
  std::vector<std::string> terms;
  // Characters first so fallback ids are stable even as word vocab grows.
  for (const auto& c : chars) terms.push_back(c);
  for (const auto& w : words) {
    if (w.size() > 1) terms.push_back(w);
  }
  return from_terms(terms);
}

Tokenizer Tokenizer::build(const std::vector<Example>& corpus) {
  std::vector<std::string> texts;
  for (const auto& e : corpus) {
    texts.push_back(e.query);
    for (const auto& p : e.passage.paragraphs) {
      texts.push_back(p.title);
      for (const auto& s : p.sentences) texts.push_back(s);
    }
  }
  return build_from_texts(texts);
}

Tokenizer Tokenizer::from_terms(const std::vector<std::string>& terms) {
  Tokenizer tok;
  tok.terms_ = terms;
  for (int i = 0; i < static_cast<int>(terms.size()); ++i)
    tok.term_to_id_.emplace(terms[i], kSpecialCount + i);
  return tok;
}

std::vector<TokenSpan> Tokenizer::encode(const std::string& txt) const {
  std::vector<TokenSpan> out;
  for (const auto& t : raw_tokens(txt)) {
    auto it = term_to_id_.find(t.word);
    if (it != term_to_id_.end()) {
      out.push_back(TokenSpan{it->second, t.start, t.end});
      continue;
    }
    // Character fallback; unknown characters map to kUnk.
    for (int i = 0; i < static_cast<int>(t.word.size()); ++i) {
      auto cit = term_to_id_.find(std::string(1, t.word[i]));
      int id = cit != term_to_id_.end() ? cit->second : kUnk;
      out.push_back(TokenSpan{id, t.start + i, t.start + i + 1});
    }
  }
  return out;
}

}  // namespace rcpipe
