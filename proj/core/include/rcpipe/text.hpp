#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rcpipe::text {

// Collapses whitespace runs to single spaces and strips the edges.
// Applied before any string comparison in the pipeline.
std::string normalize_whitespace(std::string_view s);

std::string lowercase(std::string_view s);

// Lowercased word split on whitespace and punctuation boundaries.
// Punctuation characters become their own tokens.
std::vector<std::string> word_tokens(std::string_view s);

// Lowercased unigram terms with punctuation stripped, for TF-IDF vectors.
std::vector<std::string> tfidf_terms(std::string_view s);

// Answer-string normalization used by the EM/F1 metrics: lowercase,
// punctuation removal, article (a/an/the) removal, whitespace collapse.
std::string normalize_answer(std::string_view s);

std::vector<std::string> split_words(std::string_view s);

}  // namespace rcpipe::text
