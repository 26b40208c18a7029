#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rcpipe/corpus.hpp"
#include "rcpipe/tfidf.hpp"

namespace rcpipe {

// Examples bucketed by how many original gold supporting facts are absent
// from the retrieved passage. Keys: 0, 1, 2, 3 (3 means "3 or more").
struct CnaStats {
  std::map<int, std::int64_t> counts{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  std::int64_t excluded = 0;

  std::int64_t total() const;
  static int bucket(int absent) { return absent >= 3 ? 3 : absent; }
  std::string to_json() const;
};

struct BuildResult {
  std::vector<Example> examples;
  CnaStats stats;
};

// Rewrites each annotated example against its retrieved passage: gold
// supporting facts missing from the passage are dropped from the rationale,
// and the gold answer becomes CNA whenever any original gold fact is absent.
// `gold` carries the annotations; `retrieved` carries the retrieved
// paragraphs, matched by example id. Examples without gold-paragraph
// annotations are excluded and counted.
BuildResult build_fullwiki_cna(const std::vector<Example>& gold,
                               const std::vector<Example>& retrieved);

// Produces one CNA training sample for a query by replacing one gold
// paragraph (seed-chosen uniformly) with the pool paragraph containing the
// sentence most TF-IDF-similar to the query. Ties break on the lowest
// paragraph index, then lowest sentence index. Returns nullopt when the
// pool is empty.
std::optional<Example> negative_sample_cna(const Example& example,
                                           const std::vector<Paragraph>& pool,
                                           std::uint64_t rng_seed);

// Restricts an example to its gold paragraphs, remapping rationale ids.
Example restrict_to_gold_paragraphs(const Example& example);

// The example's non-gold paragraphs, in passage order.
std::vector<Paragraph> non_gold_paragraphs(const Example& example);

// Per-example seed stream derived from a global seed and the example id.
std::uint64_t derive_seed(std::uint64_t global_seed, const std::string& example_id);

}  // namespace rcpipe
