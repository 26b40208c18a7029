#pragma once

#include <cstdint>
#include <vector>

#include "rcpipe/corpus.hpp"

namespace rcpipe {

// Seed-deterministic two-hop corpus: sentence A links the query entity to a
// bridge entity, sentence B links the bridge entity to the answer span.
// CNA examples omit exactly one of the two bridge sentences.
struct SyntheticSpec {
  int example_count = 200;
  int entity_vocab_size = 40;   // persons and places each
  int relations = 1;            // first-hop relation verbs in use
  int paragraphs_per_passage = 4;
  int sentences_per_paragraph = 3;
  double cna_fraction = 0.0;
  std::uint64_t seed = 1;
};

std::vector<Example> generate_synthetic(const SyntheticSpec& spec);

}  // namespace rcpipe
