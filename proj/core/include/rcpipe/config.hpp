#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "rcpipe/encoder.hpp"

namespace rcpipe {

struct TrainingConfig {
  double lambda_r = 0.1;
  double lambda_na = 1.0;
  double tau = 0.5;
  int batch_size = 72;
  int pretrain_epochs = 5;
  int e2e_epochs = 2;
  double learning_rate = 5e-5;
  double weight_decay = 0.0;
  int n_r = 5;                 // max number of rationales
  int k = 3;                   // paragraph pairs kept by the ranker
  double alpha = 0.5;          // extraction threshold
  double beta = 0.5;           // CNA output gate
  std::uint64_t seed = 17;
  bool freeze_answerer_in_e2e = false;
  // Answerer pre-training on noisy rationale variants (incomplete, padded,
  // and off-topic rationales with matching CNA targets) instead of only the
  // gold rationale. Off by default.
  bool noisy_answer_pretrain = false;

  std::map<std::string, std::string> to_map() const;
};

// Flat key-value config file: one `key = value` per line, `#` comments.
// Unknown keys are an error. Keys match the field names above and the
// EncoderConfig field names.
struct FileConfig {
  TrainingConfig training;
  EncoderConfig encoder;

  static FileConfig parse_file(const std::string& path);
  static FileConfig parse_text(const std::string& text);
  // CLI flag > config file > built-in default.
  void apply_override(const std::string& key, const std::string& value);
};

// One manifest per run, written next to the outputs.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  double wall_clock_seconds = 0.0;

  void write(const std::string& path) const;
};

std::string code_version();

}  // namespace rcpipe
