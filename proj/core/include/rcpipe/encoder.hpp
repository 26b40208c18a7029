#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcpipe/autodiff.hpp"

namespace rcpipe {

struct EncoderConfig {
  int vocabulary_size = 0;
  int embedding_dim = 64;
  int layer_count = 2;
  int head_count = 4;
  int feed_forward_dim = 256;
  int max_positions = 512;
};

// Pre-LN transformer over learned token + position embeddings. Parameters are
// registered into a caller-owned ParamSet under a name prefix, so several
// encoders (extraction / answer / ranker) can share one optimizer state.
class Encoder {
 public:
  Encoder(ad::ParamSet& params, std::string prefix, const EncoderConfig& config);

  void init_weights(std::uint64_t seed);

  // Token + position embeddings, one row per token.
  ad::Var embed(ad::Tape& tape, const std::vector<int>& ids) const;
  // Transformer stack over an embedding matrix (rows x d).
  ad::Var encode_from(ad::Tape& tape, ad::Var x) const;
  // embed + encode_from.
  ad::Var forward(ad::Tape& tape, const std::vector<int>& ids) const;

  const EncoderConfig& config() const { return config_; }

 private:
  struct Layer {
    ad::Param *ln1_g, *ln1_b, *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    ad::Param *ln2_g, *ln2_b, *w1, *b1, *w2, *b2;
  };

  EncoderConfig config_;
  ad::Param *tok_emb_, *pos_emb_;
  std::vector<Layer> layers_;
  ad::Param *lnf_g_, *lnf_b_;
};

}  // namespace rcpipe
