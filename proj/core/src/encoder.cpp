#include "rcpipe/encoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace rcpipe {

using ad::Var;

Encoder::Encoder(ad::ParamSet& params, std::string prefix, const EncoderConfig& config)
    : config_(config) {
  if (config.embedding_dim % config.head_count != 0)
    throw std::invalid_argument("embedding_dim must be divisible by head_count");
  int d = config.embedding_dim;
  auto P = [&](const std::string& name, int r, int c) -> ad::Param* {
    return &params.add(prefix + "." + name, r, c);
  };
  tok_emb_ = P("tok_emb", config.vocabulary_size, d);
  pos_emb_ = P("pos_emb", config.max_positions, d);
  for (int l = 0; l < config.layer_count; ++l) {
    std::string lp = "layer" + std::to_string(l);
    Layer layer{
        P(lp + ".ln1_g", 1, d), P(lp + ".ln1_b", 1, d),
        P(lp + ".wq", d, d),    P(lp + ".bq", 1, d),
        P(lp + ".wk", d, d),    P(lp + ".bk", 1, d),
        P(lp + ".wv", d, d),    P(lp + ".bv", 1, d),
        P(lp + ".wo", d, d),    P(lp + ".bo", 1, d),
        P(lp + ".ln2_g", 1, d), P(lp + ".ln2_b", 1, d),
        P(lp + ".w1", d, config.feed_forward_dim), P(lp + ".b1", 1, config.feed_forward_dim),
        P(lp + ".w2", config.feed_forward_dim, d), P(lp + ".b2", 1, d),
    };
    layers_.push_back(layer);
  }
  lnf_g_ = P("lnf_g", 1, d);
  lnf_b_ = P("lnf_b", 1, d);
}

void Encoder::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.02);
  auto fill = [&](ad::Param* p) {
    for (int i = 0; i < p->value.size(); ++i) p->value(i) = dist(rng);
  };
  fill(tok_emb_);
  fill(pos_emb_);
  for (auto& l : layers_) {
    l.ln1_g->value.setOnes();
    l.ln1_b->value.setZero();
    fill(l.wq); l.bq->value.setZero();
    fill(l.wk); l.bk->value.setZero();
    fill(l.wv); l.bv->value.setZero();
    fill(l.wo); l.bo->value.setZero();
    l.ln2_g->value.setOnes();
    l.ln2_b->value.setZero();
    fill(l.w1); l.b1->value.setZero();
    fill(l.w2); l.b2->value.setZero();
  }
  lnf_g_->value.setOnes();
  lnf_b_->value.setZero();
}

Var Encoder::embed(ad::Tape& tape, const std::vector<int>& ids) const {
  for (int id : ids) {
    if (id < 0 || id >= config_.vocabulary_size)
      throw std::out_of_range("token id outside vocabulary: " + std::to_string(id));
  }
  if (static_cast<int>(ids.size()) > config_.max_positions)
    throw std::out_of_range("sequence longer than max_positions");
  std::vector<int> positions(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
  Var tok = tape.embed_rows(*tok_emb_, ids);
  Var pos = tape.embed_rows(*pos_emb_, positions);
  return tape.add(tok, pos);
}

Var Encoder::encode_from(ad::Tape& tape, Var x) const {
  int d = config_.embedding_dim;
  int heads = config_.head_count;
  int dh = d / heads;
  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  for (const auto& l : layers_) {
    Var normed = tape.layer_norm(x, tape.leaf(*l.ln1_g), tape.leaf(*l.ln1_b));
    Var q = tape.add_row_broadcast(tape.matmul(normed, tape.leaf(*l.wq)), tape.leaf(*l.bq));
    Var k = tape.add_row_broadcast(tape.matmul(normed, tape.leaf(*l.wk)), tape.leaf(*l.bk));
    Var v = tape.add_row_broadcast(tape.matmul(normed, tape.leaf(*l.wv)), tape.leaf(*l.bv));
    std::vector<Var> head_outputs;
    for (int h = 0; h < heads; ++h) {
      Var qh = tape.slice_cols(q, h * dh, dh);
      Var kh = tape.slice_cols(k, h * dh, dh);
      Var vh = tape.slice_cols(v, h * dh, dh);
      Var scores = tape.scale(tape.matmul_abt(qh, kh), inv_sqrt_dh);
      Var attn = tape.row_softmax(scores);
      head_outputs.push_back(tape.matmul(attn, vh));
    }
    Var ctx = tape.concat_cols(head_outputs);
    Var proj = tape.add_row_broadcast(tape.matmul(ctx, tape.leaf(*l.wo)), tape.leaf(*l.bo));
    x = tape.add(x, proj);

    Var normed2 = tape.layer_norm(x, tape.leaf(*l.ln2_g), tape.leaf(*l.ln2_b));
    Var hidden = tape.gelu(
        tape.add_row_broadcast(tape.matmul(normed2, tape.leaf(*l.w1)), tape.leaf(*l.b1)));
    Var ff = tape.add_row_broadcast(tape.matmul(hidden, tape.leaf(*l.w2)), tape.leaf(*l.b2));
    x = tape.add(x, ff);
  }
  return tape.layer_norm(x, tape.leaf(*lnf_g_), tape.leaf(*lnf_b_));
}

Var Encoder::forward(ad::Tape& tape, const std::vector<int>& ids) const {
  return encode_from(tape, embed(tape, ids));
}

}  // namespace rcpipe
