#include "rcpipe/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

namespace rcpipe {

using ad::Mat;
using ad::Var;
using nlohmann::json;

PipelineModel::PipelineModel(Tokenizer tokenizer, EncoderConfig config)
    : tokenizer_(std::move(tokenizer)), config_(config) {
  config_.vocabulary_size = tokenizer_.vocab_size();
  ext_encoder_ = std::make_unique<Encoder>(params_, "ext", config_);
  ans_encoder_ = std::make_unique<Encoder>(params_, "ans", config_);
  rank_encoder_ = std::make_unique<Encoder>(params_, "rank", config_);
  ext_head_ = std::make_unique<ExtractionHead>(params_, "ext_head", config_.embedding_dim);
  ans_head_ = std::make_unique<AnswerHead>(params_, "ans_head", config_.embedding_dim);
  rank_w_ = &params_.add("rank_head.w", config_.embedding_dim, 1);
  rank_b_ = &params_.add("rank_head.b", 1, 1);
}

void PipelineModel::init_weights(std::uint64_t seed) {
  ext_encoder_->init_weights(seed * 6364136223846793005ULL + 1);
  ans_encoder_->init_weights(seed * 6364136223846793005ULL + 2);
  rank_encoder_->init_weights(seed * 6364136223846793005ULL + 3);
  ext_head_->init_weights(seed * 6364136223846793005ULL + 4);
  ans_head_->init_weights(seed * 6364136223846793005ULL + 5);
  std::mt19937_64 rng(seed * 6364136223846793005ULL + 6);
  std::normal_distribution<double> dist(0.0, 0.02);
  for (int i = 0; i < rank_w_->value.size(); ++i) rank_w_->value(i) = dist(rng);
  rank_b_->value.setZero();
}

PipelineModel::ExtractionRun PipelineModel::run_extraction(
    ad::Tape& tape, const std::string& query, const std::vector<Sentence>& sentences) const {
  ExtractionRun run{pack_extraction_input(query, sentences, tokenizer_, limits_), {}};
  Var h = ext_encoder_->forward(tape, run.packed.ids());
  run.scores = ext_head_->score_sentences(tape, h, run.packed.marker_positions);
  return run;
}

PipelineModel::AnswerRun PipelineModel::run_answer(ad::Tape& tape, const std::string& query,
                                                   const std::vector<Sentence>& rationale,
                                                   const std::map<int, ad::Var>* gates) const {
  AnswerRun run{pack_answer_input(query, rationale, tokenizer_, limits_), {}};
  Var x = ans_encoder_->embed(tape, run.packed.ids());
  if (gates != nullptr) {
    for (size_t i = 0; i < run.packed.packed_sentence_ids.size(); ++i) {
      auto it = gates->find(run.packed.packed_sentence_ids[i]);
      if (it == gates->end()) continue;
      auto [first, last] = run.packed.sentence_token_ranges[i];
      x = tape.scale_rows(x, first, last - first, it->second);
    }
  }
  Var h = ans_encoder_->encode_from(tape, x);
  run.scores = ans_head_->compute_answer_scores(tape, h, run.packed);
  return run;
}

ad::Var PipelineModel::ranker_logit_var(ad::Tape& tape, const std::string& query,
                                        const Paragraph& paragraph) const {
  std::vector<Sentence> sentences;
  for (int i = 0; i < static_cast<int>(paragraph.sentences.size()); ++i)
    sentences.push_back(Sentence{i, paragraph.title, paragraph.sentences[i]});
  PackedInput packed = pack_answer_input(query, sentences, tokenizer_, limits_);
  Var h = rank_encoder_->forward(tape, packed.ids());
  Var cls = tape.slice_rows(h, 0, 1);
  return tape.add(tape.matmul(cls, tape.leaf(*rank_w_)), tape.leaf(*rank_b_));
}

ad::Var PipelineModel::ranker_score_var(ad::Tape& tape, const std::string& query,
                                        const Paragraph& paragraph) const {
  return tape.sigmoid(ranker_logit_var(tape, query, paragraph));
}

double PipelineModel::ranker_score(const std::string& query, const Paragraph& paragraph) const {
  ad::Tape tape;
  return ranker_score_var(tape, query, paragraph).scalar();
}

namespace {

json param_to_json(const ad::Param& p) {
  std::vector<double> data(p.value.data(), p.value.data() + p.value.size());
  return json{{"rows", p.value.rows()}, {"cols", p.value.cols()}, {"data", data}};
}

}  // namespace

void PipelineModel::save(const std::string& path) const {
  json obj;
  obj["format"] = "rcpipe-checkpoint-v1";
  obj["encoder_config"] = {{"vocabulary_size", config_.vocabulary_size},
                           {"embedding_dim", config_.embedding_dim},
                           {"layer_count", config_.layer_count},
                           {"head_count", config_.head_count},
                           {"feed_forward_dim", config_.feed_forward_dim},
                           {"max_positions", config_.max_positions}};
  obj["limits"] = {{"max_sequence_length", limits_.max_sequence_length},
                   {"max_query_length", limits_.max_query_length},
                   {"max_sentences", limits_.max_sentences},
                   {"max_sentence_length", limits_.max_sentence_length}};
  obj["vocabulary"] = tokenizer_.terms();
  obj["metadata"] = metadata;
  json params = json::object();
  for (const auto& p : params_.params()) params[p->name] = param_to_json(*p);
  obj["params"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << obj.dump();
}

PipelineModel PipelineModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  json obj;
  in >> obj;
  if (obj.value("format", "") != "rcpipe-checkpoint-v1")
    throw std::runtime_error("unrecognized checkpoint format in " + path);

  EncoderConfig config;
  const auto& ec = obj.at("encoder_config");
  config.vocabulary_size = ec.at("vocabulary_size").get<int>();
  config.embedding_dim = ec.at("embedding_dim").get<int>();
  config.layer_count = ec.at("layer_count").get<int>();
  config.head_count = ec.at("head_count").get<int>();
  config.feed_forward_dim = ec.at("feed_forward_dim").get<int>();
  config.max_positions = ec.at("max_positions").get<int>();

  Tokenizer tok = Tokenizer::from_terms(obj.at("vocabulary").get<std::vector<std::string>>());
  PipelineModel model(std::move(tok), config);
  if (obj.contains("limits")) {
    const auto& lm = obj.at("limits");
    model.limits_.max_sequence_length = lm.at("max_sequence_length").get<int>();
    model.limits_.max_query_length = lm.at("max_query_length").get<int>();
    model.limits_.max_sentences = lm.at("max_sentences").get<int>();
    model.limits_.max_sentence_length = lm.at("max_sentence_length").get<int>();
  }
  if (obj.contains("metadata"))
    model.metadata = obj.at("metadata").get<std::map<std::string, std::string>>();

  const auto& params = obj.at("params");
  for (auto& p : model.params_.params()) {
    const auto& src = params.at(p->name);
    int rows = src.at("rows").get<int>();
    int cols = src.at("cols").get<int>();
    auto data = src.at("data").get<std::vector<double>>();
    if (rows != p->value.rows() || cols != p->value.cols())
      throw std::runtime_error("checkpoint shape mismatch for " + p->name);
    p->value = Eigen::Map<const Mat>(data.data(), rows, cols);
  }
  return model;
}

}  // namespace rcpipe
