// Command-line driver for the reading-comprehension pipeline: synthetic data
// generation, dataset construction, training, inference, evaluation, sweeps.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rcpipe/config.hpp"
#include "rcpipe/corpus.hpp"
#include "rcpipe/dataset_builder.hpp"
#include "rcpipe/evaluator.hpp"
#include "rcpipe/inference.hpp"
#include "rcpipe/model.hpp"
#include "rcpipe/synthetic.hpp"
#include "rcpipe/trainer.hpp"

namespace {

using namespace rcpipe;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value, applied after the file
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key = value config file");
  cmd->add_option("--set", opts.overrides,
                  "config override key=value (flag beats file beats default)");
}

FileConfig resolve_config(const CommonOpts& opts) {
  FileConfig fc;
  if (!opts.config_path.empty()) fc = FileConfig::parse_file(opts.config_path);
  for (const auto& kv : opts.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--set expects key=value, got: " + kv);
    fc.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return fc;
}

std::map<std::string, std::string> config_map(const FileConfig& fc) {
  auto m = fc.training.to_map();
  m["embedding_dim"] = std::to_string(fc.encoder.embedding_dim);
  m["layer_count"] = std::to_string(fc.encoder.layer_count);
  m["head_count"] = std::to_string(fc.encoder.head_count);
  m["feed_forward_dim"] = std::to_string(fc.encoder.feed_forward_dim);
  m["max_positions"] = std::to_string(fc.encoder.max_positions);
  return m;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<Example> load_dataset(const std::string& path) {
  if (path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0)
    return load_jsonl(path);
  return load_hotpot_file(path);
}

void print_report(const TrainReport& report, const std::string& stage) {
  for (const auto& e : report.epochs) {
    std::cout << stage << " epoch " << e.epoch << "  steps " << e.steps << "  mean loss "
              << e.mean_loss << "\n";
  }
}

void cmd_gen_synthetic(const CommonOpts& common, const SyntheticSpec& spec,
                       const std::string& output, const std::string& hotpot_output) {
  Stopwatch clock;
  auto examples = generate_synthetic(spec);
  save_jsonl(examples, output);
  if (!hotpot_output.empty()) save_hotpot_format(examples, hotpot_output);

  int cna = 0;
  for (const auto& e : examples)
    if (e.gold_answer.label == AnswerLabel::Cna) ++cna;
  std::cout << "wrote " << examples.size() << " examples (" << cna << " unanswerable) to "
            << output << "\n";

  RunManifest manifest;
  manifest.command = "gen-synthetic";
  manifest.config = config_map(resolve_config(common));
  manifest.config["example_count"] = std::to_string(spec.example_count);
  manifest.config["cna_fraction"] = std::to_string(spec.cna_fraction);
  manifest.config["synthetic_seed"] = std::to_string(spec.seed);
  manifest.outputs["dataset"] = output;
  if (!hotpot_output.empty()) manifest.outputs["hotpot_format"] = hotpot_output;
  manifest.wall_clock_seconds = clock.seconds();
  manifest.write(output + ".manifest.json");
}

void cmd_build_dataset(const CommonOpts& common, const std::string& input,
                       const std::string& retrieval, const std::string& output,
                       std::string stats_path, bool augment) {
  Stopwatch clock;
  FileConfig fc = resolve_config(common);
  auto gold = load_dataset(input);
  // Without a retrieval file the annotated contexts double as the retrieved
  // passages (distractor setting): every example lands in class 0.
  auto retrieved = retrieval.empty() ? gold : load_dataset(retrieval);
  auto result = build_fullwiki_cna(gold, retrieved);
  if (augment) result.examples = augment_with_cna(result.examples, fc.training.seed);
  save_jsonl(result.examples, output);

  if (stats_path.empty()) stats_path = output + ".stats.json";
  {
    std::ofstream out(stats_path);
    if (!out) throw std::runtime_error("cannot write stats " + stats_path);
    out << result.stats.to_json() << "\n";
  }
  std::cout << result.stats.to_json() << "\n";
  std::cout << "wrote " << result.examples.size() << " examples to " << output << "\n";

  RunManifest manifest;
  manifest.command = "build-dataset";
  manifest.config = config_map(fc);
  manifest.config["augment_cna"] = augment ? "true" : "false";
  manifest.inputs["gold"] = input;
  if (!retrieval.empty()) manifest.inputs["retrieval"] = retrieval;
  manifest.outputs["dataset"] = output;
  manifest.outputs["stats"] = stats_path;
  manifest.wall_clock_seconds = clock.seconds();
  manifest.write(output + ".manifest.json");
}

void cmd_pretrain(const CommonOpts& common, const std::string& data, const std::string& output,
                  const std::string& initial_model, const std::string& stage, bool augment) {
  Stopwatch clock;
  FileConfig fc = resolve_config(common);
  auto examples = load_dataset(data);

  auto model = [&] {
    if (!initial_model.empty()) return PipelineModel::load(initial_model);
    PipelineModel m(Tokenizer::build(examples), fc.encoder);
    m.init_weights(fc.training.seed);
    return m;
  }();

  auto augmented = augment ? augment_with_cna(examples, fc.training.seed) : examples;
  if (stage == "all" || stage == "extractor")
    print_report(pretrain_extractor(model, augmented, fc.training), "extractor");
  if (stage == "all" || stage == "answerer")
    print_report(pretrain_answerer(model, augmented, fc.training), "answerer");
  if (stage == "all" || stage == "ranker")
    print_report(train_ranker(model, augmented, fc.training), "ranker");

  model.metadata = config_map(fc);
  model.metadata["phase"] = "pretrain:" + stage;
  model.save(output);
  std::cout << "saved checkpoint " << output << "\n";

  RunManifest manifest;
  manifest.command = "pretrain";
  manifest.config = config_map(fc);
  manifest.config["stage"] = stage;
  manifest.config["augment_cna"] = augment ? "true" : "false";
  manifest.inputs["dataset"] = data;
  if (!initial_model.empty()) manifest.inputs["model"] = initial_model;
  manifest.outputs["model"] = output;
  manifest.wall_clock_seconds = clock.seconds();
  manifest.write(output + ".manifest.json");
}

void cmd_train_e2e(const CommonOpts& common, const std::string& data,
                   const std::string& input_model, const std::string& output, bool augment,
                   const std::string& step_log) {
  Stopwatch clock;
  FileConfig fc = resolve_config(common);
  auto examples = load_dataset(data);
  auto model = PipelineModel::load(input_model);

  auto train_set = augment ? augment_with_cna(examples, fc.training.seed) : examples;
  auto report = train_e2e(model, train_set, fc.training);
  print_report(report, "e2e");

  std::int64_t replaced = 0;
  for (const auto& r : report.step_log)
    if (!r.covers_gold) ++replaced;
  std::cout << "steps " << report.step_log.size() << "  targets replaced with CNA " << replaced
            << "\n";

  if (!step_log.empty()) {
    std::ofstream out(step_log);
    if (!out) throw std::runtime_error("cannot write step log " + step_log);
    for (const auto& r : report.step_log) {
      nlohmann::json obj{{"id", r.example_id},
                         {"effective_label", to_string(r.effective_label)},
                         {"covers_gold", r.covers_gold},
                         {"loss", r.loss_total},
                         {"loss_answer", r.loss_answer},
                         {"loss_rationale", r.loss_rationale},
                         {"loss_no_answer", r.loss_no_answer},
                         {"rationale", std::vector<int>(r.sampled_rationale.begin(),
                                                        r.sampled_rationale.end())}};
      out << obj.dump() << "\n";
    }
  }

  model.metadata = config_map(fc);
  model.metadata["phase"] = "e2e";
  model.save(output);
  std::cout << "saved checkpoint " << output << "\n";

  RunManifest manifest;
  manifest.command = "train-e2e";
  manifest.config = config_map(fc);
  manifest.config["augment_cna"] = augment ? "true" : "false";
  manifest.inputs["dataset"] = data;
  manifest.inputs["model"] = input_model;
  manifest.outputs["model"] = output;
  if (!step_log.empty()) manifest.outputs["step_log"] = step_log;
  manifest.wall_clock_seconds = clock.seconds();
  manifest.write(output + ".manifest.json");
}

InferenceOptions options_from(const TrainingConfig& t, bool no_beta_gate) {
  InferenceOptions opts;
  opts.alpha = t.alpha;
  opts.beta = t.beta;
  opts.k = t.k;
  opts.n_r = t.n_r;
  opts.apply_beta_gate = !no_beta_gate;
  return opts;
}

void cmd_infer(const CommonOpts& common, const std::string& data,
               const std::string& model_path, const std::string& output, bool no_beta_gate) {
  Stopwatch clock;
  FileConfig fc = resolve_config(common);
  auto examples = load_dataset(data);
  auto model = PipelineModel::load(model_path);

  auto preds = infer_dataset(model, examples, options_from(fc.training, no_beta_gate));
  save_predictions(preds, examples, output);
  std::cout << "wrote predictions for " << preds.size() << " examples to " << output << "\n";

  RunManifest manifest;
  manifest.command = "infer";
  manifest.config = config_map(fc);
  manifest.config["apply_beta_gate"] = no_beta_gate ? "false" : "true";
  manifest.inputs["dataset"] = data;
  manifest.inputs["model"] = model_path;
  manifest.outputs["predictions"] = output;
  manifest.wall_clock_seconds = clock.seconds();
  manifest.write(output + ".manifest.json");
}

void cmd_evaluate(const CommonOpts& common, const std::string& data,
                  const std::string& predictions, const std::string& output) {
  Stopwatch clock;
  auto examples = load_dataset(data);
  auto preds = load_predictions(predictions, examples);
  auto report = evaluate(examples, preds);
  std::cout << report.to_json() << "\n";
  std::cout << report.format_tables();
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw std::runtime_error("cannot write report " + output);
    out << report.to_json() << "\n";

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.config = config_map(resolve_config(common));
    manifest.inputs["dataset"] = data;
    manifest.inputs["predictions"] = predictions;
    manifest.outputs["report"] = output;
    manifest.wall_clock_seconds = clock.seconds();
    manifest.write(output + ".manifest.json");
  }
}

void cmd_sweep(const CommonOpts& common, const std::string& data, const std::string& model_path,
               const std::string& param, const std::string& range, const std::string& output) {
  Stopwatch clock;
  FileConfig fc = resolve_config(common);
  if (param != "alpha" && param != "beta")
    throw CLI::ValidationError("--param must be alpha or beta");

  double lo = 0.0, hi = 0.9, step = 0.1;
  {
    std::istringstream in(range);
    char c1 = 0, c2 = 0;
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
      throw CLI::ValidationError("--range expects lo:hi:step, got: " + range);
  }

  auto examples = load_dataset(data);
  auto model = PipelineModel::load(model_path);

  std::ofstream out(output);
  if (!out) throw std::runtime_error("cannot write sweep output " + output);
  std::cout << param << "  answer-EM  answer-F1  sf-F1  cna-F1\n";
  double best_value = lo, best_f1 = -1.0;
  for (double v = lo; v <= hi + 1e-9; v += step) {
    auto opts = options_from(fc.training, false);
    (param == "alpha" ? opts.alpha : opts.beta) = v;
    auto preds = infer_dataset(model, examples, opts);
    auto report = evaluate(examples, preds);
    nlohmann::json obj{{param, v},
                       {"answer_em", report.answer.em},
                       {"answer_f1", report.answer.f1},
                       {"sf_f1", report.sf.f1},
                       {"cna_f1", report.cna.f1}};
    out << obj.dump() << "\n";
    std::cout << v << "  " << report.answer.em << "  " << report.answer.f1 << "  "
              << report.sf.f1 << "  " << report.cna.f1 << "\n";
    if (report.answer.f1 > best_f1) {
      best_f1 = report.answer.f1;
      best_value = v;
    }
  }
  std::cout << "best " << param << " " << best_value << " (answer F1 " << best_f1 << ")\n";

  RunManifest manifest;
  manifest.command = "sweep";
  manifest.config = config_map(fc);
  manifest.config["param"] = param;
  manifest.config["range"] = range;
  manifest.inputs["dataset"] = data;
  manifest.inputs["model"] = model_path;
  manifest.outputs["sweep"] = output;
  manifest.wall_clock_seconds = clock.seconds();
  manifest.write(output + ".manifest.json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interpretable two-stage reading-comprehension pipeline"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* gen = app.add_subcommand("gen-synthetic", "generate a two-hop synthetic corpus");
  SyntheticSpec spec;
  std::string gen_output, gen_hotpot;
  gen->add_option("--output", gen_output, "output dataset (jsonl)")->required();
  gen->add_option("--hotpot-output", gen_hotpot, "also write the record-schema JSON");
  gen->add_option("--count", spec.example_count, "number of examples");
  gen->add_option("--entities", spec.entity_vocab_size, "entity vocabulary size");
  gen->add_option("--relations", spec.relations, "first-hop relation verbs in use");
  gen->add_option("--paragraphs", spec.paragraphs_per_passage, "paragraphs per passage");
  gen->add_option("--sentences-per-paragraph", spec.sentences_per_paragraph,
                  "sentences per paragraph");
  gen->add_option("--cna-fraction", spec.cna_fraction, "fraction of unanswerable examples");
  gen->add_option("--seed", spec.seed, "generator seed");
  add_common(gen, common);
  gen->callback([&] { cmd_gen_synthetic(common, spec, gen_output, gen_hotpot); });

  auto* build = app.add_subcommand("build-dataset", "construct the training dataset");
  std::string build_input, build_retrieval, build_output, build_stats;
  bool build_augment = false;
  build->add_option("--input", build_input, "annotated examples (record JSON or jsonl)")
      ->required();
  build->add_option("--retrieval", build_retrieval, "retrieved passages (record JSON)");
  build->add_option("--output", build_output, "output dataset (jsonl)")->required();
  build->add_option("--stats", build_stats, "absent-gold-SF statistics JSON");
  build->add_flag("--augment-cna", build_augment, "append negative-sampled CNA examples");
  add_common(build, common);
  build->callback([&] {
    cmd_build_dataset(common, build_input, build_retrieval, build_output, build_stats,
                      build_augment);
  });

  auto* pre = app.add_subcommand("pretrain", "pre-train the pipeline modules");
  std::string pre_data, pre_output, pre_model, pre_stage = "all";
  bool pre_no_augment = false;
  pre->add_option("--data", pre_data, "training dataset (jsonl)")->required();
  pre->add_option("--output", pre_output, "checkpoint to write")->required();
  pre->add_option("--model", pre_model, "checkpoint to continue from");
  pre->add_option("--stage", pre_stage, "all|extractor|answerer|ranker")
      ->check(CLI::IsMember({"all", "extractor", "answerer", "ranker"}));
  pre->add_flag("--no-augment-cna", pre_no_augment,
                "skip negative-sampled CNA examples for the answer module");
  add_common(pre, common);
  pre->callback(
      [&] { cmd_pretrain(common, pre_data, pre_output, pre_model, pre_stage, !pre_no_augment); });

  auto* e2e = app.add_subcommand("train-e2e", "end-to-end training");
  std::string e2e_data, e2e_model, e2e_output, e2e_log;
  bool e2e_no_augment = false;
  e2e->add_option("--data", e2e_data, "training dataset (jsonl)")->required();
  e2e->add_option("--model", e2e_model, "checkpoint to start from")->required();
  e2e->add_option("--output", e2e_output, "checkpoint to write")->required();
  e2e->add_option("--step-log", e2e_log, "per-step record jsonl");
  e2e->add_flag("--no-augment-cna", e2e_no_augment,
                "skip negative-sampled CNA examples");
  add_common(e2e, common);
  e2e->callback(
      [&] { cmd_train_e2e(common, e2e_data, e2e_model, e2e_output, !e2e_no_augment, e2e_log); });

  auto* inf = app.add_subcommand("infer", "run inference over a dataset");
  std::string inf_data, inf_model, inf_output;
  bool inf_no_gate = false;
  inf->add_option("--data", inf_data, "dataset (jsonl)")->required();
  inf->add_option("--model", inf_model, "checkpoint")->required();
  inf->add_option("--output", inf_output, "predictions JSON")->required();
  inf->add_flag("--no-beta-gate", inf_no_gate,
                "distractor setting: never emit the no-answer label");
  add_common(inf, common);
  inf->callback([&] { cmd_infer(common, inf_data, inf_model, inf_output, inf_no_gate); });

  auto* ev = app.add_subcommand("evaluate", "score predictions against a dataset");
  std::string ev_data, ev_preds, ev_output;
  ev->add_option("--data,--gold", ev_data, "dataset (jsonl)")->required();
  ev->add_option("--predictions,--pred", ev_preds, "predictions JSON")->required();
  ev->add_option("--output", ev_output, "metric report JSON");
  add_common(ev, common);
  ev->callback([&] { cmd_evaluate(common, ev_data, ev_preds, ev_output); });

  auto* sw = app.add_subcommand("sweep", "sweep the alpha or beta threshold");
  std::string sw_data, sw_model, sw_param = "alpha", sw_range = "0:0.9:0.1", sw_output;
  sw->add_option("--data", sw_data, "dataset (jsonl)")->required();
  sw->add_option("--model", sw_model, "checkpoint")->required();
  sw->add_option("--param", sw_param, "alpha|beta");
  sw->add_option("--range", sw_range, "lo:hi:step");
  sw->add_option("--output", sw_output, "per-value metrics jsonl")->required();
  add_common(sw, common);
  sw->callback([&] { cmd_sweep(common, sw_data, sw_model, sw_param, sw_range, sw_output); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
