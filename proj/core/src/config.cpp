#include "rcpipe/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rcpipe {

std::map<std::string, std::string> TrainingConfig::to_map() const {
  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  return {
      {"lambda_r", fmt(lambda_r)},
      {"lambda_na", fmt(lambda_na)},
      {"tau", fmt(tau)},
      {"batch_size", std::to_string(batch_size)},
      {"pretrain_epochs", std::to_string(pretrain_epochs)},
      {"e2e_epochs", std::to_string(e2e_epochs)},
      {"learning_rate", fmt(learning_rate)},
      {"weight_decay", fmt(weight_decay)},
      {"n_r", std::to_string(n_r)},
      {"k", std::to_string(k)},
      {"alpha", fmt(alpha)},
      {"beta", fmt(beta)},
      {"seed", std::to_string(seed)},
      {"freeze_answerer_in_e2e", freeze_answerer_in_e2e ? "true" : "false"},
      {"noisy_answer_pretrain", noisy_answer_pretrain ? "true" : "false"},
  };
}

void FileConfig::apply_override(const std::string& key, const std::string& value) {
  auto as_double = [&] { return std::stod(value); };
  auto as_int = [&] { return std::stoi(value); };
  if (key == "lambda_r") training.lambda_r = as_double();
  else if (key == "lambda_na") training.lambda_na = as_double();
  else if (key == "tau") training.tau = as_double();
  else if (key == "batch_size") training.batch_size = as_int();
  else if (key == "pretrain_epochs") training.pretrain_epochs = as_int();
  else if (key == "e2e_epochs") training.e2e_epochs = as_int();
  else if (key == "learning_rate") training.learning_rate = as_double();
  else if (key == "weight_decay") training.weight_decay = as_double();
  else if (key == "n_r") training.n_r = as_int();
  else if (key == "k") training.k = as_int();
  else if (key == "alpha") training.alpha = as_double();
  else if (key == "beta") training.beta = as_double();
  else if (key == "seed") training.seed = std::stoull(value);
  else if (key == "freeze_answerer_in_e2e") training.freeze_answerer_in_e2e = (value == "true" || value == "1");
  else if (key == "noisy_answer_pretrain") training.noisy_answer_pretrain = (value == "true" || value == "1");
  else if (key == "vocabulary_size") encoder.vocabulary_size = as_int();
  else if (key == "embedding_dim") encoder.embedding_dim = as_int();
  else if (key == "layer_count") encoder.layer_count = as_int();
  else if (key == "head_count") encoder.head_count = as_int();
  else if (key == "feed_forward_dim") encoder.feed_forward_dim = as_int();
  else if (key == "max_positions") encoder.max_positions = as_int();
  else throw std::invalid_argument("unknown config key: " + key);
}

FileConfig FileConfig::parse_text(const std::string& txt) {
  FileConfig config;
  std::istringstream in(txt);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank) throw std::invalid_argument("bad config line: " + line);
      continue;
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    config.apply_override(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

FileConfig FileConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json obj;
  obj["command"] = command;
  obj["config"] = config;
  obj["inputs"] = inputs;
  obj["outputs"] = outputs;
  obj["code_version"] = code_version();
  obj["wall_clock_seconds"] = wall_clock_seconds;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path);
  out << obj.dump(2) << '\n';
}

std::string code_version() { return "rcpipe 0.1.0"; }

}  // namespace rcpipe
