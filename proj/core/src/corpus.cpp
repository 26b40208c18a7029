#include "rcpipe/corpus.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rcpipe/text.hpp"

namespace rcpipe {

using nlohmann::json;

std::string to_string(AnswerLabel label) {
  switch (label) {
    case AnswerLabel::Yes: return "yes";
    case AnswerLabel::No: return "no";
    case AnswerLabel::Span: return "span";
    case AnswerLabel::Cna: return "cna";
  }
  return "span";
}

AnswerLabel answer_label_from_string(const std::string& s) {
  if (s == "yes") return AnswerLabel::Yes;
  if (s == "no") return AnswerLabel::No;
  if (s == "span") return AnswerLabel::Span;
  if (s == "cna") return AnswerLabel::Cna;
  throw IngestionError("unknown answer label: " + s);
}

int Passage::sentence_count() const {
  int n = 0;
  for (const auto& p : paragraphs) n += static_cast<int>(p.sentences.size());
  return n;
}

std::vector<Sentence> Passage::sentences() const {
  std::vector<Sentence> out;
  out.reserve(sentence_count());
  int id = 0;
  for (const auto& p : paragraphs) {
    for (const auto& s : p.sentences) {
      out.push_back(Sentence{id++, p.title, s});
    }
  }
  return out;
}

std::pair<int, int> Passage::locate(int sentence_id) const {
  int base = 0;
  for (int pi = 0; pi < static_cast<int>(paragraphs.size()); ++pi) {
    int n = static_cast<int>(paragraphs[pi].sentences.size());
    if (sentence_id < base + n) return {pi, sentence_id - base};
    base += n;
  }
  throw std::out_of_range("sentence id out of range: " + std::to_string(sentence_id));
}

std::optional<int> Passage::global_id(const std::string& title, int sent_idx) const {
  int base = 0;
  for (const auto& p : paragraphs) {
    if (p.title == title) {
      if (sent_idx >= 0 && sent_idx < static_cast<int>(p.sentences.size()))
        return base + sent_idx;
      return std::nullopt;
    }
    base += static_cast<int>(p.sentences.size());
  }
  return std::nullopt;
}

bool Example::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

namespace {

Passage passage_from_context(const json& context) {
  Passage passage;
  for (const auto& entry : context) {
    Paragraph para;
    para.title = entry.at(0).get<std::string>();
    for (const auto& s : entry.at(1)) {
      std::string norm = text::normalize_whitespace(s.get<std::string>());
      if (!norm.empty()) para.sentences.push_back(norm);
    }
    passage.paragraphs.push_back(std::move(para));
  }
  return passage;
}

}  // namespace

std::vector<Example> load_hotpot_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::parse_error& e) {
    throw IngestionError("malformed JSON in " + path + ": " + e.what());
  }
  if (!root.is_array()) throw IngestionError("expected a JSON array in " + path);

  std::vector<Example> out;
  out.reserve(root.size());
  for (const auto& rec : root) {
    Example ex;
    ex.id = rec.value("_id", rec.value("id", ""));
    ex.query = text::normalize_whitespace(rec.at("question").get<std::string>());
    ex.passage = passage_from_context(rec.at("context"));

    std::string answer = text::normalize_whitespace(rec.value("answer", ""));
    std::string lowered = text::lowercase(answer);
    if (lowered == "yes") {
      ex.gold_answer.label = AnswerLabel::Yes;
    } else if (lowered == "no") {
      ex.gold_answer.label = AnswerLabel::No;
    } else if (lowered == "noanswer") {
      ex.gold_answer.label = AnswerLabel::Cna;
    } else {
      ex.gold_answer.label = AnswerLabel::Span;
      ex.gold_answer.span_text = answer;
    }

    std::set<std::string> titles;
    if (rec.contains("supporting_facts")) {
      for (const auto& sf : rec.at("supporting_facts")) {
        std::string title = sf.at(0).get<std::string>();
        int idx = sf.at(1).get<int>();
        titles.insert(title);
        auto gid = ex.passage.global_id(title, idx);
        if (gid) {
          ex.gold_rationale.insert(*gid);
        } else if (!ex.has_flag("unresolvable_sf")) {
          ex.flags.push_back("unresolvable_sf");
        }
      }
    }
    ex.gold_paragraph_titles.assign(titles.begin(), titles.end());

    if (ex.gold_answer.label == AnswerLabel::Span) {
      align_answer_span(ex);
      if (!ex.has_flag("span_unalignable") && ex.gold_answer.span_sentence_id &&
          !ex.gold_rationale.count(*ex.gold_answer.span_sentence_id)) {
        // The span was found, but not inside any gold-rationale sentence.
        if (!ex.has_flag("span_outside_rationale")) ex.flags.push_back("span_outside_rationale");
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

AnswerTarget align_answer_span(Example& example) {
  auto& target = example.gold_answer;
  if (target.label != AnswerLabel::Span || !target.span_text) return target;
  const std::string needle = text::normalize_whitespace(*target.span_text);
  auto sentences = example.passage.sentences();

  auto try_sentence = [&](const Sentence& s) -> bool {
    auto pos = s.text.find(needle);
    if (pos == std::string::npos) return false;
    target.span_char_range = {static_cast<int>(pos), static_cast<int>(pos + needle.size())};
    target.span_sentence_id = s.id;
    return true;
  };

  for (const auto& s : sentences) {
    if (example.gold_rationale.count(s.id) && try_sentence(s)) return target;
  }
  for (const auto& s : sentences) {
    if (try_sentence(s)) return target;
  }
  if (!example.has_flag("span_unalignable")) example.flags.push_back("span_unalignable");
  return target;
}

namespace {

json example_to_json_obj(const Example& e) {
  json paragraphs = json::array();
  for (const auto& p : e.passage.paragraphs) {
    paragraphs.push_back({{"title", p.title}, {"sentences", p.sentences}});
  }
  json answer;
  answer["label"] = to_string(e.gold_answer.label);
  if (e.gold_answer.span_text) answer["text"] = *e.gold_answer.span_text;
  if (e.gold_answer.span_char_range) {
    answer["char_start"] = e.gold_answer.span_char_range->first;
    answer["char_end"] = e.gold_answer.span_char_range->second;
  }
  if (e.gold_answer.span_sentence_id) answer["sentence_id"] = *e.gold_answer.span_sentence_id;

  json obj;
  obj["id"] = e.id;
  obj["query"] = e.query;
  obj["paragraphs"] = paragraphs;
  obj["answer"] = answer;
  obj["gold_rationale"] = e.gold_rationale;
  obj["gold_titles"] = e.gold_paragraph_titles;
  if (!e.flags.empty()) obj["flags"] = e.flags;
  if (e.absent_gold_sfs != 0) obj["absent_gold_sfs"] = e.absent_gold_sfs;
  return obj;
}

Example example_from_json_obj(const json& obj) {
  Example e;
  e.id = obj.at("id").get<std::string>();
  e.query = obj.at("query").get<std::string>();
  for (const auto& p : obj.at("paragraphs")) {
    Paragraph para;
    para.title = p.at("title").get<std::string>();
    para.sentences = p.at("sentences").get<std::vector<std::string>>();
    e.passage.paragraphs.push_back(std::move(para));
  }
  const auto& answer = obj.at("answer");
  e.gold_answer.label = answer_label_from_string(answer.at("label").get<std::string>());
  if (answer.contains("text")) e.gold_answer.span_text = answer.at("text").get<std::string>();
  if (answer.contains("char_start")) {
    e.gold_answer.span_char_range = {answer.at("char_start").get<int>(),
                                     answer.at("char_end").get<int>()};
  }
  if (answer.contains("sentence_id"))
    e.gold_answer.span_sentence_id = answer.at("sentence_id").get<int>();
  for (const auto& v : obj.at("gold_rationale")) e.gold_rationale.insert(v.get<int>());
  e.gold_paragraph_titles = obj.at("gold_titles").get<std::vector<std::string>>();
  if (obj.contains("flags")) e.flags = obj.at("flags").get<std::vector<std::string>>();
  e.absent_gold_sfs = obj.value("absent_gold_sfs", 0);
  return e;
}

}  // namespace

std::string example_to_json(const Example& e) { return example_to_json_obj(e).dump(); }

Example example_from_json(const std::string& line) {
  return example_from_json_obj(json::parse(line));
}

void save_jsonl(const std::vector<Example>& examples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path);
  for (const auto& e : examples) out << example_to_json(e) << '\n';
}

std::vector<Example> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path);
  std::vector<Example> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(example_from_json(line));
  }
  return out;
}

void save_hotpot_format(const std::vector<Example>& examples, const std::string& path) {
  json root = json::array();
  for (const auto& e : examples) {
    json context = json::array();
    for (const auto& p : e.passage.paragraphs) {
      context.push_back({p.title, p.sentences});
    }
    json sfs = json::array();
    auto sentences = e.passage.sentences();
    for (int id : e.gold_rationale) {
      auto [pi, si] = e.passage.locate(id);
      sfs.push_back({e.passage.paragraphs[pi].title, si});
    }
    std::string answer;
    switch (e.gold_answer.label) {
      case AnswerLabel::Yes: answer = "yes"; break;
      case AnswerLabel::No: answer = "no"; break;
      case AnswerLabel::Cna: answer = "noanswer"; break;
      case AnswerLabel::Span: answer = e.gold_answer.span_text.value_or(""); break;
    }
    root.push_back({{"_id", e.id},
                    {"question", e.query},
                    {"answer", answer},
                    {"context", context},
                    {"supporting_facts", sfs},
                    {"type", "bridge"},
                    {"level", "medium"}});
  }
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path);
  out << root.dump() << '\n';
}

}  // namespace rcpipe
