#include "morphoqg/corpus_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "morphoqg/errors.hpp"

namespace morphoqg {

using nlohmann::json;

namespace {

std::vector<std::string> string_array(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_array())
    throw DataError(std::string("missing array field '") + field + "'");
  std::vector<std::string> out;
  for (const auto& v : j.at(field)) {
    if (!v.is_string()) throw DataError(std::string("non-string entry in '") + field + "'");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::size_t index_field(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_number_integer() || j.at(field).get<long long>() < 0)
    throw DataError(std::string("missing or negative integer field '") + field + "'");
  return j.at(field).get<std::size_t>();
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  return out;
}

}  // namespace

RawExample raw_example_from_json(const json& j) {
  const auto tokens = string_array(j, "tokens");
  const auto pos = string_array(j, "pos");
  const auto ner = string_array(j, "ner");
  // The question is optional so that unlabeled sources can be generated from.
  const bool has_question = j.contains("question");
  const auto question = has_question ? string_array(j, "question") : std::vector<std::string>{};
  const auto question_pos =
      has_question ? string_array(j, "question_pos") : std::vector<std::string>{};
  if (tokens.size() != pos.size() || tokens.size() != ner.size())
    throw DataError("tokens/pos/ner lengths differ");
  if (question.size() != question_pos.size()) throw DataError("question/question_pos lengths differ");
  const std::size_t start = index_field(j, "answer_start");
  const std::size_t end = index_field(j, "answer_end");
  if (start > end || end >= tokens.size()) throw DataError("answer span out of range");

  RawExample ex;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    AnswerBio bio = AnswerBio::O;
    if (i == start) bio = AnswerBio::B;
    else if (i > start && i <= end) bio = AnswerBio::I;
    ex.source.push_back({tokens[i], pos[i], ner[i], bio});
  }
  for (std::size_t i = 0; i < question.size(); ++i)
    ex.question.push_back({question[i], question_pos[i], "O", AnswerBio::O});
  return ex;
}

json raw_example_to_json(const RawExample& ex) {
  json j;
  std::vector<std::string> tokens, pos, ner, q, qpos;
  std::size_t start = 0, end = 0;
  for (std::size_t i = 0; i < ex.source.size(); ++i) {
    const TaggedToken& t = ex.source[i];
    tokens.push_back(t.word);
    pos.push_back(t.pos);
    ner.push_back(t.ner);
    if (t.answer_bio == AnswerBio::B) start = end = i;
    if (t.answer_bio == AnswerBio::I) end = i;
  }
  for (const TaggedToken& t : ex.question) {
    q.push_back(t.word);
    qpos.push_back(t.pos);
  }
  j["tokens"] = tokens;
  j["pos"] = pos;
  j["ner"] = ner;
  j["answer_start"] = start;
  j["answer_end"] = end;
  j["question"] = q;
  j["question_pos"] = qpos;
  return j;
}

std::vector<RawExample> read_corpus(std::istream& in) {
  std::vector<RawExample> out;
  for_each_line(in, [&](const json& j) { out.push_back(raw_example_from_json(j)); });
  return out;
}

std::vector<RawExample> read_corpus(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_corpus(in);
}

void write_corpus(const std::filesystem::path& path, const std::vector<RawExample>& corpus) {
  auto out = open_out(path);
  for (const RawExample& ex : corpus) out << raw_example_to_json(ex).dump() << '\n';
}

json encoded_to_json(const EncodedExample& ex, const Vocab& quest_vocab) {
  json j;
  j["source_roots"] = ex.source_roots;
  std::vector<std::string> pos, ner;
  std::string bio;
  for (const TokenFeatures& f : ex.source_features) {
    pos.push_back(f.pos);
    ner.push_back(f.ner);
    bio += bio_char(f.answer_bio);
  }
  j["pos"] = pos;
  j["ner"] = ner;
  j["bio"] = bio;
  j["answer_span"] = {ex.answer_span.first, ex.answer_span.last};
  json actions = json::array();
  for (const TargetAction& a : ex.target_actions) {
    switch (a.kind) {
      case TargetAction::Kind::Copy:
        actions.push_back({{"type", "copy"}, {"index", a.index}});
        break;
      case TargetAction::Kind::Quest:
        actions.push_back({{"type", "quest"}, {"id", a.index}, {"word", quest_vocab.token(a.index)}});
        break;
      case TargetAction::Kind::Trans:
        actions.push_back({{"type", "trans"},
                           {"id", a.index},
                           {"tag", std::string(tag_string(transform_from_id(a.index)))}});
        break;
    }
  }
  j["actions"] = actions;
  j["question"] = ex.reference_question;
  return j;
}

EncodedExample encoded_from_json(const json& j) {
  EncodedExample ex;
  ex.source_roots = string_array(j, "source_roots");
  const auto pos = string_array(j, "pos");
  const auto ner = string_array(j, "ner");
  const std::string bio = j.value("bio", std::string());
  if (pos.size() != ex.source_roots.size() || ner.size() != ex.source_roots.size() ||
      bio.size() != ex.source_roots.size())
    throw DataError("feature lengths differ from source length");
  for (std::size_t i = 0; i < pos.size(); ++i)
    ex.source_features.push_back({pos[i], ner[i], bio_from_char(bio[i])});
  const auto& span = j.at("answer_span");
  ex.answer_span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
  if (ex.answer_span.first > ex.answer_span.last || ex.answer_span.last >= ex.source_roots.size())
    throw DataError("answer span out of range");
  for (const auto& a : j.at("actions")) {
    const std::string type = a.at("type").get<std::string>();
    if (type == "copy") ex.target_actions.push_back(TargetAction::copy(a.at("index").get<std::size_t>()));
    else if (type == "quest") ex.target_actions.push_back(TargetAction::quest(a.at("id").get<std::size_t>()));
    else if (type == "trans")
      ex.target_actions.push_back({TargetAction::Kind::Trans, a.at("id").get<std::size_t>()});
    else throw DataError("unknown action type '" + type + "'");
  }
  ex.reference_question = j.value("question", std::string());
  return ex;
}

std::vector<EncodedExample> read_encoded(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<EncodedExample> out;
  for_each_line(in, [&](const json& j) { out.push_back(encoded_from_json(j)); });
  return out;
}

void write_encoded(std::ostream& out, const std::vector<EncodedExample>& examples,
                   const Vocab& quest_vocab) {
  for (const EncodedExample& ex : examples) out << encoded_to_json(ex, quest_vocab).dump() << '\n';
}

Vocab read_vocab(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocab::from_tokens(std::move(tokens));
}

void write_vocab(const std::filesystem::path& path, const Vocab& vocab) {
  auto out = open_out(path);
  for (const std::string& t : vocab.tokens()) out << t << '\n';
}

Vocabs read_vocabs(const std::filesystem::path& dir) {
  return {read_vocab(dir / "encoder.txt"), read_vocab(dir / "quest.txt"), read_vocab(dir / "pos.txt"),
          read_vocab(dir / "ner.txt")};
}

void write_vocabs(const std::filesystem::path& dir, const Vocabs& vocabs) {
  std::filesystem::create_directories(dir);
  write_vocab(dir / "encoder.txt", vocabs.encoder);
  write_vocab(dir / "quest.txt", vocabs.quest);
  write_vocab(dir / "pos.txt", vocabs.pos);
  write_vocab(dir / "ner.txt", vocabs.ner);
}

std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace morphoqg
