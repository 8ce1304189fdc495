#include "morphoqg/vocab_analysis.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>
#include <fstream>
#include <unordered_map>

#include "morphoqg/errors.hpp"

namespace morphoqg {

nlohmann::json InflectionReport::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (TransformationType t : kAllTransforms) per[std::string(tag_string(t))] = per_type[transform_id(t)];
  return {{"total", total},
          {"inflected_count", inflected_count},
          {"ratio", ratio()},
          {"per_type", per},
          {"skipped_pieces", skipped_pieces}};
}

InflectionReport count_inflected(std::span<const std::string> vocab, const Morphology& morph) {
  InflectionReport r;
  r.total = vocab.size();
  for (const std::string& w : vocab) {
    if (const auto a = morph.guess_inflection(w); a && a->transform) {
      ++r.inflected_count;
      ++r.per_type[transform_id(*a->transform)];
    }
  }
  return r;
}

InflectionReport analyze_external_vocab(const std::filesystem::path& path, const Morphology& morph,
                                        std::size_t top) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  std::vector<std::string> words;
  std::size_t skipped = 0, read = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (top > 0 && read >= top) break;
    ++read;
    if (line.starts_with("##")) {
      ++skipped;
      continue;
    }
    words.push_back(line);
  }
  InflectionReport r = count_inflected(words, morph);
  r.skipped_pieces = skipped;
  r.total = read;  // ratio is taken over the whole vocabulary, pieces included
  return r;
}

std::vector<std::string> frequency_ranked(std::span<const std::string> tokens, std::size_t top) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& t : tokens) ++counts[to_lower(t)];
  std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& [w, n] : sorted) {
    if (top > 0 && out.size() >= top) break;
    out.push_back(w);
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> read_squad_words(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!j.contains("data") || !j.at("data").is_array())
    throw DataError(path.string() + ": not a SQuAD file (no 'data' array)");
  std::vector<std::string> words;
  auto append = [&](const std::string& text) {
    auto toks = word_tokens(text);
    words.insert(words.end(), std::make_move_iterator(toks.begin()), std::make_move_iterator(toks.end()));
  };
  for (const auto& article : j.at("data"))
    for (const auto& para : article.value("paragraphs", nlohmann::json::array())) {
      append(para.value("context", ""));
      for (const auto& qa : para.value("qas", nlohmann::json::array())) append(qa.value("question", ""));
    }
  return words;
}

}  // namespace morphoqg
