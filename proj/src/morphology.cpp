#include "morphoqg/morphology.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "morphoqg/errors.hpp"

namespace morphoqg {

namespace {

constexpr std::array<std::string_view, kNumTransforms> kTags = {
    "##ing", "##vs", "##ed", "##edp", "##ns", "##jer", "##jest", "##ver", "##vest"};
constexpr std::array<std::string_view, kNumTransforms> kPosTags = {
    "VBG", "VBZ", "VBD", "VBN", "NNS", "JJR", "JJS", "RBR", "RBS"};

bool is_plain_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// 'y' after a consonant is a vowel; 'u' after 'q' is not.
bool is_vowel_at(std::string_view w, std::size_t i) {
  const char c = w[i];
  if (is_plain_vowel(c)) return !(c == 'u' && i > 0 && w[i - 1] == 'q');
  return c == 'y' && i > 0 && !is_plain_vowel(w[i - 1]);
}

bool is_consonant_at(std::string_view w, std::size_t i) { return !is_vowel_at(w, i); }

int syllable_count(std::string_view w) {
  int n = 0;
  bool prev = false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool v = is_vowel_at(w, i);
    if (v && !prev) ++n;
    prev = v;
  }
  return n;
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

bool is_sibilant_final(std::string_view w) {
  return ends_with(w, "s") || ends_with(w, "x") || ends_with(w, "z") || ends_with(w, "ch") ||
         ends_with(w, "sh");
}

bool consonant_y(std::string_view w) {
  return w.size() >= 2 && w.back() == 'y' && !is_plain_vowel(w[w.size() - 2]);
}

// Monosyllabic consonant-vowel-consonant roots whose final letter doubles.
bool generic_doubling(std::string_view w) {
  constexpr std::string_view finals = "bdgmnprt";
  const std::size_t n = w.size();
  return n >= 3 && syllable_count(w) == 1 && finals.find(w.back()) != std::string_view::npos &&
         is_consonant_at(w, n - 1) && is_vowel_at(w, n - 2) && is_consonant_at(w, n - 3);
}

std::string_view suffix_of(TransformationType t) {
  switch (t) {
    case TransformationType::Ing: return "ing";
    case TransformationType::Vs:
    case TransformationType::Ns: return "s";
    case TransformationType::Ed:
    case TransformationType::Edp: return "ed";
    case TransformationType::Jer:
    case TransformationType::Ver: return "er";
    case TransformationType::Jest:
    case TransformationType::Vest: return "est";
  }
  return "";
}

// Heuristic for a stripped stem X: is the root more likely X + "e"?
bool prefers_final_e(std::string_view x) {
  const std::size_t n = x.size();
  if (n < 2) return false;
  const char last = x[n - 1];
  const char prev = x[n - 2];
  const bool prev_prev_consonant = n >= 3 && is_consonant_at(x, n - 3);
  switch (last) {
    case 'e':
    case 'v':
    case 'u':
      return true;
    case 'c':
      return prev != 'c';
    case 'z':
      return prev != 'z';
    case 'g':
      if (prev == 'd' || prev == 'r' || prev == 'l') return true;
      if (prev == 'n') {
        if (n >= 3 && (x[n - 3] == 'e' || x[n - 3] == 'u')) return true;
        return n >= 4 && x[n - 3] == 'a' && (x[n - 4] == 'h' || x[n - 4] == 'r');
      }
      return prev == 'a' && prev_prev_consonant;
    case 's':
      if (prev == 's') return false;
      if ((prev == 'u' || prev == 'a' || prev == 'i') && prev_prev_consonant) return false;
      return true;
    case 'l':
      if (!is_plain_vowel(prev)) return prev != 'l' && prev != 'r' && prev != 'w';
      return (prev == 'i' || prev == 'o' || prev == 'u') && prev_prev_consonant;
    case 'r':
      return (prev == 'a' || prev == 'i' || prev == 'u') && prev_prev_consonant;
    case 't':
      return (prev == 'a' || prev == 'u') && prev_prev_consonant;
    case 'd':
      return (prev == 'a' || prev == 'i' || prev == 'o' || prev == 'u') && prev_prev_consonant;
    case 'k':
    case 'b':
      return is_plain_vowel(prev) && prev != 'e' && prev_prev_consonant;
    case 'm':
      return (prev == 'a' || prev == 'i' || prev == 'u') && prev_prev_consonant;
    case 'n':
      return (prev == 'i' || prev == 'u') && prev_prev_consonant;
    case 'p':
      return (prev == 'a' || prev == 'i' || prev == 'u' || prev == 'y') && prev_prev_consonant;
    default:
      return false;
  }
}

bool is_doubled_consonant(std::string_view x) {
  const std::size_t n = x.size();
  return n >= 3 && x[n - 1] == x[n - 2] && !is_plain_vowel(x[n - 1]);
}

std::string root_type_key(std::string_view root, TransformationType t) {
  std::string k(root);
  k += '\t';
  k += tag_string(t);
  return k;
}

std::string inflected_key(std::string_view word, PosClass c) {
  std::string k(word);
  k += '\t';
  k += static_cast<char>('0' + static_cast<int>(c));
  return k;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view tag_string(TransformationType t) { return kTags[transform_id(t)]; }

std::optional<TransformationType> parse_tag(std::string_view tag) {
  for (std::size_t i = 0; i < kTags.size(); ++i)
    if (kTags[i] == tag) return kAllTransforms[i];
  return std::nullopt;
}

TransformationType transform_from_id(std::size_t id) {
  if (id >= kNumTransforms) throw IndexOutOfVocab("transformation id " + std::to_string(id));
  return kAllTransforms[id];
}

PosClass pos_class(TransformationType t) {
  switch (t) {
    case TransformationType::Ing:
    case TransformationType::Vs:
    case TransformationType::Ed:
    case TransformationType::Edp: return PosClass::Verb;
    case TransformationType::Ns: return PosClass::Noun;
    case TransformationType::Jer:
    case TransformationType::Jest: return PosClass::Adjective;
    case TransformationType::Ver:
    case TransformationType::Vest: return PosClass::Adverb;
  }
  return PosClass::Verb;
}

std::string_view pos_class_name(PosClass c) {
  switch (c) {
    case PosClass::Verb: return "verb";
    case PosClass::Noun: return "noun";
    case PosClass::Adjective: return "adjective";
    case PosClass::Adverb: return "adverb";
  }
  return "";
}

std::optional<TransformationType> transform_for_pos_tag(std::string_view tag) {
  for (std::size_t i = 0; i < kPosTags.size(); ++i)
    if (kPosTags[i] == tag) return kAllTransforms[i];
  return std::nullopt;
}

std::string_view pos_tag_for(TransformationType t) { return kPosTags[transform_id(t)]; }

bool is_lower_alpha(std::string_view word) {
  return !word.empty() &&
         std::all_of(word.begin(), word.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

// ---------------------------------------------------------------- IrregularTable

IrregularTable IrregularTable::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse(in);
}

IrregularTable IrregularTable::parse(std::istream& in) {
  IrregularTable table;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 3) {
      throw ParseError("expected 3 tab-separated columns, got " + std::to_string(cols.size()),
                       line_no);
    }
    const auto type = parse_tag(cols[2]);
    if (!type) throw ParseError("unknown transformation type '" + std::string(cols[2]) + "'", line_no);
    if (!is_lower_alpha(cols[0]) || !is_lower_alpha(cols[1]))
      throw ParseError("words must be lowercase alphabetic", line_no);
    if (cols[0] == cols[1]) throw ParseError("inflected form equals root", line_no);
    try {
      table.add({std::string(cols[0]), std::string(cols[1]), *type});
    } catch (const DuplicateKeyError& e) {
      throw DuplicateKeyError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

void IrregularTable::add(IrregularEntry entry) {
  const std::string rt = root_type_key(entry.root, entry.type);
  if (by_root_type_.contains(rt)) {
    throw DuplicateKeyError("duplicate (" + entry.root + ", " +
                            std::string(tag_string(entry.type)) + ")");
  }
  const std::string ik = inflected_key(entry.inflected, pos_class(entry.type));
  auto& bucket = by_inflected_[ik];
  for (std::size_t idx : bucket) {
    if (entries_[idx].root != entry.root) {
      throw DuplicateKeyError("'" + entry.inflected + "' maps to both '" + entries_[idx].root +
                              "' and '" + entry.root + "' as a " +
                              std::string(pos_class_name(pos_class(entry.type))));
    }
  }
  bucket.push_back(entries_.size());
  by_root_type_.emplace(rt, entries_.size());
  entries_.push_back(std::move(entry));
}

std::optional<std::string_view> IrregularTable::form(std::string_view root,
                                                     TransformationType t) const {
  const auto it = by_root_type_.find(root_type_key(root, t));
  if (it == by_root_type_.end()) return std::nullopt;
  return std::string_view(entries_[it->second].inflected);
}

std::vector<const IrregularEntry*> IrregularTable::lookup(std::string_view word, PosClass c) const {
  std::vector<const IrregularEntry*> out;
  const auto it = by_inflected_.find(inflected_key(word, c));
  if (it == by_inflected_.end()) return out;
  for (std::size_t idx : it->second) out.push_back(&entries_[idx]);
  return out;
}

// ---------------------------------------------------------------- RootLexicon

RootLexicon RootLexicon::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse(in);
}

RootLexicon RootLexicon::parse(std::istream& in) {
  RootLexicon lex;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2 || !is_lower_alpha(cols[0]))
      throw ParseError("expected 'root<TAB>classes'", line_no);
    for (char c : cols[1]) {
      switch (c) {
        case 'v': lex.add(cols[0], PosClass::Verb); break;
        case 'n': lex.add(cols[0], PosClass::Noun); break;
        case 'a': lex.add(cols[0], PosClass::Adjective); break;
        case 'r': lex.add(cols[0], PosClass::Adverb); break;
        default: throw ParseError(std::string("unknown class letter '") + c + "'", line_no);
      }
    }
  }
  return lex;
}

void RootLexicon::add(std::string_view word, PosClass c) {
  words_[std::string(word)] |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(c));
}

bool RootLexicon::contains(std::string_view word, PosClass c) const {
  const auto it = words_.find(std::string(word));
  return it != words_.end() && (it->second & (1u << static_cast<unsigned>(c))) != 0;
}

bool RootLexicon::contains(std::string_view word) const {
  return words_.contains(std::string(word));
}

// ---------------------------------------------------------------- Morphology

Morphology::Morphology(IrregularTable irregular, std::unordered_set<std::string> doubling,
                       RootLexicon roots)
    : irregular_(std::move(irregular)), doubling_(std::move(doubling)), roots_(std::move(roots)) {}

Morphology Morphology::load(const std::filesystem::path& dir) {
  IrregularTable irregular = IrregularTable::load(dir / "irregular.tsv");
  std::unordered_set<std::string> doubling;
  {
    auto in = open_or_throw(dir / "doubling.txt");
    std::string raw;
    while (std::getline(in, raw)) {
      const std::string_view line = strip_cr(raw);
      if (line.empty() || line.front() == '#') continue;
      doubling.emplace(line);
    }
  }
  RootLexicon roots;
  if (std::filesystem::exists(dir / "roots.tsv")) roots = RootLexicon::load(dir / "roots.tsv");
  return Morphology(std::move(irregular), std::move(doubling), std::move(roots));
}

Morphology Morphology::load_default() { return load(MORPHOQG_DATA_DIR); }

bool Morphology::doubles_final_consonant(std::string_view root) const {
  return doubling_.contains(std::string(root)) || generic_doubling(root);
}

std::string Morphology::apply_transform(std::string_view root, TransformationType t) const {
  if (auto irr = irregular_.form(root, t)) return std::string(*irr);
  if (!is_lower_alpha(root)) {
    throw UnknownRuleError("no rule inflects '" + std::string(root) + "' with " +
                           std::string(tag_string(t)));
  }
  std::string w(root);
  const std::string_view suffix = suffix_of(t);

  if (suffix == "s") {
    if (is_sibilant_final(w)) return w + "es";
    if (consonant_y(w)) return w.substr(0, w.size() - 1) + "ies";
    return w + "s";
  }
  if (suffix == "ing") {
    if (ends_with(w, "ie")) return w.substr(0, w.size() - 2) + "ying";
    if (w.back() == 'e' && w.size() > 2 && !ends_with(w, "ee") && !ends_with(w, "ye") &&
        !ends_with(w, "oe")) {
      return w.substr(0, w.size() - 1) + "ing";
    }
    if (doubles_final_consonant(w)) return w + w.back() + "ing";
    return w + "ing";
  }
  // -ed, -er, -est
  if (w.back() == 'e') return w + std::string(suffix.substr(1));
  if (consonant_y(w)) return w.substr(0, w.size() - 1) + "i" + std::string(suffix);
  if (doubles_final_consonant(w)) return w + w.back() + std::string(suffix);
  return w + std::string(suffix);
}

std::optional<std::string> Morphology::try_apply(std::string_view root,
                                                 TransformationType t) const {
  if (!is_lower_alpha(root)) return std::nullopt;
  return apply_transform(root, t);
}

std::vector<std::string> Morphology::candidate_roots(std::string_view word,
                                                     TransformationType t) const {
  std::vector<std::string> out;
  const std::string_view suffix = suffix_of(t);
  const std::string w(word);
  auto push = [&](std::string s) {
    if (!s.empty() && s != w && std::find(out.begin(), out.end(), s) == out.end())
      out.push_back(std::move(s));
  };

  if (suffix == "s") {
    if (!ends_with(w, "s") || w.size() < 2) return out;
    const std::string strip_s = w.substr(0, w.size() - 1);
    if (ends_with(w, "ies") && w.size() >= 4) {
      const std::string base = w.substr(0, w.size() - 3);
      if (base.size() == 1) {
        push(strip_s);
        push(base + "y");
      } else {
        push(base + "y");
        push(strip_s);
      }
      return out;
    }
    if (ends_with(w, "es") && w.size() >= 4) {
      const std::string strip_es = w.substr(0, w.size() - 2);
      if (is_sibilant_final(strip_es)) {
        const char last = strip_es.back();
        const bool single_sz = (last == 's' || last == 'z') && strip_es[strip_es.size() - 2] != last;
        if (single_sz && prefers_final_e(strip_es)) {
          push(strip_s);
          push(strip_es);
        } else {
          push(strip_es);
          push(strip_s);
        }
        return out;
      }
    }
    push(strip_s);
    return out;
  }

  if (!ends_with(w, suffix) || w.size() <= suffix.size()) return out;
  const std::string x = w.substr(0, w.size() - suffix.size());

  if (suffix == "ing") {
    if (ends_with(x, "y") && x.size() == 2) push(x.substr(0, 1) + "ie");
    if (is_doubled_consonant(x)) push(x.substr(0, x.size() - 1));
    if (prefers_final_e(x)) {
      push(x + "e");
      push(x);
    } else {
      push(x);
      push(x + "e");
    }
    return out;
  }

  // -ed, -er, -est: the leading 'e' of the suffix may belong to the root.
  const std::string without_tail = w.substr(0, w.size() - (suffix.size() - 1));  // X + "e"
  if (x.size() >= 2 && x.back() == 'i') {
    const std::string base = x.substr(0, x.size() - 1);
    if (base.size() == 1) {
      push(without_tail);
      push(base + "y");
    } else {
      push(base + "y");
      push(without_tail);
    }
  }
  if (is_doubled_consonant(x)) push(x.substr(0, x.size() - 1));
  if (prefers_final_e(x)) {
    push(without_tail);
    push(x);
  } else {
    push(x);
    push(without_tail);
  }
  return out;
}

MorphAnalysis Morphology::analyze(std::string_view word, std::string_view pos_tag) const {
  const auto t = transform_for_pos_tag(pos_tag);
  if (!t) return {to_lower(word), std::nullopt};
  return analyze_as(word, *t);
}

MorphAnalysis Morphology::analyze_as(std::string_view word, TransformationType t) const {
  const std::string w = to_lower(word);
  if (!is_lower_alpha(w)) return {w, std::nullopt};
  const PosClass cls = pos_class(t);

  const auto irregular = irregular_.lookup(w, cls);
  if (!irregular.empty()) {
    for (const IrregularEntry* e : irregular)
      if (e->type == t) return {e->root, e->type};
    return {irregular.front()->root, irregular.front()->type};
  }

  std::optional<std::string> first_verified;
  for (std::string& cand : candidate_roots(w, t)) {
    const auto form = try_apply(cand, t);
    if (!form || *form != w) continue;
    if (roots_.empty() || roots_.contains(cand, cls)) return {std::move(cand), t};
    if (!first_verified) first_verified = std::move(cand);
  }
  if (first_verified && !roots_.contains(w, cls)) return {std::move(*first_verified), t};
  return {w, std::nullopt};
}

std::optional<MorphAnalysis> Morphology::guess_inflection(std::string_view word) const {
  const std::string w = to_lower(word);
  if (!is_lower_alpha(w)) return std::nullopt;
  for (PosClass cls : kAllPosClasses) {
    for (TransformationType t : kAllTransforms) {
      if (pos_class(t) != cls) continue;
      const auto irregular = irregular_.lookup(w, cls);
      for (const IrregularEntry* e : irregular)
        if (e->type == t) return MorphAnalysis{e->root, e->type};
      for (std::string& cand : candidate_roots(w, t)) {
        const auto form = try_apply(cand, t);
        if (!form || *form != w) continue;
        if (roots_.empty() || roots_.contains(cand, cls)) return MorphAnalysis{std::move(cand), t};
      }
    }
  }
  return std::nullopt;
}

}  // namespace morphoqg
