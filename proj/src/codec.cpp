#include "morphoqg/codec.hpp"

#include <algorithm>
#include <limits>

#include "morphoqg/errors.hpp"

namespace morphoqg {

char bio_char(AnswerBio b) {
  switch (b) {
    case AnswerBio::B: return 'B';
    case AnswerBio::I: return 'I';
    case AnswerBio::O: return 'O';
  }
  return 'O';
}

AnswerBio bio_from_char(char c) {
  switch (c) {
    case 'B': return AnswerBio::B;
    case 'I': return AnswerBio::I;
    case 'O': return AnswerBio::O;
    default: throw DataError(std::string("bad answer BIO tag '") + c + "'");
  }
}

// ---------------------------------------------------------------- Vocab

namespace {
constexpr std::string_view kReserved[Vocab::kNumReserved] = {"<pad>", "<unk>", "<sos>", "<eos>"};
}

Vocab::Vocab() {
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    tokens_.emplace_back(kReserved[i]);
    index_.emplace(tokens_.back(), i);
  }
}

Vocab Vocab::from_counts(const std::unordered_map<std::string, std::size_t>& counts,
                         std::size_t cap) {
  std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocab v;
  for (const auto& [word, n] : sorted) {
    if (v.size() - kNumReserved >= cap) break;
    if (v.index_.contains(word)) continue;
    v.index_.emplace(word, v.tokens_.size());
    v.tokens_.push_back(word);
  }
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved) throw DataError("vocabulary lacks the reserved tokens");
  for (std::size_t i = 0; i < kNumReserved; ++i)
    if (tokens[i] != kReserved[i])
      throw ParseError("expected reserved token " + std::string(kReserved[i]), i + 1);
  Vocab v;
  v.tokens_.clear();
  v.index_.clear();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!v.index_.emplace(tokens[i], i).second)
      throw DuplicateKeyError("duplicate vocabulary token '" + tokens[i] + "'");
  }
  v.tokens_ = std::move(tokens);
  return v;
}

const std::string& Vocab::token(std::size_t id) const {
  if (id >= tokens_.size())
    throw IndexOutOfVocab("id " + std::to_string(id) + " >= vocab size " +
                          std::to_string(tokens_.size()));
  return tokens_[id];
}

std::optional<std::size_t> Vocab::find(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocab::id_or_unk(std::string_view word) const { return find(word).value_or(kUnk); }

// ---------------------------------------------------------------- encoding

Vocabs build_vocabs(std::span<const RawExample> corpus, const Morphology& morph, VocabCaps caps) {
  std::unordered_map<std::string, std::size_t> enc, quest, pos, ner;
  for (const RawExample& ex : corpus) {
    for (const TaggedToken& tok : ex.source) {
      ++enc[morph.analyze(tok.word, tok.pos).root];
      ++pos[tok.pos];
      ++ner[tok.ner];
    }
    for (const TaggedToken& tok : ex.question) ++quest[morph.analyze(tok.word, tok.pos).root];
  }
  constexpr std::size_t kAll = std::numeric_limits<std::size_t>::max();
  return {Vocab::from_counts(enc, caps.encoder), Vocab::from_counts(quest, caps.quest),
          Vocab::from_counts(pos, kAll), Vocab::from_counts(ner, kAll)};
}

namespace {

AnswerSpan answer_span_of(std::span<const TaggedToken> tokens) {
  std::optional<std::size_t> first, last;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const AnswerBio b = tokens[i].answer_bio;
    if (b == AnswerBio::B) {
      if (first) throw DataError("answer span has more than one B tag");
      first = last = i;
    } else if (b == AnswerBio::I) {
      if (!last || *last != i - 1) throw DataError("answer I tag does not continue a span");
      last = i;
    }
  }
  if (!first) throw DataError("example has no answer span");
  return {*first, *last};
}

std::size_t distance_to_span(std::size_t i, const AnswerSpan& span) {
  if (i < span.first) return span.first - i;
  if (i > span.last) return i - span.last;
  return 0;
}

}  // namespace

EncodedSource encode_source(std::span<const TaggedToken> tokens, const Morphology& morph,
                            const EncodeOptions& opts) {
  if (tokens.empty()) throw EmptyInputError("empty source sequence");
  if (tokens.size() > opts.cutoff) {
    if (!opts.truncate) {
      throw CutoffExceeded("source has " + std::to_string(tokens.size()) +
                           " tokens, cutoff is " + std::to_string(opts.cutoff));
    }
    tokens = tokens.first(opts.cutoff);
  }
  EncodedSource out;
  out.answer = answer_span_of(tokens);
  out.roots.reserve(tokens.size());
  out.features.reserve(tokens.size());
  for (const TaggedToken& tok : tokens) {
    out.roots.push_back(morph.analyze(tok.word, tok.pos).root);
    out.features.push_back({tok.pos, tok.ner, tok.answer_bio});
  }
  return out;
}

std::vector<TargetAction> encode_target(std::span<const TaggedToken> question,
                                        std::span<const std::string> source_roots,
                                        const AnswerSpan& answer, const Vocab& quest_vocab,
                                        const Morphology& morph) {
  if (question.empty()) throw EmptyInputError("empty question");
  std::vector<TargetAction> actions;
  actions.reserve(question.size() * 2);
  for (const TaggedToken& tok : question) {
    const MorphAnalysis a = morph.analyze(tok.word, tok.pos);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < source_roots.size(); ++i) {
      if (source_roots[i] != a.root) continue;
      if (!best || distance_to_span(i, answer) < distance_to_span(*best, answer)) best = i;
    }
    if (best) {
      actions.push_back(TargetAction::copy(*best));
    } else {
      actions.push_back(TargetAction::quest(quest_vocab.id_or_unk(a.root)));
    }
    if (a.transform) actions.push_back(TargetAction::trans(*a.transform));
  }
  return actions;
}

EncodedExample encode_example(const RawExample& ex, const Vocab& quest_vocab,
                              const Morphology& morph, const EncodeOptions& opts) {
  EncodedSource src = encode_source(ex.source, morph, opts);
  EncodedExample out;
  out.target_actions = encode_target(ex.question, src.roots, src.answer, quest_vocab, morph);
  out.source_roots = std::move(src.roots);
  out.source_features = std::move(src.features);
  out.answer_span = src.answer;
  out.reference_question = join_lower(ex.question);
  return out;
}

void validate_actions(std::span<const TargetAction> actions, std::size_t source_len,
                      std::size_t quest_size) {
  for (std::size_t k = 0; k < actions.size(); ++k) {
    const TargetAction& a = actions[k];
    switch (a.kind) {
      case TargetAction::Kind::Copy:
        if (a.index >= source_len)
          throw IndexOutOfVocab("copy index " + std::to_string(a.index) + " >= source length " +
                                std::to_string(source_len));
        break;
      case TargetAction::Kind::Quest:
        if (a.index >= quest_size)
          throw IndexOutOfVocab("question-word id " + std::to_string(a.index) +
                                " >= vocab size " + std::to_string(quest_size));
        break;
      case TargetAction::Kind::Trans:
        if (a.index >= kNumTransforms)
          throw IndexOutOfVocab("transformation id " + std::to_string(a.index));
        if (k == 0) throw DanglingTransError("transformation type at the start of a sequence");
        if (actions[k - 1].kind == TargetAction::Kind::Trans)
          throw DanglingTransError("transformation type follows another transformation type");
        break;
    }
  }
}

std::string realize(std::span<const TargetAction> actions,
                    std::span<const std::string> source_roots, const Vocab& quest_vocab,
                    const Morphology& morph) {
  validate_actions(actions, source_roots.size(), quest_vocab.size());
  std::vector<std::string> words;
  words.reserve(actions.size());
  for (const TargetAction& a : actions) {
    switch (a.kind) {
      case TargetAction::Kind::Copy: words.push_back(source_roots[a.index]); break;
      case TargetAction::Kind::Quest: words.push_back(quest_vocab.token(a.index)); break;
      case TargetAction::Kind::Trans:
        try {
          words.back() = morph.apply_transform(words.back(), transform_from_id(a.index));
        } catch (const UnknownRuleError&) {
          // non-alphabetic word: leave as is
        }
        break;
    }
  }
  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string join_lower(std::span<const TaggedToken> tokens) {
  std::string out;
  for (const TaggedToken& t : tokens) {
    if (!out.empty()) out += ' ';
    out += to_lower(t.word);
  }
  return out;
}

bool is_coverable(std::span<const TaggedToken> question, std::span<const std::string> source_roots,
                  const Vocab& quest_vocab, const Morphology& morph) {
  for (const TaggedToken& tok : question) {
    const std::string root = morph.analyze(tok.word, tok.pos).root;
    const bool in_source =
        std::find(source_roots.begin(), source_roots.end(), root) != source_roots.end();
    const auto q = quest_vocab.find(root);
    if (!in_source && (!q || *q < Vocab::kNumReserved)) return false;
  }
  return true;
}

}  // namespace morphoqg
