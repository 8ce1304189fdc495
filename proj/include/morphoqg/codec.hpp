#pragma once

// Root rewriting of tagged examples into copy / question-word / transform
// action sequences, and realization of action sequences back to text.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "morphoqg/morphology.hpp"

namespace morphoqg {

enum class AnswerBio : std::uint8_t { B, I, O };

char bio_char(AnswerBio b);
AnswerBio bio_from_char(char c);

struct TaggedToken {
  std::string word;
  std::string pos;
  std::string ner;
  AnswerBio answer_bio = AnswerBio::O;
};

/// One corpus line: source text with features and the reference question.
struct RawExample {
  std::vector<TaggedToken> source;
  std::vector<TaggedToken> question;  // ner/answer_bio unused
};

struct AnswerSpan {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive

  bool operator==(const AnswerSpan&) const = default;
};

struct TokenFeatures {
  std::string pos;
  std::string ner;
  AnswerBio answer_bio = AnswerBio::O;

  bool operator==(const TokenFeatures&) const = default;
};

struct TargetAction {
  enum class Kind : std::uint8_t { Copy, Quest, Trans };

  Kind kind = Kind::Copy;
  std::size_t index = 0;  // source position, question-vocab id or type id

  static TargetAction copy(std::size_t i) { return {Kind::Copy, i}; }
  static TargetAction quest(std::size_t q) { return {Kind::Quest, q}; }
  static TargetAction trans(TransformationType t) { return {Kind::Trans, transform_id(t)}; }

  bool operator==(const TargetAction&) const = default;
};

struct EncodedSource {
  std::vector<std::string> roots;
  std::vector<TokenFeatures> features;
  AnswerSpan answer;
};

struct EncodedExample {
  std::vector<std::string> source_roots;
  std::vector<TokenFeatures> source_features;
  AnswerSpan answer_span;
  std::vector<TargetAction> target_actions;
  std::string reference_question;
};

/// Token list with reserved ids 0..3 = <pad> <unk> <sos> <eos>.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kSos = 2;
  static constexpr std::size_t kEos = 3;
  static constexpr std::size_t kNumReserved = 4;

  Vocab();
  /// Most frequent `cap` words; ties broken lexicographically.
  static Vocab from_counts(const std::unordered_map<std::string, std::size_t>& counts,
                           std::size_t cap);
  /// Reserved tokens must occupy the first four lines.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t id) const;
  std::optional<std::size_t> find(std::string_view word) const;
  std::size_t id_or_unk(std::string_view word) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct VocabCaps {
  std::size_t encoder = 30000;
  std::size_t quest = 1000;
};

/// Encoder and question-word vocabularies plus the POS / NER feature
/// vocabularies the encoder embeds. The nine transformation types form the
/// fixed third vocabulary.
struct Vocabs {
  Vocab encoder;
  Vocab quest;
  Vocab pos;
  Vocab ner;
};

/// Counts over root-rewritten, lowercased text.
Vocabs build_vocabs(std::span<const RawExample> corpus, const Morphology& morph,
                    VocabCaps caps = {});

struct EncodeOptions {
  std::size_t cutoff = 128;
  bool truncate = false;
};

EncodedSource encode_source(std::span<const TaggedToken> tokens, const Morphology& morph,
                            const EncodeOptions& opts = {});

/// Greedy left-to-right alignment of question roots to Copy / Quest actions,
/// each followed by Trans when the word was inflected.
std::vector<TargetAction> encode_target(std::span<const TaggedToken> question,
                                        std::span<const std::string> source_roots,
                                        const AnswerSpan& answer, const Vocab& quest_vocab,
                                        const Morphology& morph);

EncodedExample encode_example(const RawExample& ex, const Vocab& quest_vocab,
                              const Morphology& morph, const EncodeOptions& opts = {});

/// Surface question for an action sequence. Trans re-inflects the previous
/// word; words it cannot inflect are left unchanged.
std::string realize(std::span<const TargetAction> actions,
                    std::span<const std::string> source_roots, const Vocab& quest_vocab,
                    const Morphology& morph);

/// Throws DanglingTransError if Trans is first or follows Trans, and
/// IndexOutOfVocab for out-of-range indices.
void validate_actions(std::span<const TargetAction> actions, std::size_t source_len,
                      std::size_t quest_size);

/// Lowercased words joined by single spaces.
std::string join_lower(std::span<const TaggedToken> tokens);

/// True when every question word's root is in the source or quest_vocab.
bool is_coverable(std::span<const TaggedToken> question, std::span<const std::string> source_roots,
                  const Vocab& quest_vocab, const Morphology& morph);

}  // namespace morphoqg
