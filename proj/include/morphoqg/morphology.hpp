#pragma once

// Rule-based English inflection and root analysis over the nine
// transformation types (verb ing/vs/ed/edp, noun ns, adjective jer/jest,
// adverb ver/vest).

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace morphoqg {

enum class TransformationType : std::uint8_t { Ing, Vs, Ed, Edp, Ns, Jer, Jest, Ver, Vest };

enum class PosClass : std::uint8_t { Verb, Noun, Adjective, Adverb };

inline constexpr std::size_t kNumTransforms = 9;

inline constexpr std::array<TransformationType, kNumTransforms> kAllTransforms = {
    TransformationType::Ing, TransformationType::Vs,   TransformationType::Ed,
    TransformationType::Edp, TransformationType::Ns,   TransformationType::Jer,
    TransformationType::Jest, TransformationType::Ver, TransformationType::Vest};

inline constexpr std::array<PosClass, 4> kAllPosClasses = {
    PosClass::Verb, PosClass::Noun, PosClass::Adjective, PosClass::Adverb};

/// "##ing", "##vs", ... The id of a type is its index in kAllTransforms.
std::string_view tag_string(TransformationType t);
std::optional<TransformationType> parse_tag(std::string_view tag);
inline std::size_t transform_id(TransformationType t) { return static_cast<std::size_t>(t); }
TransformationType transform_from_id(std::size_t id);

PosClass pos_class(TransformationType t);
std::string_view pos_class_name(PosClass c);

/// Penn Treebank tag that selects a type: VBD -> ##ed, NNS -> ##ns, ...
std::optional<TransformationType> transform_for_pos_tag(std::string_view tag);
/// Inverse of transform_for_pos_tag.
std::string_view pos_tag_for(TransformationType t);

struct IrregularEntry {
  std::string inflected;
  std::string root;
  TransformationType type;

  bool operator==(const IrregularEntry&) const = default;
};

/// Irregular forms indexed both ways: inflected -> (root, type) per POS
/// class, and (root, type) -> inflected.
class IrregularTable {
 public:
  IrregularTable() = default;

  /// TSV rows `inflected<TAB>root<TAB>type`; '#' lines and blank lines are
  /// skipped. Throws ParseError / DuplicateKeyError / FileError.
  static IrregularTable load(const std::filesystem::path& path);
  static IrregularTable parse(std::istream& in);

  void add(IrregularEntry entry);

  const std::vector<IrregularEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::optional<std::string_view> form(std::string_view root, TransformationType t) const;
  /// All entries whose inflected form is `word` within POS class `c`.
  std::vector<const IrregularEntry*> lookup(std::string_view word, PosClass c) const;

 private:
  std::vector<IrregularEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_root_type_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_inflected_;
};

/// Known base forms per POS class; ranks ambiguous analyses.
class RootLexicon {
 public:
  static RootLexicon load(const std::filesystem::path& path);
  static RootLexicon parse(std::istream& in);

  void add(std::string_view word, PosClass c);
  bool contains(std::string_view word, PosClass c) const;
  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

 private:
  std::unordered_map<std::string, std::uint8_t> words_;  // bit per PosClass
};

struct MorphAnalysis {
  std::string root;
  std::optional<TransformationType> transform;

  bool operator==(const MorphAnalysis&) const = default;
};

/// Immutable after construction; all members are const and thread-safe.
class Morphology {
 public:
  Morphology() = default;
  Morphology(IrregularTable irregular, std::unordered_set<std::string> doubling,
             RootLexicon roots = {});

  /// Loads irregular.tsv, doubling.txt and roots.tsv (optional) from `dir`.
  static Morphology load(const std::filesystem::path& dir);
  /// load() on the bundled data directory.
  static Morphology load_default();

  /// Inflects `root`. Irregular table first, then orthographic rules.
  /// Throws UnknownRuleError for anything but lowercase a-z input.
  std::string apply_transform(std::string_view root, TransformationType t) const;

  /// Root and type of `word` under a Penn Treebank tag. Tags outside the
  /// nine inflectional ones, and unanalyzable words, give transform = none.
  MorphAnalysis analyze(std::string_view word, std::string_view pos_tag) const;

  /// Analysis of `word` as an inflection of type `t`.
  MorphAnalysis analyze_as(std::string_view word, TransformationType t) const;

  /// POS-free analysis used for vocabulary statistics: tries verb, noun,
  /// adjective, adverb in order and returns the first inflected reading.
  /// When a root lexicon is loaded only known roots are accepted.
  std::optional<MorphAnalysis> guess_inflection(std::string_view word) const;

  const IrregularTable& irregular() const { return irregular_; }
  const RootLexicon& roots() const { return roots_; }
  bool doubles_final_consonant(std::string_view root) const;

 private:
  std::vector<std::string> candidate_roots(std::string_view word, TransformationType t) const;
  std::optional<std::string> try_apply(std::string_view root, TransformationType t) const;

  IrregularTable irregular_;
  std::unordered_set<std::string> doubling_;
  RootLexicon roots_;
};

/// Lowercase a-z only.
bool is_lower_alpha(std::string_view word);
std::string to_lower(std::string_view s);

}  // namespace morphoqg
