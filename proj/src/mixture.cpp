#include "morphoqg/mixture.hpp"

#include "morphoqg/errors.hpp"

namespace morphoqg {

OutcomeSpace OutcomeSpace::build(std::span<const std::string> source_roots, const Vocab& quest_vocab) {
  OutcomeSpace s;
  s.outcomes_.reserve(quest_vocab.size() + source_roots.size() + kNumTransforms);
  for (std::size_t q = 0; q < quest_vocab.size(); ++q) {
    s.outcomes_.push_back({quest_vocab.token(q), {}, q, std::nullopt});
    s.by_word_.emplace(quest_vocab.token(q), q);
  }
  s.by_position_.resize(source_roots.size());
  for (std::size_t i = 0; i < source_roots.size(); ++i) {
    auto [it, inserted] = s.by_word_.emplace(source_roots[i], s.outcomes_.size());
    if (inserted) s.outcomes_.push_back({source_roots[i], {}, std::nullopt, std::nullopt});
    s.outcomes_[it->second].copy_positions.push_back(i);
    s.by_position_[i] = it->second;
  }
  s.trans_offset_ = s.outcomes_.size();
  for (TransformationType t : kAllTransforms)
    s.outcomes_.push_back({std::string(tag_string(t)), {}, std::nullopt, transform_id(t)});
  return s;
}

std::optional<std::size_t> OutcomeSpace::find(std::string_view word) const {
  for (std::size_t t = 0; t < kNumTransforms; ++t)
    if (outcomes_[trans_offset_ + t].word == word) return trans_offset_ + t;
  const auto it = by_word_.find(std::string(word));
  if (it == by_word_.end()) return std::nullopt;
  return it->second;
}

std::size_t OutcomeSpace::of_action(const TargetAction& a) const {
  switch (a.kind) {
    case TargetAction::Kind::Copy:
      if (a.index >= by_position_.size()) throw IndexOutOfVocab("copy index out of range");
      return by_position_[a.index];
    case TargetAction::Kind::Quest:
      if (a.index >= trans_offset_ || !outcomes_[a.index].quest_id)
        throw IndexOutOfVocab("question-word id out of range");
      return a.index;
    case TargetAction::Kind::Trans:
      if (a.index >= kNumTransforms) throw IndexOutOfVocab("transformation id out of range");
      return trans_offset_ + a.index;
  }
  return 0;
}

}  // namespace morphoqg
