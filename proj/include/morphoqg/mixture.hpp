#pragma once

// The three action distributions (copy / transformation type / question
// word), the soft switch that weights them, and their mixture over surface
// outcomes.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "morphoqg/codec.hpp"

namespace morphoqg {

/// Slots of the switch distribution, in (p_quest, p_copy, p_trans) order.
inline constexpr std::size_t kQuestSlot = 0;
inline constexpr std::size_t kCopySlot = 1;
inline constexpr std::size_t kTransSlot = 2;

template <typename T>
struct ActionDistributions {
  std::vector<T> p_copy;   // over source positions
  std::vector<T> p_trans;  // over the 9 types
  std::vector<T> p_quest;  // over the question-word vocabulary
  std::array<T, 3> p_switch{};
};

/// A distinct surface outcome: a word reachable by copying and/or from the
/// question-word vocabulary, or a transformation tag.
struct Outcome {
  std::string word;
  std::vector<std::size_t> copy_positions;
  std::optional<std::size_t> quest_id;
  std::optional<std::size_t> trans_id;
};

/// Outcomes are ordered: question vocabulary ids first, then source roots
/// missing from it (first occurrence order), then the nine tags.
class OutcomeSpace {
 public:
  static OutcomeSpace build(std::span<const std::string> source_roots, const Vocab& quest_vocab);

  std::size_t size() const { return outcomes_.size(); }
  const Outcome& operator[](std::size_t i) const { return outcomes_[i]; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }

  std::optional<std::size_t> find(std::string_view word) const;
  std::size_t of_quest(std::size_t q) const { return q; }
  std::size_t of_trans(std::size_t t) const { return trans_offset_ + t; }
  std::size_t of_copy(std::size_t source_pos) const { return by_position_.at(source_pos); }
  /// Outcome a supervision action maps to.
  std::size_t of_action(const TargetAction& a) const;

 private:
  std::vector<Outcome> outcomes_;
  std::vector<std::size_t> by_position_;
  std::unordered_map<std::string, std::size_t> by_word_;
  std::size_t trans_offset_ = 0;
};

/// P(w) = p_copy * sum of alpha over w's source positions
///      + p_trans * P_trans(w) + p_quest * P_quest(w).
template <typename T>
std::vector<T> mix(const ActionDistributions<T>& d, const OutcomeSpace& space) {
  std::vector<T> p(space.size(), T(0));
  for (std::size_t o = 0; o < space.size(); ++o) {
    const Outcome& out = space[o];
    T copy = T(0);
    for (std::size_t i : out.copy_positions) copy += d.p_copy[i];
    T v = d.p_switch[kCopySlot] * copy;
    if (out.quest_id) v += d.p_switch[kQuestSlot] * d.p_quest[*out.quest_id];
    if (out.trans_id) v += d.p_switch[kTransSlot] * d.p_trans[*out.trans_id];
    p[o] = v;
  }
  return p;
}

template <typename T>
struct MixtureGrad {
  std::vector<T> d_copy, d_trans, d_quest;
  std::array<T, 3> d_switch{};

  void reset(const ActionDistributions<T>& d) {
    d_copy.assign(d.p_copy.size(), T(0));
    d_trans.assign(d.p_trans.size(), T(0));
    d_quest.assign(d.p_quest.size(), T(0));
    d_switch = {};
  }
};

/// -log P(outcome) under mix(); when `grad` is set, writes
/// scale * d(-log P)/d(distribution entries) into it.
template <typename T>
T mixture_nll(const ActionDistributions<T>& d, const OutcomeSpace& space, std::size_t outcome,
              MixtureGrad<T>* grad = nullptr, T scale = T(1)) {
  const Outcome& out = space[outcome];
  T copy = T(0);
  for (std::size_t i : out.copy_positions) copy += d.p_copy[i];
  const T quest = out.quest_id ? d.p_quest[*out.quest_id] : T(0);
  const T trans = out.trans_id ? d.p_trans[*out.trans_id] : T(0);
  const T m = d.p_switch[kCopySlot] * copy + d.p_switch[kQuestSlot] * quest +
              d.p_switch[kTransSlot] * trans;
  if (grad) {
    grad->reset(d);
    const T dm = -scale / m;
    grad->d_switch[kCopySlot] = dm * copy;
    grad->d_switch[kQuestSlot] = dm * quest;
    grad->d_switch[kTransSlot] = dm * trans;
    for (std::size_t i : out.copy_positions) grad->d_copy[i] += dm * d.p_switch[kCopySlot];
    if (out.quest_id) grad->d_quest[*out.quest_id] += dm * d.p_switch[kQuestSlot];
    if (out.trans_id) grad->d_trans[*out.trans_id] += dm * d.p_switch[kTransSlot];
  }
  return -std::log(m);
}

}  // namespace morphoqg
