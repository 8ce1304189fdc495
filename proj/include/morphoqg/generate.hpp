#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "morphoqg/model.hpp"

namespace morphoqg {

struct GenerationOptions {
  std::size_t beam = 12;
  std::size_t max_length = 32;  // decoder steps, EOS included
};

struct GenerationResult {
  std::string question;                // realized surface text
  std::vector<TargetAction> actions;   // without EOS
  double log_prob = 0.0;               // sum over emitted steps, EOS included
  double score = 0.0;                  // log_prob / steps
  std::size_t steps = 0;
  bool finished = false;               // EOS reached within max_length
  double seconds = 0.0;
  double seconds_per_word = 0.0;       // root + type counted as one word
};

/// Per-step argmax over the mixed distribution.
template <typename T>
GenerationResult generate_greedy(const QgModel<T>& model, const ModelInput& in,
                                 const Vocab& quest_vocab, const Morphology& morph,
                                 std::size_t max_length = 32);

/// Length-normalized beam search over the mixed distribution.
template <typename T>
GenerationResult generate_beam(const QgModel<T>& model, const ModelInput& in,
                               const Vocab& quest_vocab, const Morphology& morph,
                               const GenerationOptions& opts = {});

/// Number of surface words an action sequence realizes to.
std::size_t surface_word_count(const std::vector<TargetAction>& actions);

/// Whether outcome `o` may be emitted after `prev` (nullptr at the first step):
/// never <pad>/<sos>, no EOS or transformation first, no transformation
/// after a transformation.
bool outcome_allowed(const OutcomeSpace& space, std::size_t o, const TargetAction* prev);

/// The action an outcome is realized as; copies use the source position
/// nearest the answer span (leftmost on ties).
TargetAction outcome_action(const OutcomeSpace& space, std::size_t o, const AnswerSpan& answer);

}  // namespace morphoqg
