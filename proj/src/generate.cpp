#include "morphoqg/generate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace morphoqg {

std::size_t surface_word_count(const std::vector<TargetAction>& actions) {
  return static_cast<std::size_t>(std::count_if(actions.begin(), actions.end(), [](const auto& a) {
    return a.kind != TargetAction::Kind::Trans;
  }));
}

bool outcome_allowed(const OutcomeSpace& space, std::size_t o, const TargetAction* prev) {
  const Outcome& out = space[o];
  if (out.trans_id) return prev != nullptr && prev->kind != TargetAction::Kind::Trans;
  if (out.copy_positions.empty() && out.quest_id) {
    const std::size_t q = *out.quest_id;
    if (q == Vocab::kPad || q == Vocab::kSos) return false;
    if (q == Vocab::kEos) return prev != nullptr;
  }
  return true;
}

TargetAction outcome_action(const OutcomeSpace& space, std::size_t o, const AnswerSpan& answer) {
  const Outcome& out = space[o];
  if (out.trans_id) return TargetAction{TargetAction::Kind::Trans, *out.trans_id};
  if (!out.copy_positions.empty()) {
    auto distance = [&](std::size_t i) -> std::size_t {
      if (i < answer.first) return answer.first - i;
      if (i > answer.last) return i - answer.last;
      return 0;
    };
    std::size_t best = out.copy_positions.front();
    for (std::size_t i : out.copy_positions)
      if (distance(i) < distance(best)) best = i;
    return TargetAction::copy(best);
  }
  return TargetAction::quest(*out.quest_id);
}

namespace {

using Clock = std::chrono::steady_clock;

bool is_eos(const OutcomeSpace& space, std::size_t o) {
  const Outcome& out = space[o];
  return out.copy_positions.empty() && out.quest_id && *out.quest_id == Vocab::kEos;
}

template <typename T>
struct Hypothesis {
  std::vector<TargetAction> actions;
  double log_prob = 0.0;
  std::size_t steps = 0;
  std::vector<T> state, context;
  DecoderInput input;
  bool finished = false;

  double score() const { return steps ? log_prob / static_cast<double>(steps) : 0.0; }
};

template <typename T>
GenerationResult finish(const Hypothesis<T>& h, const ModelInput& in, const Vocab& quest_vocab,
                        const Morphology& morph, Clock::time_point start) {
  GenerationResult r;
  r.actions = h.actions;
  r.question = realize(r.actions, in.source_roots, quest_vocab, morph);
  r.log_prob = h.log_prob;
  r.steps = h.steps;
  r.score = h.score();
  r.finished = h.finished;
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  // EOS counts as a decoded word so empty outputs still report a rate.
  r.seconds_per_word = r.seconds / static_cast<double>(surface_word_count(r.actions) + 1);
  return r;
}

}  // namespace

template <typename T>
GenerationResult generate_greedy(const QgModel<T>& model, const ModelInput& in,
                                 const Vocab& quest_vocab, const Morphology& morph,
                                 std::size_t max_length) {
  const auto start = Clock::now();
  const EncoderOutput<T> enc = model.encode(in);
  Hypothesis<T> h;
  h.state = enc.initial_state;
  h.context.assign(model.dims().hyper.hidden, T(0));
  while (h.steps < max_length) {
    const auto st = model.decode_step(model.input_embedding(h.input), h.context, h.state, enc);
    const std::vector<T> probs = mix(st, in.outcomes);
    const TargetAction* prev = h.actions.empty() ? nullptr : &h.actions.back();
    std::size_t best = probs.size();
    for (std::size_t o = 0; o < probs.size(); ++o)
      if (outcome_allowed(in.outcomes, o, prev) && (best == probs.size() || probs[o] > probs[best]))
        best = o;
    h.log_prob += std::log(static_cast<double>(probs[best]));
    ++h.steps;
    if (is_eos(in.outcomes, best)) {
      h.finished = true;
      break;
    }
    const TargetAction a = outcome_action(in.outcomes, best, in.answer);
    h.actions.push_back(a);
    h.input = QgModel<T>::next_input(a, in);
    h.state = st.state;
    h.context = st.context;
  }
  return finish(h, in, quest_vocab, morph, start);
}

template <typename T>
GenerationResult generate_beam(const QgModel<T>& model, const ModelInput& in,
                               const Vocab& quest_vocab, const Morphology& morph,
                               const GenerationOptions& opts) {
  const auto start = Clock::now();
  const std::size_t beam = std::max<std::size_t>(opts.beam, 1);
  const EncoderOutput<T> enc = model.encode(in);

  std::vector<Hypothesis<T>> live(1), done;
  live[0].state = enc.initial_state;
  live[0].context.assign(model.dims().hyper.hidden, T(0));

  struct Candidate {
    std::size_t parent, outcome;
    double log_prob;
  };
  for (std::size_t step = 0; step < opts.max_length && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    std::vector<DecoderStep<T>> outs;
    outs.reserve(live.size());
    for (std::size_t k = 0; k < live.size(); ++k) {
      const Hypothesis<T>& h = live[k];
      outs.push_back(model.decode_step(model.input_embedding(h.input), h.context, h.state, enc));
      const std::vector<T> probs = mix(outs.back(), in.outcomes);
      const TargetAction* prev = h.actions.empty() ? nullptr : &h.actions.back();
      std::vector<Candidate> mine;
      for (std::size_t o = 0; o < probs.size(); ++o)
        if (outcome_allowed(in.outcomes, o, prev))
          mine.push_back({k, o, h.log_prob + std::log(static_cast<double>(probs[o]))});
      // Only the top `beam` continuations of a hypothesis can survive.
      const auto keep = std::min(beam, mine.size());
      std::partial_sort(mine.begin(), mine.begin() + static_cast<std::ptrdiff_t>(keep), mine.end(),
                        [](const Candidate& a, const Candidate& b) {
                          return a.log_prob > b.log_prob ||
                                 (a.log_prob == b.log_prob && a.outcome < b.outcome);
                        });
      cands.insert(cands.end(), mine.begin(), mine.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return a.log_prob > b.log_prob;
    });

    std::vector<Hypothesis<T>> next;
    for (const Candidate& c : cands) {
      if (next.size() >= beam) break;
      const Hypothesis<T>& parent = live[c.parent];
      Hypothesis<T> h;
      h.actions = parent.actions;
      h.log_prob = c.log_prob;
      h.steps = parent.steps + 1;
      if (is_eos(in.outcomes, c.outcome)) {
        h.finished = true;
        done.push_back(std::move(h));
        continue;
      }
      const TargetAction a = outcome_action(in.outcomes, c.outcome, in.answer);
      h.actions.push_back(a);
      h.input = QgModel<T>::next_input(a, in);
      h.state = outs[c.parent].state;
      h.context = outs[c.parent].context;
      next.push_back(std::move(h));
    }
    live = std::move(next);
    if (done.size() >= beam) break;
  }

  const std::vector<Hypothesis<T>>& pool = done.empty() ? live : done;
  const auto best = std::max_element(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
    return a.score() < b.score();
  });
  return finish(*best, in, quest_vocab, morph, start);
}

template GenerationResult generate_greedy<float>(const QgModel<float>&, const ModelInput&,
                                                 const Vocab&, const Morphology&, std::size_t);
template GenerationResult generate_greedy<double>(const QgModel<double>&, const ModelInput&,
                                                  const Vocab&, const Morphology&, std::size_t);
template GenerationResult generate_beam<float>(const QgModel<float>&, const ModelInput&,
                                               const Vocab&, const Morphology&,
                                               const GenerationOptions&);
template GenerationResult generate_beam<double>(const QgModel<double>&, const ModelInput&,
                                                const Vocab&, const Morphology&,
                                                const GenerationOptions&);

}  // namespace morphoqg
