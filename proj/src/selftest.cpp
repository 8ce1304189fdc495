#include "morphoqg/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "morphoqg/errors.hpp"
#include "morphoqg/model.hpp"
#include "morphoqg/toy_corpus.hpp"

namespace morphoqg {

bool trans_adjacency_ok(std::span<const TargetAction> actions) {
  for (std::size_t k = 0; k < actions.size(); ++k)
    if (actions[k].kind == TargetAction::Kind::Trans &&
        (k == 0 || actions[k - 1].kind == TargetAction::Kind::Trans))
      return false;
  return true;
}

namespace {

Vocab numbered_vocab(const std::string& prefix, std::size_t extra) {
  std::vector<std::string> tokens = {"<pad>", "<unk>", "<sos>", "<eos>"};
  for (std::size_t i = 0; i < extra; ++i) tokens.push_back(prefix + std::to_string(i));
  return Vocab::from_tokens(std::move(tokens));
}

}  // namespace

GradCheckReport check_model_gradients(std::uint64_t seed, std::size_t hidden, double tolerance) {
  HyperParams hp;
  hp.word_dim = 5;
  hp.answer_dim = hp.ner_dim = hp.pos_dim = 3;
  hp.hidden = hidden;
  hp.dropout = 0.0;
  Vocabs v;
  v.encoder = Vocab::from_tokens({"<pad>", "<unk>", "<sos>", "<eos>", "river", "flood", "city"});
  v.quest = Vocab::from_tokens({"<pad>", "<unk>", "<sos>", "<eos>", "what", "city"});
  v.pos = Vocab::from_tokens({"<pad>", "<unk>", "<sos>", "<eos>", "NN", "VBD"});
  v.ner = Vocab::from_tokens({"<pad>", "<unk>", "<sos>", "<eos>", "O", "LOCATION"});

  EncodedExample ex;
  ex.source_roots = {"river", "flood", "city"};
  ex.source_features = {{"NN", "O", AnswerBio::O},
                        {"VBD", "O", AnswerBio::O},
                        {"NN", "LOCATION", AnswerBio::B}};
  ex.answer_span = {2, 2};
  // "city" is both copyable and a question word, so the marginal covers both.
  ex.target_actions = {TargetAction::copy(1), TargetAction::trans(TransformationType::Ed),
                       TargetAction::quest(4), TargetAction::copy(2)};
  const ModelInput in = make_model_input(ex, v);

  QgModel<double> model(ModelDims::from(hp, v), seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& [_, p] : model.params()) init_uniform(p.value, 0.5, rng);
  return grad_check(
      model.params(),
      [&](ParameterStore<double>&, bool with_grad) {
        return with_grad ? model.loss(in, nullptr, 1.0).loss : model.evaluate(in).loss;
      },
      1e-5, tolerance);
}

double max_mixture_deviation(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    HyperParams hp;
    hp.word_dim = uniform_int(2, 8);
    hp.answer_dim = uniform_int(1, 4);
    hp.ner_dim = uniform_int(1, 4);
    hp.pos_dim = uniform_int(1, 4);
    hp.hidden = uniform_int(2, 12);
    Vocabs v;
    v.encoder = numbered_vocab("w", uniform_int(1, 20));
    v.quest = numbered_vocab("w", uniform_int(1, 40));
    v.pos = numbered_vocab("p", 2);
    v.ner = numbered_vocab("n", 2);

    QgModel<double> model(ModelDims::from(hp, v), rng());
    const double scale = std::uniform_real_distribution<double>(0.01, 5.0)(rng);
    for (auto& [_, p] : model.params()) init_uniform(p.value, scale, rng);

    const std::size_t n = uniform_int(1, 12);
    EncodedExample ex;
    for (std::size_t i = 0; i < n; ++i) {
      // Roots overlap the question vocabulary and repeat within the source.
      ex.source_roots.push_back("w" + std::to_string(uniform_int(0, 30)));
      ex.source_features.push_back({"p" + std::to_string(uniform_int(0, 1)), "n0", AnswerBio::O});
    }
    const std::size_t first = uniform_int(0, n - 1), last = uniform_int(first, n - 1);
    ex.answer_span = {first, last};
    for (std::size_t i = first; i <= last; ++i)
      ex.source_features[i].answer_bio = i == first ? AnswerBio::B : AnswerBio::I;
    const ModelInput in = make_model_input(ex, v);

    const EncoderOutput<double> enc = model.encode(in);
    std::vector<double> s(hp.hidden), c(hp.hidden);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& x : s) x = u(rng);
    for (double& x : c) x = u(rng);
    DecoderInput input;
    switch (uniform_int(0, 3)) {
      case 0: input = {DecoderInput::Kind::Start, 0}; break;
      case 1: input = {DecoderInput::Kind::Word, uniform_int(0, v.encoder.size() - 1)}; break;
      case 2: input = {DecoderInput::Kind::Quest, uniform_int(0, v.quest.size() - 1)}; break;
      default: input = {DecoderInput::Kind::Trans, uniform_int(0, kNumTransforms - 1)}; break;
    }
    const auto step = model.decode_step(model.input_embedding(input), c, s, enc);
    const auto p = mix(step, in.outcomes);
    double sum = 0.0;
    for (double x : p) sum += x;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

bool SelftestReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

SelftestReport run_selftest(const Morphology& morph, std::uint64_t seed, std::ostream& log) {
  SelftestReport report;
  auto record = [&](std::string name, bool ok, std::string detail) {
    log << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    report.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  {
    const GradCheckReport g = check_model_gradients(seed);
    std::ostringstream d;
    d << "max relative error " << g.max_relative_error() << " over " << g.entries.size()
      << " tensors";
    for (const auto& e : g.entries)
      if (!e.passed) d << "; " << e.name << " " << e.relative_error;
    record("grad-check", g.passed(), d.str());
  }

  {
    const auto corpus = toy_corpus(200, seed);
    const Vocabs vocabs = build_vocabs(corpus, morph);
    std::size_t coverable = 0, exact = 0;
    std::string first_miss;
    for (const RawExample& raw : corpus) {
      const EncodedExample ex = encode_example(raw, vocabs.quest, morph);
      if (!is_coverable(raw.question, ex.source_roots, vocabs.quest, morph)) continue;
      ++coverable;
      const std::string text = realize(ex.target_actions, ex.source_roots, vocabs.quest, morph);
      if (text == ex.reference_question)
        ++exact;
      else if (first_miss.empty())
        first_miss = "; first miss: '" + text + "' vs '" + ex.reference_question + "'";
    }
    record("codec-round-trip", coverable > 0 && exact == coverable,
           std::to_string(exact) + "/" + std::to_string(coverable) + " coverable questions" +
               first_miss);
  }

  {
    std::mt19937_64 rng(seed);
    std::size_t agree = 0;
    constexpr std::size_t kTrials = 2000;
    for (std::size_t t = 0; t < kTrials; ++t) {
      std::vector<TargetAction> seq(std::uniform_int_distribution<std::size_t>(0, 8)(rng));
      for (auto& a : seq) {
        const auto kind = std::uniform_int_distribution<int>(0, 2)(rng);
        a = kind == 0   ? TargetAction::copy(0)
            : kind == 1 ? TargetAction::quest(Vocab::kUnk)
                        : TargetAction{TargetAction::Kind::Trans, 0};
      }
      bool accepted = true;
      try {
        validate_actions(seq, 1, Vocab::kNumReserved);
      } catch (const DanglingTransError&) {
        accepted = false;
      }
      agree += accepted == trans_adjacency_ok(seq);
    }
    record("trans-adjacency", agree == kTrials,
           std::to_string(agree) + "/" + std::to_string(kTrials) + " random sequences");
  }

  {
    const double dev = max_mixture_deviation(100, seed);
    std::ostringstream d;
    d << "max |sum P - 1| = " << dev << " over 100 random models";
    record("mixture-normalization", dev < 1e-6, d.str());
  }
  return report;
}

}  // namespace morphoqg
