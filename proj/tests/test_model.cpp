#include <doctest.h>

#include <cmath>
#include <random>

#include "morphoqg/generate.hpp"
#include "morphoqg/selftest.hpp"
#include "morphoqg/toy_corpus.hpp"
#include "morphoqg/train.hpp"
#include "support.hpp"

using namespace morphoqg;
using morphoqg::test::morph;

namespace {

Vocab make_vocab(std::vector<std::string> words) {
  std::vector<std::string> t = {"<pad>", "<unk>", "<sos>", "<eos>"};
  t.insert(t.end(), words.begin(), words.end());
  return Vocab::from_tokens(std::move(t));
}

HyperParams small_hyper(std::size_t hidden = 6) {
  HyperParams hp;
  hp.word_dim = 5;
  hp.answer_dim = hp.ner_dim = hp.pos_dim = 2;
  hp.hidden = hidden;
  hp.dropout = 0.0;
  return hp;
}

struct Fixture {
  Vocabs vocabs;
  EncodedExample ex;
  ModelInput in;

  // Source "a he b c d he e": "he" at positions 1 and 5 and question-word id 7.
  Fixture() {
    vocabs.encoder = make_vocab({"a", "he", "b", "c", "d", "e"});
    vocabs.quest = make_vocab({"what", "who", "do", "he"});
    vocabs.pos = make_vocab({"NN", "PRP"});
    vocabs.ner = make_vocab({"O"});
    ex.source_roots = {"a", "he", "b", "c", "d", "he", "e"};
    for (std::size_t i = 0; i < ex.source_roots.size(); ++i)
      ex.source_features.push_back({"NN", "O", i == 3 ? AnswerBio::B : AnswerBio::O});
    ex.answer_span = {3, 3};
    ex.target_actions = {TargetAction::quest(5), TargetAction::copy(1),
                         TargetAction::trans(TransformationType::Ed), TargetAction::copy(2)};
    in = make_model_input(ex, vocabs);
  }
};

template <typename T>
void zero_params(QgModel<T>& m) {
  for (auto& [_, p] : m.params()) p.value.zero();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("hyperparameter defaults") {
  const HyperParams hp;
  CHECK(hp.word_dim == 300);
  CHECK(hp.answer_dim == 32);
  CHECK(hp.ner_dim == 32);
  CHECK(hp.pos_dim == 32);
  CHECK(hp.hidden == 512);
  CHECK(hp.dropout == 0.20);
  CHECK(hp.learning_rate == 0.002);
  CHECK(hp.batch_size == 32);
  CHECK(hp.cutoff == 128);
  CHECK(hp.beam == 12);
  CHECK(HyperParams::from_json(hp.to_json()).to_json() == hp.to_json());
  HyperParams bad;
  bad.hidden = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("uniform-zero parameters give uniform distributions") {
  Fixture f;
  QgModel<double> m(ModelDims::from(small_hyper(), f.vocabs), 1);
  zero_params(m);
  const auto enc = m.encode(f.in);
  const std::vector<double> zero(6, 0.0);
  const auto st = m.decode_step(m.input_embedding({}), zero, enc.initial_state, enc);
  CHECK(st.p_copy.size() == 7);
  CHECK(st.p_trans.size() == 9);
  CHECK(st.p_quest.size() == f.vocabs.quest.size());
  for (double p : st.p_copy) CHECK(p == doctest::Approx(1.0 / 7));
  for (double p : st.p_trans) CHECK(p == doctest::Approx(1.0 / 9));
  for (double p : st.p_quest) CHECK(p == doctest::Approx(1.0 / 8));
  for (double p : st.p_switch) CHECK(p == doctest::Approx(1.0 / 3));
}

TEST_CASE("uniform-model loss equals the exact mixture value") {
  Fixture f;
  QgModel<double> m(ModelDims::from(small_hyper(), f.vocabs), 1);
  zero_params(m);
  // Per-step probability of each gold outcome under the uniform mixture.
  const double n = 7, q = 8, t = 9;
  const double p_who = (1.0 / 3) / q;                        // quest only
  const double p_he = (1.0 / 3) * (2 / n) + (1.0 / 3) / q;   // two copies + quest
  const double p_ed = (1.0 / 3) / t;
  const double p_b = (1.0 / 3) / n;
  const double p_eos = (1.0 / 3) / q;
  const double want = -std::log(p_who) - std::log(p_he) - std::log(p_ed) - std::log(p_b) -
                      std::log(p_eos);
  const auto r = m.evaluate(f.in);
  CHECK(r.steps == 5);
  CHECK(r.loss == doctest::Approx(want).epsilon(1e-12));
  CHECK(m.loss(f.in, nullptr, 1.0).loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("mixture of a duplicated word sums copy and question-word mass") {
  Fixture f;
  QgModel<double> m(ModelDims::from(small_hyper(), f.vocabs), 3);
  std::mt19937_64 rng(4);
  for (auto& [_, p] : m.params()) init_uniform(p.value, 0.7, rng);
  const auto enc = m.encode(f.in);
  const std::vector<double> zero(6, 0.0);
  const auto st = m.decode_step(m.input_embedding({}), zero, enc.initial_state, enc);
  const auto p = mix(st, f.in.outcomes);

  // Brute force: walk every (action, index) and add its mass to the word it emits.
  std::map<std::string, double> by_word;
  for (std::size_t i = 0; i < f.ex.source_roots.size(); ++i)
    by_word[f.ex.source_roots[i]] += st.p_switch[kCopySlot] * st.p_copy[i];
  for (std::size_t k = 0; k < f.vocabs.quest.size(); ++k)
    by_word[f.vocabs.quest.token(k)] += st.p_switch[kQuestSlot] * st.p_quest[k];
  for (std::size_t k = 0; k < kNumTransforms; ++k)
    by_word[std::string(tag_string(transform_from_id(k)))] += st.p_switch[kTransSlot] * st.p_trans[k];

  CHECK(by_word.size() == f.in.outcomes.size());
  for (const auto& [word, mass] : by_word) {
    const auto o = f.in.outcomes.find(word);
    REQUIRE(o.has_value());
    CHECK(p[*o] == doctest::Approx(mass).epsilon(1e-14));
  }
  const double he = st.p_switch[kCopySlot] * (st.p_copy[1] + st.p_copy[5]) +
                    st.p_switch[kQuestSlot] * st.p_quest[7];
  CHECK(p[*f.in.outcomes.find("he")] == doctest::Approx(he).epsilon(1e-14));
  double sum = 0.0;
  for (double x : p) sum += x;
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("copy distribution is the attention distribution") {
  Fixture f;
  QgModel<float> m(ModelDims::from(small_hyper(), f.vocabs), 5);
  const auto enc = m.encode(f.in);
  const std::vector<float> zero(6, 0.0f);
  const auto st = m.decode_step(m.input_embedding({}), zero, enc.initial_state, enc);
  CHECK(st.p_copy == st.alpha);
}

TEST_CASE("one-hot switch recovers each single-action model") {
  Fixture f;
  QgModel<double> m(ModelDims::from(small_hyper(), f.vocabs), 8);
  const auto enc = m.encode(f.in);
  const std::vector<double> zero(6, 0.0);
  auto st = m.decode_step(m.input_embedding({}), zero, enc.initial_state, enc);
  const auto& space = f.in.outcomes;

  st.p_switch = {1.0, 0.0, 0.0};
  auto p = mix(st, space);
  for (std::size_t k = 0; k < f.vocabs.quest.size(); ++k) CHECK(p[space.of_quest(k)] == st.p_quest[k]);
  for (std::size_t o = f.vocabs.quest.size(); o < space.size(); ++o) CHECK(p[o] == 0.0);

  st.p_switch = {0.0, 0.0, 1.0};
  p = mix(st, space);
  for (std::size_t k = 0; k < kNumTransforms; ++k) CHECK(p[space.of_trans(k)] == st.p_trans[k]);

  st.p_switch = {0.0, 1.0, 0.0};
  p = mix(st, space);
  CHECK(p[space.of_copy(0)] == st.p_copy[0]);
  CHECK(p[space.of_copy(1)] == st.p_copy[1] + st.p_copy[5]);
  CHECK(p[space.of_quest(4)] == 0.0);
}

TEST_CASE("encoder: single token, answer pooling and determinism") {
  Fixture f;
  QgModel<double> m(ModelDims::from(small_hyper(), f.vocabs), 11);
  const auto enc = m.encode(f.in);
  SUBCASE("answer embedding is the span mean") {
    ModelInput whole = f.in;
    whole.answer = {0, 6};
    const auto e2 = m.encode(whole);
    for (std::size_t c = 0; c < 6; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < 7; ++r) mean += e2.hidden_states.at(r, c) / 7.0;
      CHECK(e2.answer_embedding[c] == doctest::Approx(mean).epsilon(1e-14));
      CHECK(enc.answer_embedding[c] == enc.hidden_states.at(3, c));
    }
  }
  SUBCASE("single token is the sum of two one-step GRUs") {
    EncodedExample one;
    one.source_roots = {"b"};
    one.source_features = {{"PRP", "O", AnswerBio::B}};
    one.answer_span = {0, 0};
    const ModelInput in = make_model_input(one, f.vocabs);
    const auto e = m.encode(in);
    const auto& P = m.params();
    std::vector<double> x;
    for (const auto& [table, id] : {std::pair{"enc.word_emb", in.word_ids[0]},
                                    std::pair{"enc.bio_emb", in.bio_ids[0]},
                                    std::pair{"enc.ner_emb", in.ner_ids[0]},
                                    std::pair{"enc.pos_emb", in.pos_ids[0]}}) {
      const auto row = P.value(table).row(id);
      x.insert(x.end(), row.begin(), row.end());
    }
    const std::size_t H = 6;
    // From a zero state the reset gate has no effect: h = z * tanh(W_n x + b_n).
    auto one_step = [&](const std::string& dir, std::size_t j) {
      const auto& W = P.value("enc." + dir + ".W");
      const auto& b = P.value("enc." + dir + ".b");
      double az = b[j], an = b[2 * H + j];
      for (std::size_t k = 0; k < x.size(); ++k) {
        az += W.at(j, k) * x[k];
        an += W.at(2 * H + j, k) * x[k];
      }
      return sigmoid(az) * std::tanh(an);
    };
    for (std::size_t j = 0; j < H; ++j)
      CHECK(e.hidden_states.at(0, j) ==
            doctest::Approx(one_step("fwd", j) + one_step("bwd", j)).epsilon(1e-13));
  }
  SUBCASE("same seed, same bytes") {
    QgModel<double> m2(ModelDims::from(small_hyper(), f.vocabs), 11);
    const auto e2 = m2.encode(f.in);
    CHECK(e2.hidden_states == enc.hidden_states);
    CHECK(e2.answer_embedding == enc.answer_embedding);
    CHECK(e2.initial_state == enc.initial_state);
  }
}

TEST_CASE("model layout and reconstruction") {
  Fixture f;
  const auto dims = ModelDims::from(small_hyper(), f.vocabs);
  QgModel<float> m(dims, 2);
  CHECK(m.params().size() == QgModel<float>::layout(dims).size());
  QgModel<float> copy(dims, m.params().cast<float>());
  CHECK(copy.evaluate(f.in).loss == m.evaluate(f.in).loss);
  ParameterStore<float> broken = m.params().cast<float>();
  broken.value("att.v") = Tensor<float>({5});
  CHECK_THROWS(QgModel<float>(dims, std::move(broken)));
  CHECK(ModelDims::from_json(dims.to_json()).to_json() == dims.to_json());
}

TEST_CASE("full-loss gradient check") {
  Fixture f;
  QgModel<double> m(ModelDims::from(small_hyper(4), f.vocabs), 21);
  std::mt19937_64 rng(22);
  for (auto& [_, p] : m.params()) init_uniform(p.value, 0.5, rng);
  const auto r = grad_check(m.params(), [&](ParameterStore<double>&, bool g) {
    return g ? m.loss(f.in, nullptr, 1.0).loss : m.evaluate(f.in).loss;
  });
  for (const auto& e : r.entries) CHECK_MESSAGE(e.passed, e.name << " " << e.relative_error);
}

TEST_CASE("dot heads") {
  const std::size_t H = 4;
  std::mt19937_64 rng(30);
  Tensor<double> src({5, H}), types({9, H}), quest({7, H}), sw({3, H});
  for (auto* t : {&src, &types, &quest, &sw}) init_uniform(*t, 1.0, rng);
  const std::vector<double> sb = {0.1, -0.2, 0.3};

  SUBCASE("zero state gives uniform heads") {
    const std::vector<double> h(H, 0.0);
    const auto d = dot_heads<double>(h, src, types, quest, sw, sb);
    for (double p : d.p_copy) CHECK(p == doctest::Approx(1.0 / 5));
    for (double p : d.p_trans) CHECK(p == doctest::Approx(1.0 / 9));
    for (double p : d.p_quest) CHECK(p == doctest::Approx(1.0 / 7));
  }
  SUBCASE("copy mass concentrates on the only aligned state") {
    Tensor<double> ortho({3, H});
    ortho.at(0, 1) = 1.0;
    ortho.at(1, 2) = 1.0;
    ortho.at(2, 0) = 1.0;
    double prev = 0.0;
    for (double scale : {1.0, 5.0, 25.0}) {
      const std::vector<double> h = {scale, 0.0, 0.0, 0.0};
      const auto d = dot_heads<double>(h, ortho, types, quest, sw, sb);
      CHECK(d.p_copy[2] > prev);
      prev = d.p_copy[2];
    }
    CHECK(prev > 0.999);
  }
  SUBCASE("gradient check") {
    ParameterStore<double> s;
    s.add("h", Tensor<double>({H}));
    init_uniform(s.value("h"), 1.0, rng);
    s.add("src", src);
    s.add("types", types);
    s.add("quest", quest);
    s.add("sw", sw);
    s.add("sb", Tensor<double>::vector(sb));
    // A 5-position source with "he" twice plus the quest vocabulary of size 7.
    const std::vector<std::string> roots = {"x", "he", "y", "he", "z"};
    const Vocab qv = make_vocab({"what", "he", "who"});
    const OutcomeSpace space = OutcomeSpace::build(roots, qv);
    const std::size_t gold = *space.find("he");
    auto obj = [&](ParameterStore<double>& st, bool with_grad) {
      const auto d = dot_heads<double>(st.value("h").span(), st.value("src"), st.value("types"),
                                       st.value("quest"), st.value("sw"), st.value("sb").span());
      MixtureGrad<double> g;
      const double nll = mixture_nll(d, space, gold, with_grad ? &g : nullptr);
      if (with_grad) {
        const auto back = dot_heads_backward<double>(st.value("h").span(), st.value("src"),
                                                     st.value("types"), st.value("quest"),
                                                     st.value("sw"), d, g);
        st.grad("h").values() = back.d_hidden;
        st.grad("src") = back.d_source;
        st.grad("types") = back.d_types;
        st.grad("quest") = back.d_quest;
        st.grad("sw") = back.d_switch_w;
        st.grad("sb").values() = back.d_switch_b;
      }
      return nll;
    };
    const auto r = grad_check(s, obj);
    for (const auto& e : r.entries) CHECK_MESSAGE(e.passed, e.name << " " << e.relative_error);
  }
}

TEST_CASE("training and generation on the toy corpus") {
  const auto corpus = toy_corpus(12, 5);
  const Vocabs v = build_vocabs(corpus, morph());
  std::vector<ModelInput> data;
  for (const auto& r : corpus) data.push_back(make_model_input(encode_example(r, v.quest, morph()), v));
  HyperParams hp = small_hyper(16);
  hp.word_dim = 16;
  hp.dropout = 0.2;
  TrainOptions opts;
  opts.steps = 40;
  opts.batch_size = 4;
  opts.learning_rate = 0.01;
  opts.eval_every = 10;

  QgModel<float> a(ModelDims::from(hp, v), 42), b(ModelDims::from(hp, v), 42);
  const auto ra = train(a, std::span<const ModelInput>(data), std::span<const ModelInput>(), opts);
  const auto rb = train(b, std::span<const ModelInput>(data), std::span<const ModelInput>(), opts);
  REQUIRE(ra.curve.size() == 40);
  for (std::size_t i = 0; i < ra.curve.size(); ++i) CHECK(ra.curve[i].train_loss == rb.curve[i].train_loss);
  CHECK(ra.curve.back().train_loss < ra.curve.front().train_loss);

  for (const auto& in : data) {
    const auto g = generate_greedy(a, in, v.quest, morph());
    GenerationOptions one;
    one.beam = 1;
    const auto b1 = generate_beam(a, in, v.quest, morph(), one);
    CHECK(b1.actions == g.actions);
    CHECK(b1.question == g.question);
    CHECK(b1.log_prob == doctest::Approx(g.log_prob));
    const auto b12 = generate_beam(a, in, v.quest, morph(), {});
    CHECK(b12.score >= b1.score - 1e-9);
    CHECK(b12.question.find("##") == std::string::npos);
    CHECK(g.question.find("##") == std::string::npos);
    CHECK(trans_adjacency_ok(b12.actions));
  }
}

TEST_CASE("dev-loss model selection and divergence") {
  const auto corpus = toy_corpus(8, 9);
  const Vocabs v = build_vocabs(corpus, morph());
  std::vector<ModelInput> data;
  for (const auto& r : corpus) data.push_back(make_model_input(encode_example(r, v.quest, morph()), v));
  HyperParams hp = small_hyper(8);
  QgModel<double> m(ModelDims::from(hp, v), 1);
  TrainOptions opts;
  opts.steps = 12;
  opts.batch_size = 4;
  opts.eval_every = 4;
  const auto r = train(m, std::span<const ModelInput>(data).first(6),
                       std::span<const ModelInput>(data).subspan(6), opts);
  REQUIRE(r.dev.size() >= 3);
  double best = r.dev.front().dev_loss;
  for (const auto& d : r.dev) best = std::min(best, d.dev_loss);
  CHECK(r.best_dev_loss == best);
  CHECK(mean_loss(m, std::span<const ModelInput>(data).subspan(6)) == doctest::Approx(best));

  m.params().value("switch.b")[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train(m, std::span<const ModelInput>(data), std::span<const ModelInput>(), opts),
                  DivergenceError);
}

}  // TEST_SUITE
