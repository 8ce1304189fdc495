#include "morphoqg/model.hpp"

#include <cmath>

#include "morphoqg/errors.hpp"

namespace morphoqg {

// ------------------------------------------------------------ hyperparams

void HyperParams::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw DataError(std::string("hyperparameter ") + name + " must be positive");
  };
  positive(word_dim, "word_dim");
  positive(answer_dim, "answer_dim");
  positive(ner_dim, "ner_dim");
  positive(pos_dim, "pos_dim");
  positive(hidden, "hidden");
  positive(batch_size, "batch_size");
  positive(cutoff, "cutoff");
  positive(beam, "beam");
  positive(max_length, "max_length");
  positive(maxout_pieces, "maxout_pieces");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw DataError("dropout must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw DataError("learning_rate must be positive");
  if (!(clip_norm >= 0.0)) throw DataError("clip_norm must be non-negative");
}

nlohmann::json HyperParams::to_json() const {
  return {{"word_dim", word_dim},       {"answer_dim", answer_dim},
          {"ner_dim", ner_dim},         {"pos_dim", pos_dim},
          {"hidden", hidden},           {"dropout", dropout},
          {"learning_rate", learning_rate}, {"batch_size", batch_size},
          {"cutoff", cutoff},           {"beam", beam},
          {"max_length", max_length},   {"maxout_pieces", maxout_pieces},
          {"clip_norm", clip_norm}};
}

HyperParams HyperParams::from_json(const nlohmann::json& j) {
  HyperParams hp;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("word_dim", hp.word_dim);
  get("answer_dim", hp.answer_dim);
  get("ner_dim", hp.ner_dim);
  get("pos_dim", hp.pos_dim);
  get("hidden", hp.hidden);
  get("dropout", hp.dropout);
  get("learning_rate", hp.learning_rate);
  get("batch_size", hp.batch_size);
  get("cutoff", hp.cutoff);
  get("beam", hp.beam);
  get("max_length", hp.max_length);
  get("maxout_pieces", hp.maxout_pieces);
  get("clip_norm", hp.clip_norm);
  hp.validate();
  return hp;
}

nlohmann::json ModelDims::to_json() const {
  return {{"hyper", hyper.to_json()},
          {"encoder_vocab", encoder_vocab},
          {"quest_vocab", quest_vocab},
          {"pos_vocab", pos_vocab},
          {"ner_vocab", ner_vocab}};
}

ModelDims ModelDims::from_json(const nlohmann::json& j) {
  ModelDims d;
  d.hyper = HyperParams::from_json(j.at("hyper"));
  j.at("encoder_vocab").get_to(d.encoder_vocab);
  j.at("quest_vocab").get_to(d.quest_vocab);
  j.at("pos_vocab").get_to(d.pos_vocab);
  j.at("ner_vocab").get_to(d.ner_vocab);
  return d;
}

ModelInput make_model_input(const EncodedExample& ex, const Vocabs& vocabs) {
  if (ex.source_roots.empty()) throw EmptyInputError("example has an empty source");
  if (ex.source_features.size() != ex.source_roots.size())
    throw LengthMismatch("source roots and features differ in length");
  if (ex.answer_span.first > ex.answer_span.last || ex.answer_span.last >= ex.source_roots.size())
    throw DataError("answer span outside the source");
  validate_actions(ex.target_actions, ex.source_roots.size(), vocabs.quest.size());

  ModelInput in;
  const std::size_t n = ex.source_roots.size();
  in.word_ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TokenFeatures& f = ex.source_features[i];
    in.word_ids.push_back(vocabs.encoder.id_or_unk(ex.source_roots[i]));
    in.bio_ids.push_back(static_cast<std::size_t>(f.answer_bio));
    in.ner_ids.push_back(vocabs.ner.id_or_unk(f.ner));
    in.pos_ids.push_back(vocabs.pos.id_or_unk(f.pos));
  }
  in.answer = ex.answer_span;
  in.source_roots = ex.source_roots;
  in.target = ex.target_actions;
  in.outcomes = OutcomeSpace::build(in.source_roots, vocabs.quest);
  return in;
}

// ------------------------------------------------------------ internals

namespace {

template <typename Tn>
struct Bound {
  Tn *word_emb, *bio_emb, *ner_emb, *pos_emb;
  Tn *fwd_W, *fwd_U, *fwd_b, *bwd_W, *bwd_U, *bwd_b;
  Tn *init_W, *init_b;
  Tn *quest_emb, *trans_emb;
  Tn *dec_W, *dec_U, *dec_b;
  Tn *att_Wh, *att_Ws, *att_b, *att_v;
  Tn *trans1_W, *trans1_b, *trans2_W, *trans2_b;
  Tn *quest1_W, *quest1_b, *quest2_W, *quest2_b;
  Tn *switch_W, *switch_b;
};

template <typename Tn, typename Get>
Bound<Tn> bind(Get get) {
  return {get("enc.word_emb"), get("enc.bio_emb"), get("enc.ner_emb"),   get("enc.pos_emb"),
          get("enc.fwd.W"),    get("enc.fwd.U"),   get("enc.fwd.b"),     get("enc.bwd.W"),
          get("enc.bwd.U"),    get("enc.bwd.b"),   get("dec.init.W"),    get("dec.init.b"),
          get("dec.quest_emb"), get("dec.trans_emb"), get("dec.gru.W"),  get("dec.gru.U"),
          get("dec.gru.b"),    get("att.W_h"),     get("att.W_s"),       get("att.b"),
          get("att.v"),        get("trans.l1.W"),  get("trans.l1.b"),    get("trans.l2.W"),
          get("trans.l2.b"),   get("quest.l1.W"),  get("quest.l1.b"),    get("quest.l2.W"),
          get("quest.l2.b"),   get("switch.W"),    get("switch.b")};
}

template <typename T>
Bound<const Tensor<T>> bind_values(const ParameterStore<T>& s) {
  return bind<const Tensor<T>>([&](const char* n) { return &s.value(n); });
}

template <typename T>
Bound<Tensor<T>> bind_grads(ParameterStore<T>& s) {
  return bind<Tensor<T>>([&](const char* n) { return &s.grad(n); });
}

template <typename T>
std::span<const T> cspan(const std::vector<T>& v) {
  return v;
}

// GRU with packed gates, rows ordered (update z, reset r, candidate n):
//   z = sig(W_z x + U_z h + b_z), r = sig(W_r x + U_r h + b_r),
//   n = tanh(W_n x + U_n (r * h) + b_n), h' = (1 - z) h + z n.
template <typename T>
struct GruCache {
  std::vector<T> x, h_prev, z, r, n, rh;
};

template <typename T>
std::vector<T> gru_forward(const Tensor<T>& W, const Tensor<T>& U, const Tensor<T>& b,
                           std::span<const T> x, std::span<const T> h_prev, GruCache<T>* cache) {
  const std::size_t H = h_prev.size(), in = x.size();
  require_shape(W.dims(), {3 * H, in}, "GRU input weights");
  std::vector<T> a(b.values());
  ops::gemv<T>(W.span(), 3 * H, in, x, a);
  std::vector<T> uh(2 * H, T(0));
  ops::gemv<T>(U.span().subspan(0, 2 * H * H), 2 * H, H, h_prev, uh);
  std::vector<T> z(H), r(H), rh(H), n(H, T(0)), h(H);
  for (std::size_t j = 0; j < H; ++j) {
    z[j] = ops::sigmoid(a[j] + uh[j]);
    r[j] = ops::sigmoid(a[H + j] + uh[H + j]);
    rh[j] = r[j] * h_prev[j];
  }
  ops::gemv<T>(U.span().subspan(2 * H * H, H * H), H, H, rh, n);
  for (std::size_t j = 0; j < H; ++j) {
    n[j] = std::tanh(a[2 * H + j] + n[j]);
    h[j] = (T(1) - z[j]) * h_prev[j] + z[j] * n[j];
  }
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev.assign(h_prev.begin(), h_prev.end());
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->n = std::move(n);
    cache->rh = std::move(rh);
  }
  return h;
}

template <typename T>
void gru_backward(const Tensor<T>& W, const Tensor<T>& U, Tensor<T>& gW, Tensor<T>& gU,
                  Tensor<T>& gb, const GruCache<T>& c, std::span<const T> dh, std::span<T> dx,
                  std::span<T> dh_prev) {
  const std::size_t H = c.h_prev.size(), in = c.x.size();
  std::vector<T> da(3 * H, T(0));
  std::vector<T> dz(H);
  for (std::size_t j = 0; j < H; ++j) {
    dz[j] = dh[j] * (c.n[j] - c.h_prev[j]);
    dh_prev[j] += dh[j] * (T(1) - c.z[j]);
    da[2 * H + j] = dh[j] * c.z[j] * (T(1) - c.n[j] * c.n[j]);
  }
  const auto da_n = std::span<const T>(da).subspan(2 * H, H);
  std::vector<T> drh(H, T(0));
  ops::gemv_t<T>(U.span().subspan(2 * H * H, H * H), H, H, da_n, drh);
  ops::ger<T>(gU.span().subspan(2 * H * H, H * H), H, H, da_n, c.rh);
  for (std::size_t j = 0; j < H; ++j) {
    dh_prev[j] += drh[j] * c.r[j];
    const T dr = drh[j] * c.h_prev[j];
    da[j] = dz[j] * c.z[j] * (T(1) - c.z[j]);
    da[H + j] = dr * c.r[j] * (T(1) - c.r[j]);
  }
  const auto da_zr = std::span<const T>(da).subspan(0, 2 * H);
  ops::ger<T>(gU.span().subspan(0, 2 * H * H), 2 * H, H, da_zr, c.h_prev);
  ops::gemv_t<T>(U.span().subspan(0, 2 * H * H), 2 * H, H, da_zr, dh_prev);
  ops::axpy<T>(T(1), da, gb.span());
  ops::ger<T>(gW.span(), 3 * H, in, da, c.x);
  ops::gemv_t<T>(W.span(), 3 * H, in, da, dx);
}

// Two-layer maxout head: softmax(W2 maxout(W1 x + b1) + b2).
template <typename T>
struct HeadCache {
  std::vector<T> in, m, probs;
  std::vector<std::size_t> argmax;
};

template <typename T>
std::vector<T> head_forward(const Tensor<T>& W1, const Tensor<T>& b1, const Tensor<T>& W2,
                            const Tensor<T>& b2, std::size_t pieces, std::vector<T> in,
                            HeadCache<T>* cache) {
  std::vector<T> z1(b1.values());
  ops::gemv<T>(W1.span(), W1.rows(), W1.cols(), in, z1);
  std::vector<std::size_t> argmax;
  std::vector<T> m = ops::maxout<T>(z1, pieces, argmax);
  std::vector<T> logits(b2.values());
  ops::gemv<T>(W2.span(), W2.rows(), W2.cols(), m, logits);
  std::vector<T> probs = ops::softmax<T>(logits);
  if (cache) {
    cache->in = std::move(in);
    cache->m = std::move(m);
    cache->argmax = std::move(argmax);
    cache->probs = probs;
  }
  return probs;
}

template <typename T>
void head_backward(const Tensor<T>& W1, const Tensor<T>& W2, Tensor<T>& gW1, Tensor<T>& gb1,
                   Tensor<T>& gW2, Tensor<T>& gb2, const HeadCache<T>& c, std::span<const T> dprobs,
                   std::span<T> din) {
  std::vector<T> dlogits(dprobs.size(), T(0));
  ops::softmax_backward<T>(c.probs, dprobs, dlogits);
  ops::axpy<T>(T(1), dlogits, gb2.span());
  ops::ger<T>(gW2.span(), W2.rows(), W2.cols(), dlogits, c.m);
  std::vector<T> dm(c.m.size(), T(0));
  ops::gemv_t<T>(W2.span(), W2.rows(), W2.cols(), dlogits, dm);
  std::vector<T> dz1(W1.rows(), T(0));
  ops::maxout_backward<T>(dm, c.argmax, dz1);
  ops::axpy<T>(T(1), dz1, gb1.span());
  ops::ger<T>(gW1.span(), W1.rows(), W1.cols(), dz1, c.in);
  ops::gemv_t<T>(W1.span(), W1.rows(), W1.cols(), dz1, din);
}

template <typename T>
struct StepCache {
  GruCache<T> gru;
  Tensor<T> act;  // n x H, tanh(W_h h_i + W_s s + b)
  std::vector<T> switch_in;
  HeadCache<T> trans, quest;
  DecoderStep<T> out;
};

template <typename T>
DecoderStep<T> step_forward(const Bound<const Tensor<T>>& p, std::size_t pieces,
                            std::span<const T> w, std::span<const T> c_prev,
                            std::span<const T> s_prev, const EncoderOutput<T>& enc,
                            StepCache<T>* cache) {
  const std::size_t H = s_prev.size();
  const std::size_t n = enc.hidden_states.rows();
  require_size(c_prev.size(), H, "decoder previous context");
  require_size(enc.hidden_states.cols(), H, "encoder states");
  require_size(w.size(), p.quest_emb->cols(), "decoder input embedding");

  DecoderStep<T> st;
  const std::vector<T> x = ops::concat<T>({w, c_prev});
  st.state = gru_forward(*p.dec_W, *p.dec_U, *p.dec_b, cspan(x), s_prev,
                         cache ? &cache->gru : nullptr);

  // Attention: e_i = v^T tanh(W_h h_i + W_s s_t + b).
  std::vector<T> q(p.att_b->values());
  ops::gemv<T>(p.att_Ws->span(), H, H, st.state, q);
  Tensor<T> act({n, H});
  std::vector<T> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto a = act.row(i);
    const auto k = enc.attention_keys.row(i);
    for (std::size_t j = 0; j < H; ++j) a[j] = std::tanh(k[j] + q[j]);
    e[i] = ops::dot<T>(a, p.att_v->span());
  }
  st.alpha = ops::softmax<T>(e);
  st.context.assign(H, T(0));
  for (std::size_t i = 0; i < n; ++i)
    ops::axpy<T>(st.alpha[i], enc.hidden_states.row(i), st.context);
  st.p_copy = st.alpha;

  st.p_trans = head_forward(*p.trans1_W, *p.trans1_b, *p.trans2_W, *p.trans2_b, pieces,
                            ops::concat<T>({cspan(st.state), cspan(st.context)}),
                            cache ? &cache->trans : nullptr);
  st.p_quest = head_forward(*p.quest1_W, *p.quest1_b, *p.quest2_W, *p.quest2_b, pieces,
                            ops::concat<T>({cspan(enc.answer_embedding), cspan(st.state),
                                            cspan(st.context)}),
                            cache ? &cache->quest : nullptr);

  std::vector<T> switch_in = ops::concat<T>({cspan(st.context), cspan(st.state), w});
  std::vector<T> switch_logits(p.switch_b->values());
  ops::gemv<T>(p.switch_W->span(), 3, switch_in.size(), switch_in, switch_logits);
  const std::vector<T> sw = ops::softmax<T>(switch_logits);
  st.p_switch = {sw[0], sw[1], sw[2]};

  if (cache) {
    cache->act = std::move(act);
    cache->switch_in = std::move(switch_in);
    cache->out = st;
  }
  return st;
}

template <typename T>
struct EncoderCache {
  std::vector<std::vector<T>> mask;
  std::vector<GruCache<T>> fwd, bwd;
  std::vector<T> final_backward;
};

template <typename T>
EncoderOutput<T> encode_forward(const Bound<const Tensor<T>>& p, const ModelInput& in,
                                 std::size_t H, double dropout, std::mt19937_64* rng,
                                 EncoderCache<T>* cache) {
  const std::size_t n = in.word_ids.size();
  if (n == 0) throw EmptyInputError("cannot encode an empty source");
  if (in.bio_ids.size() != n || in.ner_ids.size() != n || in.pos_ids.size() != n)
    throw LengthMismatch("feature id lists differ in length");

  std::vector<std::vector<T>> xs(n);
  if (cache) cache->mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<T> x = ops::concat<T>({ops::embedding(*p.word_emb, in.word_ids[i]),
                                       ops::embedding(*p.bio_emb, in.bio_ids[i]),
                                       ops::embedding(*p.ner_emb, in.ner_ids[i]),
                                       ops::embedding(*p.pos_emb, in.pos_ids[i])});
    if (rng && dropout > 0.0) {
      std::vector<T> mask;
      x = ops::dropout<T>(x, dropout, *rng, mask);
      if (cache) cache->mask[i] = std::move(mask);
    } else if (cache) {
      cache->mask[i].assign(x.size(), T(1));
    }
    xs[i] = std::move(x);
  }

  if (cache) {
    cache->fwd.resize(n);
    cache->bwd.resize(n);
  }
  EncoderOutput<T> out;
  out.hidden_states = Tensor<T>({n, H});
  std::vector<T> h(H, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    h = gru_forward(*p.fwd_W, *p.fwd_U, *p.fwd_b, cspan(xs[i]), cspan(h),
                    cache ? &cache->fwd[i] : nullptr);
    ops::axpy<T>(T(1), h, out.hidden_states.row(i));
  }
  h.assign(H, T(0));
  for (std::size_t i = n; i-- > 0;) {
    h = gru_forward(*p.bwd_W, *p.bwd_U, *p.bwd_b, cspan(xs[i]), cspan(h),
                    cache ? &cache->bwd[i] : nullptr);
    ops::axpy<T>(T(1), h, out.hidden_states.row(i));
  }
  // h is now the backward direction's state after reading the whole source.
  out.answer_embedding = ops::mean_rows(out.hidden_states, in.answer.first, in.answer.last);
  out.initial_state = p.init_b->values();
  ops::gemv<T>(p.init_W->span(), H, H, h, out.initial_state);
  ops::tanh_inplace<T>(out.initial_state);
  if (cache) cache->final_backward = h;

  out.attention_keys = Tensor<T>({n, H});
  for (std::size_t i = 0; i < n; ++i)
    ops::gemv<T>(p.att_Wh->span(), H, H, out.hidden_states.row(i), out.attention_keys.row(i));
  return out;
}

}  // namespace

// ------------------------------------------------------------ QgModel

template <typename T>
std::vector<std::pair<std::string, std::vector<std::size_t>>> QgModel<T>::layout(const ModelDims& d) {
  const HyperParams& hp = d.hyper;
  const std::size_t H = hp.hidden, E = hp.input_dim(), Dw = hp.word_dim, P = hp.maxout_pieces;
  return {
      {"att.W_h", {H, H}},
      {"att.W_s", {H, H}},
      {"att.b", {H}},
      {"att.v", {H}},
      {"dec.gru.U", {3 * H, H}},
      {"dec.gru.W", {3 * H, Dw + H}},
      {"dec.gru.b", {3 * H}},
      {"dec.init.W", {H, H}},
      {"dec.init.b", {H}},
      {"dec.quest_emb", {d.quest_vocab, Dw}},
      {"dec.trans_emb", {kNumTransforms, Dw}},
      {"enc.bio_emb", {3, hp.answer_dim}},
      {"enc.bwd.U", {3 * H, H}},
      {"enc.bwd.W", {3 * H, E}},
      {"enc.bwd.b", {3 * H}},
      {"enc.fwd.U", {3 * H, H}},
      {"enc.fwd.W", {3 * H, E}},
      {"enc.fwd.b", {3 * H}},
      {"enc.ner_emb", {d.ner_vocab, hp.ner_dim}},
      {"enc.pos_emb", {d.pos_vocab, hp.pos_dim}},
      {"enc.word_emb", {d.encoder_vocab, Dw}},
      {"quest.l1.W", {P * H, 3 * H}},
      {"quest.l1.b", {P * H}},
      {"quest.l2.W", {d.quest_vocab, H}},
      {"quest.l2.b", {d.quest_vocab}},
      {"switch.W", {3, 2 * H + Dw}},
      {"switch.b", {3}},
      {"trans.l1.W", {P * H, 2 * H}},
      {"trans.l1.b", {P * H}},
      {"trans.l2.W", {kNumTransforms, H}},
      {"trans.l2.b", {kNumTransforms}},
  };
}

template <typename T>
QgModel<T>::QgModel(const ModelDims& dims, std::uint64_t seed) : dims_(dims), params_(seed) {
  dims_.hyper.validate();
  if (dims_.quest_vocab < Vocab::kNumReserved || dims_.encoder_vocab < Vocab::kNumReserved)
    throw DataError("vocabularies must contain the reserved tokens");
  std::mt19937_64 rng(seed);
  for (const auto& [name, shape] : layout(dims_)) {
    Tensor<T>& v = params_.add(name, shape).value;
    const bool is_bias = name.ends_with(".b");
    const bool recurrent_or_embedding =
        name.ends_with("_emb") || name.starts_with("enc.fwd.") || name.starts_with("enc.bwd.") ||
        name.starts_with("dec.gru.");
    if (is_bias) continue;
    if (recurrent_or_embedding)
      init_uniform(v, 0.08, rng);
    else
      init_fan_uniform(v, rng);
  }
}

template <typename T>
QgModel<T>::QgModel(const ModelDims& dims, ParameterStore<T> params)
    : dims_(dims), params_(std::move(params)) {
  dims_.hyper.validate();
  const auto expected = layout(dims_);
  for (const auto& [name, shape] : expected) {
    if (!params_.contains(name)) throw DataError("checkpoint lacks parameter '" + name + "'");
    require_shape(params_.value(name).dims(), shape, name.c_str());
  }
  if (params_.size() != expected.size()) throw DataError("checkpoint has unexpected parameters");
}

template <typename T>
EncoderOutput<T> QgModel<T>::encode(const ModelInput& in) const {
  return encode_forward(bind_values(params_), in, dims_.hyper.hidden, 0.0, nullptr,
                        static_cast<EncoderCache<T>*>(nullptr));
}

template <typename T>
std::span<const T> QgModel<T>::input_embedding(const DecoderInput& input) const {
  switch (input.kind) {
    case DecoderInput::Kind::Start:
      return ops::embedding(params_.value("dec.quest_emb"), Vocab::kSos);
    case DecoderInput::Kind::Word:
      return ops::embedding(params_.value("enc.word_emb"), input.id);
    case DecoderInput::Kind::Quest:
      return ops::embedding(params_.value("dec.quest_emb"), input.id);
    case DecoderInput::Kind::Trans:
      return ops::embedding(params_.value("dec.trans_emb"), input.id);
  }
  throw Error("unknown decoder input kind");
}

template <typename T>
DecoderInput QgModel<T>::next_input(const TargetAction& action, const ModelInput& in) {
  switch (action.kind) {
    case TargetAction::Kind::Copy:
      if (action.index >= in.word_ids.size()) throw IndexOutOfVocab("copy index out of range");
      return {DecoderInput::Kind::Word, in.word_ids[action.index]};
    case TargetAction::Kind::Quest:
      return {DecoderInput::Kind::Quest, action.index};
    case TargetAction::Kind::Trans:
      return {DecoderInput::Kind::Trans, action.index};
  }
  throw Error("unknown action kind");
}

template <typename T>
DecoderStep<T> QgModel<T>::decode_step(std::span<const T> prev_word_embedding,
                                       std::span<const T> prev_context,
                                       std::span<const T> prev_state,
                                       const EncoderOutput<T>& enc) const {
  require_size(prev_state.size(), dims_.hyper.hidden, "decoder previous state");
  return step_forward(bind_values(params_), dims_.hyper.maxout_pieces, prev_word_embedding,
                      prev_context, prev_state, enc, static_cast<StepCache<T>*>(nullptr));
}

template <typename T>
typename QgModel<T>::LossResult QgModel<T>::evaluate(const ModelInput& in) const {
  const auto p = bind_values(params_);
  const std::size_t H = dims_.hyper.hidden;
  const EncoderOutput<T> enc = encode(in);
  LossResult r;
  std::vector<T> s = enc.initial_state, c(H, T(0));
  DecoderInput input;
  for (std::size_t t = 0; t <= in.target.size(); ++t) {
    const auto st = step_forward(p, dims_.hyper.maxout_pieces, input_embedding(input), cspan(c),
                                 cspan(s), enc, static_cast<StepCache<T>*>(nullptr));
    const TargetAction gold = t < in.target.size() ? in.target[t] : TargetAction::quest(Vocab::kEos);
    r.loss += static_cast<double>(mixture_nll(st, in.outcomes, in.outcomes.of_action(gold)));
    ++r.steps;
    s = st.state;
    c = st.context;
    if (t < in.target.size()) input = next_input(gold, in);
  }
  return r;
}

template <typename T>
typename QgModel<T>::LossResult QgModel<T>::loss(const ModelInput& in, std::mt19937_64* rng,
                                                 T grad_scale) {
  if (grad_scale == T(0) && rng == nullptr) return evaluate(in);
  const HyperParams& hp = dims_.hyper;
  const std::size_t H = hp.hidden, Dw = hp.word_dim;
  const auto p = bind_values(params_);
  const std::size_t n = in.word_ids.size();

  // Forward with caches.
  EncoderCache<T> ecache;
  const EncoderOutput<T> enc = encode_forward(p, in, H, hp.dropout, rng, &ecache);
  const std::size_t steps = in.target.size() + 1;
  std::vector<StepCache<T>> caches(steps);
  std::vector<DecoderInput> inputs(steps);
  std::vector<std::size_t> golds(steps);
  LossResult r;
  {
    std::vector<T> s = enc.initial_state, c(H, T(0));
    for (std::size_t t = 0; t < steps; ++t) {
      const TargetAction gold = t < in.target.size() ? in.target[t] : TargetAction::quest(Vocab::kEos);
      golds[t] = in.outcomes.of_action(gold);
      const auto st = step_forward(p, hp.maxout_pieces, input_embedding(inputs[t]), cspan(c),
                                   cspan(s), enc, &caches[t]);
      r.loss += static_cast<double>(mixture_nll(st, in.outcomes, golds[t]));
      s = st.state;
      c = st.context;
      if (t + 1 < steps) inputs[t + 1] = next_input(gold, in);
    }
    r.steps = steps;
  }
  if (grad_scale == T(0)) return r;

  // Backward through time.
  const auto g = bind_grads(params_);
  Tensor<T> dH({n, H});
  Tensor<T> dK({n, H});
  std::vector<T> dv_ans(H, T(0));
  std::vector<T> ds_carry(H, T(0)), dc_carry(H, T(0));
  MixtureGrad<T> mg;
  for (std::size_t t = steps; t-- > 0;) {
    const StepCache<T>& cc = caches[t];
    const DecoderStep<T>& st = cc.out;
    mixture_nll(st, in.outcomes, golds[t], &mg, grad_scale);
    std::vector<T> ds = ds_carry, dc = dc_carry, dw(Dw, T(0));

    // Switch.
    {
      const std::vector<T> sw(st.p_switch.begin(), st.p_switch.end());
      const std::vector<T> dsw(mg.d_switch.begin(), mg.d_switch.end());
      std::vector<T> dlogits(3, T(0));
      ops::softmax_backward<T>(sw, dsw, dlogits);
      ops::axpy<T>(T(1), dlogits, g.switch_b->span());
      ops::ger<T>(g.switch_W->span(), 3, cc.switch_in.size(), dlogits, cc.switch_in);
      std::vector<T> din(cc.switch_in.size(), T(0));
      ops::gemv_t<T>(p.switch_W->span(), 3, cc.switch_in.size(), dlogits, din);
      ops::concat_backward<T>(din, {std::span<T>(dc), std::span<T>(ds), std::span<T>(dw)});
    }
    // Question-word head over [v_ans; s; c].
    {
      std::vector<T> din(3 * H, T(0));
      head_backward(*p.quest1_W, *p.quest2_W, *g.quest1_W, *g.quest1_b, *g.quest2_W, *g.quest2_b,
                    cc.quest, cspan(mg.d_quest), std::span<T>(din));
      ops::concat_backward<T>(din, {std::span<T>(dv_ans), std::span<T>(ds), std::span<T>(dc)});
    }
    // Transformation-type head over [s; c].
    {
      std::vector<T> din(2 * H, T(0));
      head_backward(*p.trans1_W, *p.trans2_W, *g.trans1_W, *g.trans1_b, *g.trans2_W, *g.trans2_b,
                    cc.trans, cspan(mg.d_trans), std::span<T>(din));
      ops::concat_backward<T>(din, {std::span<T>(ds), std::span<T>(dc)});
    }
    // Context and attention; P_copy is alpha itself.
    std::vector<T> dalpha = mg.d_copy;
    for (std::size_t i = 0; i < n; ++i) {
      dalpha[i] += ops::dot<T>(dc, enc.hidden_states.row(i));
      ops::axpy<T>(st.alpha[i], dc, dH.row(i));
    }
    std::vector<T> de(n, T(0));
    ops::softmax_backward<T>(st.alpha, dalpha, de);
    std::vector<T> dq(H, T(0));
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = cc.act.row(i);
      ops::axpy<T>(de[i], a, g.att_v->span());
      auto dk = dK.row(i);
      for (std::size_t j = 0; j < H; ++j) {
        const T dpre = de[i] * (*p.att_v)[j] * (T(1) - a[j] * a[j]);
        dk[j] += dpre;
        dq[j] += dpre;
      }
    }
    ops::axpy<T>(T(1), dq, g.att_b->span());
    ops::ger<T>(g.att_Ws->span(), H, H, dq, st.state);
    ops::gemv_t<T>(p.att_Ws->span(), H, H, dq, ds);

    // Decoder GRU over [w; c_prev].
    std::vector<T> dx(Dw + H, T(0)), ds_prev(H, T(0));
    gru_backward(*p.dec_W, *p.dec_U, *g.dec_W, *g.dec_U, *g.dec_b, cc.gru, cspan(ds),
                 std::span<T>(dx), std::span<T>(ds_prev));
    std::vector<T> dc_prev(H, T(0));
    ops::concat_backward<T>(dx, {std::span<T>(dw), std::span<T>(dc_prev)});

    const DecoderInput& di = inputs[t];
    switch (di.kind) {
      case DecoderInput::Kind::Start:
        ops::embedding_backward<T>(dw, Vocab::kSos, *g.quest_emb);
        break;
      case DecoderInput::Kind::Word:
        ops::embedding_backward<T>(dw, di.id, *g.word_emb);
        break;
      case DecoderInput::Kind::Quest:
        ops::embedding_backward<T>(dw, di.id, *g.quest_emb);
        break;
      case DecoderInput::Kind::Trans:
        ops::embedding_backward<T>(dw, di.id, *g.trans_emb);
        break;
    }
    ds_carry = std::move(ds_prev);
    dc_carry = std::move(dc_prev);  // at t = 0 this is w.r.t. the constant zero context
  }

  // Attention keys K_i = W_h h_i.
  for (std::size_t i = 0; i < n; ++i) {
    ops::ger<T>(g.att_Wh->span(), H, H, dK.row(i), enc.hidden_states.row(i));
    ops::gemv_t<T>(p.att_Wh->span(), H, H, dK.row(i), dH.row(i));
  }
  ops::mean_rows_backward<T>(dv_ans, in.answer.first, in.answer.last, dH);

  // s_0 = tanh(W_init hb + b_init).
  std::vector<T> dpre(H, T(0));
  ops::tanh_backward<T>(enc.initial_state, ds_carry, dpre);
  ops::axpy<T>(T(1), dpre, g.init_b->span());
  ops::ger<T>(g.init_W->span(), H, H, dpre, ecache.final_backward);
  std::vector<T> dfinal(H, T(0));
  ops::gemv_t<T>(p.init_W->span(), H, H, dpre, dfinal);

  // Bidirectional encoder; both directions receive dH_i.
  const std::size_t E = hp.input_dim();
  std::vector<std::vector<T>> dxs(n, std::vector<T>(E, T(0)));
  std::vector<T> carry(H, T(0));
  for (std::size_t i = n; i-- > 0;) {
    std::vector<T> dh(dH.row(i).begin(), dH.row(i).end());
    ops::axpy<T>(T(1), carry, dh);
    std::vector<T> dprev(H, T(0));
    gru_backward(*p.fwd_W, *p.fwd_U, *g.fwd_W, *g.fwd_U, *g.fwd_b, ecache.fwd[i], cspan(dh),
                 std::span<T>(dxs[i]), std::span<T>(dprev));
    carry = std::move(dprev);
  }
  carry = dfinal;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<T> dh(dH.row(i).begin(), dH.row(i).end());
    ops::axpy<T>(T(1), carry, dh);
    std::vector<T> dprev(H, T(0));
    gru_backward(*p.bwd_W, *p.bwd_U, *g.bwd_W, *g.bwd_U, *g.bwd_b, ecache.bwd[i], cspan(dh),
                 std::span<T>(dxs[i]), std::span<T>(dprev));
    carry = std::move(dprev);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<T> de(E, T(0));
    ops::dropout_backward<T>(dxs[i], ecache.mask[i], de);
    const auto all = std::span<const T>(de);
    ops::embedding_backward<T>(all.subspan(0, hp.word_dim), in.word_ids[i], *g.word_emb);
    ops::embedding_backward<T>(all.subspan(hp.word_dim, hp.answer_dim), in.bio_ids[i], *g.bio_emb);
    ops::embedding_backward<T>(all.subspan(hp.word_dim + hp.answer_dim, hp.ner_dim), in.ner_ids[i],
                               *g.ner_emb);
    ops::embedding_backward<T>(all.subspan(hp.word_dim + hp.answer_dim + hp.ner_dim, hp.pos_dim),
                               in.pos_ids[i], *g.pos_emb);
  }
  return r;
}

template class QgModel<float>;
template class QgModel<double>;

// ------------------------------------------------------------ dot heads

namespace {

template <typename T>
std::vector<T> dot_softmax(const Tensor<T>& rows, std::span<const T> h) {
  std::vector<T> logits(rows.rows(), T(0));
  ops::gemv<T>(rows.span(), rows.rows(), rows.cols(), h, logits);
  return ops::softmax<T>(logits);
}

template <typename T>
void dot_softmax_backward(const Tensor<T>& rows, std::span<const T> h, std::span<const T> probs,
                          std::span<const T> dprobs, Tensor<T>& drows, std::span<T> dh) {
  std::vector<T> dlogits(probs.size(), T(0));
  ops::softmax_backward<T>(probs, dprobs, dlogits);
  ops::ger<T>(drows.span(), rows.rows(), rows.cols(), dlogits, h);
  ops::gemv_t<T>(rows.span(), rows.rows(), rows.cols(), dlogits, dh);
}

}  // namespace

template <typename T>
ActionDistributions<T> dot_heads(std::span<const T> h, const Tensor<T>& source_states,
                                 const Tensor<T>& type_embeddings,
                                 const Tensor<T>& quest_embeddings, const Tensor<T>& switch_w,
                                 std::span<const T> switch_b) {
  const std::size_t d = h.size();
  require_size(source_states.cols(), d, "dot_heads source states");
  require_size(type_embeddings.cols(), d, "dot_heads type embeddings");
  require_size(quest_embeddings.cols(), d, "dot_heads question-word embeddings");
  require_shape(switch_w.dims(), {3, d}, "dot_heads switch weights");
  require_size(switch_b.size(), 3, "dot_heads switch bias");
  ActionDistributions<T> out;
  out.p_copy = dot_softmax(source_states, h);
  out.p_trans = dot_softmax(type_embeddings, h);
  out.p_quest = dot_softmax(quest_embeddings, h);
  std::vector<T> logits(switch_b.begin(), switch_b.end());
  ops::gemv<T>(switch_w.span(), 3, d, h, logits);
  const auto sw = ops::softmax<T>(logits);
  out.p_switch = {sw[0], sw[1], sw[2]};
  return out;
}

template <typename T>
DotHeadsGrad<T> dot_heads_backward(std::span<const T> h, const Tensor<T>& source_states,
                                   const Tensor<T>& type_embeddings,
                                   const Tensor<T>& quest_embeddings, const Tensor<T>& switch_w,
                                   const ActionDistributions<T>& out, const MixtureGrad<T>& dout) {
  DotHeadsGrad<T> g;
  g.d_hidden.assign(h.size(), T(0));
  g.d_source = Tensor<T>(source_states.dims());
  g.d_types = Tensor<T>(type_embeddings.dims());
  g.d_quest = Tensor<T>(quest_embeddings.dims());
  g.d_switch_w = Tensor<T>(switch_w.dims());
  g.d_switch_b.assign(3, T(0));
  dot_softmax_backward<T>(source_states, h, out.p_copy, dout.d_copy, g.d_source, g.d_hidden);
  dot_softmax_backward<T>(type_embeddings, h, out.p_trans, dout.d_trans, g.d_types, g.d_hidden);
  dot_softmax_backward<T>(quest_embeddings, h, out.p_quest, dout.d_quest, g.d_quest, g.d_hidden);
  const std::vector<T> sw(out.p_switch.begin(), out.p_switch.end());
  const std::vector<T> dsw(dout.d_switch.begin(), dout.d_switch.end());
  ops::softmax_backward<T>(sw, dsw, g.d_switch_b);
  ops::ger<T>(g.d_switch_w.span(), 3, h.size(), g.d_switch_b, h);
  ops::gemv_t<T>(switch_w.span(), 3, h.size(), g.d_switch_b, g.d_hidden);
  return g;
}

#define MORPHOQG_DOT_HEADS(T)                                                                  \
  template ActionDistributions<T> dot_heads<T>(std::span<const T>, const Tensor<T>&,           \
                                               const Tensor<T>&, const Tensor<T>&,             \
                                               const Tensor<T>&, std::span<const T>);          \
  template DotHeadsGrad<T> dot_heads_backward<T>(std::span<const T>, const Tensor<T>&,         \
                                                 const Tensor<T>&, const Tensor<T>&,           \
                                                 const Tensor<T>&, const ActionDistributions<T>&, \
                                                 const MixtureGrad<T>&);
MORPHOQG_DOT_HEADS(float)
MORPHOQG_DOT_HEADS(double)
#undef MORPHOQG_DOT_HEADS

}  // namespace morphoqg
