#pragma once

// Feature-embedding BiGRU encoder, attention GRU decoder with copy /
// transformation-type / question-word heads and a three-way switch, trained
// on the marginal likelihood of the mixed output distribution. Backward
// passes are written out by hand (no autodiff graph).

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphoqg/codec.hpp"
#include "morphoqg/mixture.hpp"
#include "morphoqg/params.hpp"

namespace morphoqg {

struct HyperParams {
  std::size_t word_dim = 300;    // d_w
  std::size_t answer_dim = 32;   // d_a, BIO feature embedding
  std::size_t ner_dim = 32;      // d_n
  std::size_t pos_dim = 32;      // d_p
  std::size_t hidden = 512;      // d_h; also the answer-embedding width
  double dropout = 0.20;         // encoder input only
  double learning_rate = 0.002;
  std::size_t batch_size = 32;
  std::size_t cutoff = 128;
  std::size_t beam = 12;
  std::size_t max_length = 32;
  std::size_t maxout_pieces = 2;
  double clip_norm = 5.0;

  std::size_t input_dim() const { return word_dim + answer_dim + ner_dim + pos_dim; }
  void validate() const;

  nlohmann::json to_json() const;
  static HyperParams from_json(const nlohmann::json& j);
};

/// Everything needed to size the parameter tensors.
struct ModelDims {
  HyperParams hyper;
  std::size_t encoder_vocab = 0;
  std::size_t quest_vocab = 0;
  std::size_t pos_vocab = 0;
  std::size_t ner_vocab = 0;

  static ModelDims from(const HyperParams& hp, const Vocabs& v) {
    return {hp, v.encoder.size(), v.quest.size(), v.pos.size(), v.ner.size()};
  }
  nlohmann::json to_json() const;
  static ModelDims from_json(const nlohmann::json& j);
};

/// An encoded example resolved to integer ids.
struct ModelInput {
  std::vector<std::size_t> word_ids;  // encoder vocab, UNK for unknown roots
  std::vector<std::size_t> bio_ids;   // 0 = B, 1 = I, 2 = O
  std::vector<std::size_t> ner_ids;
  std::vector<std::size_t> pos_ids;
  AnswerSpan answer;
  std::vector<std::string> source_roots;
  std::vector<TargetAction> target;  // without the closing EOS
  OutcomeSpace outcomes;
};

ModelInput make_model_input(const EncodedExample& ex, const Vocabs& vocabs);

template <typename T>
struct EncoderOutput {
  Tensor<T> hidden_states;       // n x d_h, forward + backward
  std::vector<T> answer_embedding;
  std::vector<T> initial_state;  // s_0
  Tensor<T> attention_keys;      // n x d_h, W_h h_i
};

template <typename T>
struct DecoderStep : ActionDistributions<T> {
  std::vector<T> state;    // s_t
  std::vector<T> context;  // c_t
  std::vector<T> alpha;    // attention, identical to p_copy
};

/// What the decoder is fed after emitting an action.
struct DecoderInput {
  enum class Kind : std::uint8_t { Start, Word, Quest, Trans };
  Kind kind = Kind::Start;
  std::size_t id = 0;  // encoder id (Word), quest id (Quest) or type id (Trans)
};

template <typename T>
class QgModel {
 public:
  /// Freshly initialized parameters.
  QgModel(const ModelDims& dims, std::uint64_t seed);
  /// Wraps existing parameters, checking every expected tensor and shape.
  QgModel(const ModelDims& dims, ParameterStore<T> params);

  const ModelDims& dims() const { return dims_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }

  /// Names and shapes of every parameter for the given dims.
  static std::vector<std::pair<std::string, std::vector<std::size_t>>> layout(const ModelDims& dims);

  EncoderOutput<T> encode(const ModelInput& in) const;

  std::span<const T> input_embedding(const DecoderInput& input) const;
  /// Decoder input that follows `action` for a source with the given ids.
  static DecoderInput next_input(const TargetAction& action, const ModelInput& in);

  DecoderStep<T> decode_step(std::span<const T> prev_word_embedding, std::span<const T> prev_context,
                             std::span<const T> prev_state, const EncoderOutput<T>& enc) const;

  struct LossResult {
    double loss = 0.0;  // summed over steps
    std::size_t steps = 0;
  };

  /// Teacher-forced -log likelihood of the target followed by EOS. With
  /// `grad_scale` non-zero, adds grad_scale * dLoss/dtheta into the
  /// parameters' gradient buffers. Dropout is applied only when `rng` is set.
  LossResult loss(const ModelInput& in, std::mt19937_64* rng = nullptr, T grad_scale = T(0));

  /// Const forward-only loss (no dropout).
  LossResult evaluate(const ModelInput& in) const;

 private:
  ModelDims dims_;
  ParameterStore<T> params_;
};

extern template class QgModel<float>;
extern template class QgModel<double>;

// ------------------------------------------------------------ dot heads

template <typename T>
struct DotHeadsGrad {
  std::vector<T> d_hidden;
  Tensor<T> d_source, d_types, d_quest, d_switch_w;
  std::vector<T> d_switch_b;
};

/// Dot-product output layer over any hidden state h: copy over source
/// states, types and question words by inner product with h, and a
/// one-layer switch softmax(W h + b).
template <typename T>
ActionDistributions<T> dot_heads(std::span<const T> h, const Tensor<T>& source_states,
                                 const Tensor<T>& type_embeddings,
                                 const Tensor<T>& quest_embeddings, const Tensor<T>& switch_w,
                                 std::span<const T> switch_b);

/// Backward of dot_heads given gradients w.r.t. its four outputs.
template <typename T>
DotHeadsGrad<T> dot_heads_backward(std::span<const T> h, const Tensor<T>& source_states,
                                   const Tensor<T>& type_embeddings,
                                   const Tensor<T>& quest_embeddings, const Tensor<T>& switch_w,
                                   const ActionDistributions<T>& out, const MixtureGrad<T>& dout);

}  // namespace morphoqg
