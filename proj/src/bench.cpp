#include "morphoqg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "morphoqg/errors.hpp"
#include "morphoqg/mixture.hpp"
#include "morphoqg/model.hpp"

namespace morphoqg {

std::size_t OutputLayerSpec::support() const {
  return wt ? vocab + kNumTransforms + source_len : vocab;
}

OutputLayerSpec OutputLayerSpec::full_softmax(std::size_t vocab) {
  return {"softmax-" + std::to_string(vocab), false, vocab, 0};
}

OutputLayerSpec OutputLayerSpec::wt_heads(std::size_t quest_vocab, std::size_t source_len) {
  return {"wt-" + std::to_string(quest_vocab) + "+" + std::to_string(kNumTransforms) + "+" +
              std::to_string(source_len),
          true, quest_vocab, source_len};
}

nlohmann::json LatencyReport::to_json() const {
  return {{"name", name},     {"support", support},
          {"words", words},   {"mean_s", mean_s},
          {"p95_s", p95_s},   {"median_of_medians_s", median_of_medians_s}};
}

nlohmann::json BenchComparison::to_json() const {
  return {{"a", a.to_json()},
          {"b", b.to_json()},
          {"speedup", speedup},
          {"saving", saving},
          {"reference",
           {{"full_s", kReferenceFullSeconds},
            {"wt_s", kReferenceWtSeconds},
            {"saving", 1.0 - kReferenceWtSeconds / kReferenceFullSeconds},
            {"note", "GPU timings of the full model step; directional comparison only"}}}};
}

namespace {

using Clock = std::chrono::steady_clock;

Tensor<float> random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Tensor<float> t({rows, cols});
  init_uniform(t, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
  return t;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t idx =
      std::min(v.size() - 1, static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1);
  return v[idx];
}

// Output distributions over the layer's support for one hidden state.
class Layer {
 public:
  Layer(const OutputLayerSpec& spec, std::size_t hidden, std::mt19937_64& rng) : spec_(spec) {
    if (spec.wt) {
      if (spec.vocab < Vocab::kNumReserved || spec.source_len == 0)
        throw DataError("WT bench layer needs a question vocabulary and a source");
      source_ = random_matrix(spec.source_len, hidden, rng);
      types_ = random_matrix(kNumTransforms, hidden, rng);
      quest_ = random_matrix(spec.vocab, hidden, rng);
      switch_w_ = random_matrix(3, hidden, rng);
      switch_b_.assign(3, 0.0f);
      std::vector<std::string> tokens = {"<pad>", "<unk>", "<sos>", "<eos>"};
      for (std::size_t i = tokens.size(); i < spec.vocab; ++i) tokens.push_back("q" + std::to_string(i));
      std::vector<std::string> roots;
      for (std::size_t i = 0; i < spec.source_len; ++i) roots.push_back("s" + std::to_string(i));
      space_ = OutcomeSpace::build(roots, Vocab::from_tokens(tokens));
    } else {
      if (spec.vocab == 0) throw DataError("softmax bench layer needs a vocabulary");
      full_w_ = random_matrix(spec.vocab, hidden, rng);
      full_b_.assign(spec.vocab, 0.0f);
    }
  }

  std::vector<float> distribution(std::span<const float> h) const {
    if (spec_.wt) return mix(dot_heads<float>(h, source_, types_, quest_, switch_w_, switch_b_), space_);
    std::vector<float> logits(full_b_);
    ops::gemv<float>(full_w_.span(), full_w_.rows(), full_w_.cols(), h, logits);
    return ops::softmax<float>(logits);
  }

 private:
  OutputLayerSpec spec_;
  Tensor<float> source_, types_, quest_, switch_w_, full_w_;
  std::vector<float> switch_b_, full_b_;
  OutcomeSpace space_;
};

// One beam-search output step: distributions for every hypothesis, then
// top-`beam` selection over all (hypothesis, outcome) pairs.
void beam_step(const Layer& layer, const std::vector<std::vector<float>>& hidden,
               std::vector<double>& scores, std::vector<double>& flat) {
  const std::size_t beam = scores.size();
  flat.clear();
  for (std::size_t k = 0; k < beam; ++k) {
    const auto p = layer.distribution(hidden[k]);
    for (float v : p) flat.push_back(scores[k] + std::log(static_cast<double>(v)));
  }
  std::vector<std::size_t> idx(flat.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto keep = std::min(beam, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                    [&](std::size_t a, std::size_t b) { return flat[a] > flat[b]; });
  const double top = flat[idx[0]];
  for (std::size_t k = 0; k < beam; ++k) scores[k] = flat[idx[std::min(k, keep - 1)]] - top;
}

}  // namespace

LatencyReport bench_layer(const OutputLayerSpec& spec, const BenchOptions& opts) {
  if (opts.beam == 0 || opts.hidden == 0 || opts.repetitions == 0)
    throw DataError("bench needs positive beam, hidden size and repetitions");
  std::mt19937_64 rng(opts.seed);
  const Layer layer(spec, opts.hidden, rng);

  // A small pool of hidden states stands in for the decoder's.
  std::vector<std::vector<std::vector<float>>> pool(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& states : pool) {
    states.resize(opts.beam);
    for (auto& h : states) {
      h.resize(opts.hidden);
      for (float& v : h) v = static_cast<float>(normal(rng));
    }
  }

  LatencyReport r;
  r.name = spec.name;
  r.support = spec.support();
  std::vector<double> all, medians;
  std::vector<double> flat;
  for (std::size_t rep = 0; rep < opts.repetitions; ++rep) {
    std::vector<double> scores(opts.beam, 0.0), times;
    double trans_credit = 0.0;
    for (std::size_t w = 0; w < opts.warmup + opts.words; ++w) {
      std::size_t substeps = 1;
      if (spec.wt) {
        trans_credit += opts.trans_fraction;
        if (trans_credit >= 1.0) {
          trans_credit -= 1.0;
          substeps = 2;  // root then its transformation type
        }
      }
      const auto start = Clock::now();
      for (std::size_t s = 0; s < substeps; ++s) beam_step(layer, pool[(w + s) % pool.size()], scores, flat);
      const double dt = std::chrono::duration<double>(Clock::now() - start).count();
      if (w >= opts.warmup) times.push_back(dt);
    }
    medians.push_back(percentile(times, 0.5));
    all.insert(all.end(), times.begin(), times.end());
  }
  r.words = all.size();
  double sum = 0.0;
  for (double t : all) sum += t;
  r.mean_s = all.empty() ? 0.0 : sum / static_cast<double>(all.size());
  r.p95_s = percentile(all, 0.95);
  r.median_of_medians_s = percentile(medians, 0.5);
  return r;
}

BenchComparison bench_decode(const OutputLayerSpec& a, const OutputLayerSpec& b,
                             const BenchOptions& opts) {
  BenchComparison c;
  c.a = bench_layer(a, opts);
  c.b = bench_layer(b, opts);
  c.speedup = c.a.mean_s > 0.0 ? c.b.mean_s / c.a.mean_s : 0.0;
  c.saving = c.b.mean_s > 0.0 ? 1.0 - c.a.mean_s / c.b.mean_s : 0.0;
  return c;
}

}  // namespace morphoqg
