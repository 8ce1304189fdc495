// morphoqg: command-line entry point.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "morphoqg/bench.hpp"
#include "morphoqg/checkpoint.hpp"
#include "morphoqg/codec.hpp"
#include "morphoqg/corpus_io.hpp"
#include "morphoqg/errors.hpp"
#include "morphoqg/generate.hpp"
#include "morphoqg/metrics.hpp"
#include "morphoqg/model.hpp"
#include "morphoqg/selftest.hpp"
#include "morphoqg/toy_corpus.hpp"
#include "morphoqg/train.hpp"
#include "morphoqg/vocab_analysis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace morphoqg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 42;
  unsigned jobs = 1;
  std::string morph_dir = MORPHOQG_DATA_DIR;
};

/// Relative paths are taken under $MORPHOQG_DATA when it is set.
fs::path resolve(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* env = std::getenv("MORPHOQG_DATA"); env && *env) return fs::path(env) / path;
  }
  return path;
}

Morphology load_morphology(const Globals& g) { return Morphology::load(resolve(g.morph_dir)); }

std::ofstream open_output(const std::string& p) {
  const fs::path path = resolve(p);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  return out;
}

std::vector<std::string> read_lines(const std::string& p) {
  std::ifstream in(resolve(p));
  if (!in) throw FileError("cannot open " + resolve(p).string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_json(const std::string& out_path, const json& j) {
  if (out_path.empty() || out_path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  auto out = open_output(out_path);
  out << j.dump(2) << '\n';
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads, in contiguous chunks.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(jobs);
  const std::size_t chunk = (n + jobs - 1) / jobs;
  for (unsigned t = 0; t < jobs; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<double> parse_split(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("--split: '" + item + "' is not a number");
    }
  }
  if (parts.size() != 3 || std::any_of(parts.begin(), parts.end(), [](double x) { return x < 0; }))
    throw UsageError("--split expects three non-negative fractions, e.g. 0.8,0.1,0.1");
  const double sum = parts[0] + parts[1] + parts[2];
  if (sum <= 0) throw UsageError("--split fractions sum to zero");
  for (double& x : parts) x /= sum;
  return parts;
}

fs::path with_suffix(const fs::path& out, const std::string& part) {
  fs::path p = out;
  const std::string ext = p.extension().string();
  p.replace_extension();
  return fs::path(p.string() + "." + part + ext);
}

// ------------------------------------------------------------- checkpoints

fs::path sidecar_path(const fs::path& ckpt) { return fs::path(ckpt.string() + ".json"); }

json vocab_hashes(const fs::path& dir) {
  json h;
  for (const char* name : {"encoder.txt", "quest.txt", "pos.txt", "ner.txt"})
    h[name] = file_fingerprint(dir / name);
  return h;
}

struct LoadedModel {
  json sidecar;
  Vocabs vocabs;
  QgModel<float> model;
};

LoadedModel load_model(const std::string& ckpt_arg, std::string vocab_arg) {
  const fs::path ckpt = resolve(ckpt_arg);
  std::ifstream side(sidecar_path(ckpt));
  if (!side) throw FileError("missing checkpoint sidecar " + sidecar_path(ckpt).string());
  json sidecar;
  try {
    sidecar = json::parse(side);
  } catch (const json::exception& e) {
    throw DataError(sidecar_path(ckpt).string() + ": " + e.what());
  }
  const fs::path vocab_dir = vocab_arg.empty() ? fs::path(sidecar.at("vocab_dir").get<std::string>())
                                               : resolve(vocab_arg);
  if (vocab_hashes(vocab_dir) != sidecar.at("vocab_hashes"))
    throw DataError("vocabulary files in " + vocab_dir.string() +
                    " do not match the ones the checkpoint was trained with");
  Vocabs vocabs = read_vocabs(vocab_dir);
  const ModelDims dims = ModelDims::from_json(sidecar.at("dims"));
  QgModel<float> model(dims, load_checkpoint(ckpt));
  return {std::move(sidecar), std::move(vocabs), std::move(model)};
}

// ------------------------------------------------------------- subcommands

struct AnalyzeVocabArgs {
  std::string vocab, corpus, squad, text, out;
  std::size_t top = 10000;
  bool top_given = false;
};

int cmd_analyze_vocab(const Globals& g, const AnalyzeVocabArgs& a) {
  const int sources = !a.vocab.empty() + !a.corpus.empty() + !a.squad.empty() + !a.text.empty();
  if (sources != 1) throw UsageError("analyze-vocab needs exactly one of --input, --corpus, --squad, --text");
  const Morphology morph = load_morphology(g);
  json report;
  if (!a.vocab.empty()) {
    report = analyze_external_vocab(resolve(a.vocab), morph, a.top_given ? a.top : 0).to_json();
    report["source"] = "vocab";
  } else {
    std::vector<std::string> words;
    if (!a.squad.empty()) {
      words = read_squad_words(resolve(a.squad));
    } else if (!a.corpus.empty()) {
      for (const RawExample& ex : read_corpus(resolve(a.corpus))) {
        for (const auto& t : ex.source) words.push_back(t.word);
        for (const auto& t : ex.question) words.push_back(t.word);
      }
    } else {
      std::ifstream in(resolve(a.text));
      if (!in) throw FileError("cannot open " + resolve(a.text).string());
      std::stringstream buf;
      buf << in.rdbuf();
      words = word_tokens(buf.str());
    }
    const auto ranked = frequency_ranked(words, a.top);
    report = count_inflected(ranked, morph).to_json();
    report["source"] = "frequency-ranked";
    report["top"] = a.top;
  }
  write_json(a.out, report);
  return kExitOk;
}

struct BuildVocabArgs {
  std::string input, out_dir;
  std::size_t encoder_cap = 30000, quest_cap = 1000;
};

int cmd_build_vocab(const Globals& g, const BuildVocabArgs& a) {
  const Morphology morph = load_morphology(g);
  const auto corpus = read_corpus(resolve(a.input));
  const Vocabs v = build_vocabs(corpus, morph, {a.encoder_cap, a.quest_cap});
  const fs::path dir = resolve(a.out_dir);
  fs::create_directories(dir);
  write_vocabs(dir, v);
  std::cerr << "wrote vocabularies to " << dir.string() << ": encoder " << v.encoder.size()
            << ", quest " << v.quest.size() << ", pos " << v.pos.size() << ", ner " << v.ner.size()
            << '\n';
  return kExitOk;
}

struct EncodeArgs {
  std::string input, out, vocab_dir, save_vocab, split;
  std::size_t cutoff = 128;
  bool truncate = false, skip_invalid = false;
};

int cmd_encode(const Globals& g, const EncodeArgs& a) {
  const Morphology morph = load_morphology(g);
  std::vector<RawExample> corpus = read_corpus(resolve(a.input));

  std::vector<std::pair<std::string, std::vector<RawExample>>> parts;
  if (a.split.empty()) {
    parts.emplace_back("", std::move(corpus));
  } else {
    const auto frac = parse_split(a.split);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(g.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train = static_cast<std::size_t>(frac[0] * static_cast<double>(corpus.size()));
    const std::size_t n_dev = static_cast<std::size_t>(frac[1] * static_cast<double>(corpus.size()));
    std::vector<RawExample> train, dev, test;
    for (std::size_t k = 0; k < order.size(); ++k) {
      auto& dst = k < n_train ? train : k < n_train + n_dev ? dev : test;
      dst.push_back(std::move(corpus[order[k]]));
    }
    parts.emplace_back("train", std::move(train));
    parts.emplace_back("dev", std::move(dev));
    parts.emplace_back("test", std::move(test));
  }

  // Vocabularies come from --vocab-dir, or from the (training part of the) input.
  const Vocabs vocabs = a.vocab_dir.empty() ? build_vocabs(parts.front().second, morph)
                                            : read_vocabs(resolve(a.vocab_dir));
  if (!a.save_vocab.empty()) {
    fs::create_directories(resolve(a.save_vocab));
    write_vocabs(resolve(a.save_vocab), vocabs);
  }

  const EncodeOptions opts{a.cutoff, a.truncate};
  std::size_t skipped = 0, written = 0;
  for (const auto& [name, examples] : parts) {
    std::vector<std::optional<EncodedExample>> encoded(examples.size());
    std::vector<std::string> errors(examples.size());
    parallel_for(examples.size(), g.jobs, [&](std::size_t i) {
      try {
        encoded[i] = encode_example(examples[i], vocabs.quest, morph, opts);
      } catch (const DataError& e) {
        errors[i] = e.what();
      }
    });
    std::vector<EncodedExample> ok;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (encoded[i]) {
        ok.push_back(std::move(*encoded[i]));
      } else if (a.skip_invalid) {
        ++skipped;
      } else {
        throw DataError("example " + std::to_string(i + 1) + (name.empty() ? "" : " of " + name) +
                        ": " + errors[i]);
      }
    }
    const fs::path out = name.empty() ? resolve(a.out) : with_suffix(resolve(a.out), name);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream os(out);
    if (!os) throw FileError("cannot write " + out.string());
    write_encoded(os, ok, vocabs.quest);
    written += ok.size();
  }
  std::cerr << "encoded " << written << " examples";
  if (skipped) std::cerr << ", skipped " << skipped << " invalid";
  std::cerr << '\n';
  return kExitOk;
}

struct DecodeArgs {
  std::string input, vocab_dir, out;
};

int cmd_decode(const Globals& g, const DecodeArgs& a) {
  const Morphology morph = load_morphology(g);
  const Vocab quest = read_vocab(resolve(a.vocab_dir) / "quest.txt");
  std::ostringstream text;
  for (const EncodedExample& ex : read_encoded(resolve(a.input))) {
    validate_actions(ex.target_actions, ex.source_roots.size(), quest.size());
    text << realize(ex.target_actions, ex.source_roots, quest, morph) << '\n';
  }
  if (a.out.empty() || a.out == "-")
    std::cout << text.str();
  else
    open_output(a.out) << text.str();
  return kExitOk;
}

struct TrainArgs {
  std::string train, dev, vocab_dir, out, loss_curve;
  std::size_t steps = 1000, eval_every = 100;
  HyperParams hyper;
  std::size_t feature_dim = 32;
};

int cmd_train(const Globals& g, TrainArgs a) {
  a.hyper.answer_dim = a.hyper.ner_dim = a.hyper.pos_dim = a.feature_dim;
  a.hyper.validate();
  const fs::path vocab_dir = fs::absolute(resolve(a.vocab_dir));
  const Vocabs vocabs = read_vocabs(vocab_dir);

  auto load = [&](const std::string& path) {
    std::vector<ModelInput> out;
    if (path.empty()) return out;
    for (const EncodedExample& ex : read_encoded(resolve(path))) out.push_back(make_model_input(ex, vocabs));
    return out;
  };
  const auto train_set = load(a.train);
  const auto dev_set = load(a.dev);

  QgModel<float> model(ModelDims::from(a.hyper, vocabs), g.seed);
  TrainOptions opts;
  opts.steps = a.steps;
  opts.batch_size = a.hyper.batch_size;
  opts.learning_rate = a.hyper.learning_rate;
  opts.clip_norm = a.hyper.clip_norm;
  opts.eval_every = a.eval_every;
  opts.seed = g.seed;

  std::ofstream curve;
  if (!a.loss_curve.empty()) curve = open_output(a.loss_curve);
  const TrainResult result = train<float>(model, train_set, dev_set, opts,
                                          [&](const StepRecord& r, const DevRecord* d) {
    json line = {{"step", r.step}, {"train_loss", r.train_loss}, {"grad_norm", r.grad_norm}};
    if (d) {
      line["dev_loss"] = d->dev_loss;
      std::cerr << "step " << r.step << " train " << r.train_loss << " dev " << d->dev_loss << '\n';
    }
    if (curve.is_open()) curve << line.dump() << '\n';
  });

  const fs::path out = resolve(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_checkpoint(out, model.params());
  json sidecar = {{"format", "MQG1"},
                  {"dims", model.dims().to_json()},
                  {"seed", g.seed},
                  {"vocab_dir", vocab_dir.string()},
                  {"vocab_hashes", vocab_hashes(vocab_dir)},
                  {"train",
                   {{"steps", result.curve.size()},
                    {"examples", train_set.size()},
                    {"dev_examples", dev_set.size()},
                    {"best_step", result.best_step},
                    {"final_train_loss", result.curve.empty() ? 0.0 : result.curve.back().train_loss}}}};
  if (!dev_set.empty()) sidecar["train"]["best_dev_loss"] = result.best_dev_loss;
  std::ofstream side(sidecar_path(out));
  if (!side) throw FileError("cannot write " + sidecar_path(out).string());
  side << sidecar.dump(2) << '\n';
  std::cerr << "saved " << out.string() << " (best step " << result.best_step << ")\n";
  return kExitOk;
}

struct GenerateArgs {
  std::string model, vocab_dir, input, out, timing;
  std::size_t beam = 12, max_length = 32, cutoff = 128;
  bool greedy = false;
};

int cmd_generate(const Globals& g, const GenerateArgs& a) {
  const Morphology morph = load_morphology(g);
  LoadedModel lm = load_model(a.model, a.vocab_dir);
  const auto corpus = read_corpus(resolve(a.input));

  std::vector<ModelInput> inputs;
  for (const RawExample& raw : corpus) {
    EncodedSource src = encode_source(raw.source, morph, {a.cutoff, true});
    EncodedExample ex;
    ex.source_roots = std::move(src.roots);
    ex.source_features = std::move(src.features);
    ex.answer_span = src.answer;
    inputs.push_back(make_model_input(ex, lm.vocabs));
  }

  std::vector<GenerationResult> results(inputs.size());
  parallel_for(inputs.size(), g.jobs, [&](std::size_t i) {
    results[i] = a.greedy ? generate_greedy(lm.model, inputs[i], lm.vocabs.quest, morph, a.max_length)
                          : generate_beam(lm.model, inputs[i], lm.vocabs.quest, morph,
                                          {a.beam, a.max_length});
  });

  std::ostringstream text;
  std::vector<std::string> candidates, references;
  double seconds = 0.0;
  std::size_t words = 0;
  std::vector<double> per_word;
  for (std::size_t i = 0; i < results.size(); ++i) {
    text << results[i].question << '\n';
    seconds += results[i].seconds;
    words += surface_word_count(results[i].actions) + 1;
    per_word.push_back(results[i].seconds_per_word);
    if (!corpus[i].question.empty()) {
      candidates.push_back(results[i].question);
      references.push_back(join_lower(corpus[i].question));
    }
  }
  if (a.out.empty() || a.out == "-")
    std::cout << text.str();
  else
    open_output(a.out) << text.str();

  json timing = {{"examples", results.size()},
                 {"beam", a.greedy ? 1 : a.beam},
                 {"total_seconds", seconds},
                 {"decoded_words", words},
                 {"seconds_per_word", words ? seconds / static_cast<double>(words) : 0.0}};
  if (!candidates.empty() && candidates.size() == results.size()) {
    timing["bleu"] = bleu(candidates, references).to_json();
    timing["rouge_l"] = rouge_l_corpus(candidates, references);
  }
  if (!a.timing.empty()) write_json(a.timing, timing);
  return kExitOk;
}

struct ScoreArgs {
  std::string cand, ref, out;
};

int cmd_score(const Globals&, const ScoreArgs& a) {
  const auto cand = read_lines(a.cand);
  const auto ref = read_lines(a.ref);
  const BleuScores b = bleu(cand, ref);
  json report = b.to_json();
  report["rouge_l"] = rouge_l_corpus(cand, ref);
  report["examples"] = cand.size();
  write_json(a.out, report);
  return kExitOk;
}

struct BenchArgs {
  std::size_t vocab_size = 0, quest_vocab = 1000, full_vocab = 30000, source_len = 128;
  bool wt = false;
  BenchOptions opts;
  std::string out;
};

int cmd_bench(const Globals& g, BenchArgs a) {
  a.opts.seed = g.seed;
  json report;
  if (a.vocab_size > 0) {
    const OutputLayerSpec spec = a.wt ? OutputLayerSpec::wt_heads(a.vocab_size, a.source_len)
                                      : OutputLayerSpec::full_softmax(a.vocab_size);
    report = bench_layer(spec, a.opts).to_json();
  } else {
    report = bench_decode(OutputLayerSpec::wt_heads(a.quest_vocab, a.source_len),
                          OutputLayerSpec::full_softmax(a.full_vocab), a.opts)
                 .to_json();
  }
  report["hidden"] = a.opts.hidden;
  report["beam"] = a.opts.beam;
  write_json(a.out, report);
  return kExitOk;
}

struct SelftestArgs {
  std::string toy_out;
  std::size_t toy_size = 64;
};

int cmd_selftest(const Globals& g, const SelftestArgs& a) {
  if (!a.toy_out.empty()) {
    const fs::path out = resolve(a.toy_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_corpus(out, toy_corpus(a.toy_size, g.seed));
    std::cerr << "wrote " << a.toy_size << " toy examples to " << out.string() << '\n';
    return kExitOk;
  }
  const SelftestReport r = run_selftest(load_morphology(g), g.seed, std::cout);
  std::cout << (r.passed() ? "selftest passed" : "selftest FAILED") << '\n';
  return r.passed() ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morphology-aware question generation: root/type rewriting, training, decoding, scoring"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; [subcommand] sections, flags override it");
  Globals g;
  app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads for per-example work")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--morph-dir", g.morph_dir, "Directory with irregular.tsv, doubling.txt, roots.tsv")
      ->capture_default_str();

  AnalyzeVocabArgs av;
  auto* sc_av = app.add_subcommand("analyze-vocab", "Count inflected forms in a vocabulary or corpus");
  sc_av->add_option("--input,--vocab", av.vocab, "Vocabulary file, one token per line (WordPiece style)");
  sc_av->add_option("--corpus", av.corpus, "JSONL corpus; words are frequency ranked");
  sc_av->add_option("--squad", av.squad, "SQuAD-format JSON; words are frequency ranked");
  sc_av->add_option("--text", av.text, "Plain text; words are frequency ranked");
  auto* top_opt = sc_av->add_option("--top", av.top, "Words to analyze (corpus: most frequent; --input: first lines)")
                      ->capture_default_str();
  sc_av->add_option("--out", av.out, "JSON report path (default stdout)");

  EncodeArgs en;
  auto* sc_en = app.add_subcommand("encode", "Rewrite a JSONL corpus into action sequences");
  sc_en->add_option("--input", en.input, "JSONL corpus")->required();
  sc_en->add_option("--out", en.out, "Encoded JSONL output")->required();
  sc_en->add_option("--vocab-dir", en.vocab_dir, "Vocabularies (default: built from the input)");
  sc_en->add_option("--save-vocab", en.save_vocab, "Write the vocabularies used here");
  sc_en->add_option("--cutoff", en.cutoff, "Maximum source length")->capture_default_str();
  sc_en->add_flag("--truncate", en.truncate, "Truncate long sources instead of failing");
  sc_en->add_flag("--skip-invalid", en.skip_invalid, "Skip examples that fail to encode");
  sc_en->add_option("--split", en.split,
                    "Seeded train,dev,test fractions; writes OUT with .train/.dev/.test before the extension");

  DecodeArgs de;
  auto* sc_de = app.add_subcommand("decode", "Realize encoded action sequences as text");
  sc_de->add_option("--input", de.input, "Encoded JSONL")->required();
  sc_de->add_option("--vocab-dir", de.vocab_dir, "Vocabulary directory")->required();
  sc_de->add_option("--out", de.out, "Output text (default stdout)");

  BuildVocabArgs bv;
  auto* sc_bv = app.add_subcommand("build-vocab", "Build encoder/question/POS/NER vocabularies");
  sc_bv->add_option("--input", bv.input, "JSONL corpus")->required();
  sc_bv->add_option("--out-dir", bv.out_dir, "Output directory")->required();
  sc_bv->add_option("--encoder-cap", bv.encoder_cap, "Encoder vocabulary size")->capture_default_str();
  sc_bv->add_option("--quest-cap", bv.quest_cap, "Question-word vocabulary size")->capture_default_str();

  TrainArgs tr;
  auto* sc_tr = app.add_subcommand("train", "Train a model with teacher forcing");
  sc_tr->add_option("--train", tr.train, "Encoded training JSONL")->required();
  sc_tr->add_option("--dev", tr.dev, "Encoded dev JSONL for model selection");
  sc_tr->add_option("--vocab-dir", tr.vocab_dir, "Vocabulary directory")->required();
  sc_tr->add_option("--out", tr.out, "Checkpoint path (sidecar written to OUT.json)")->required();
  sc_tr->add_option("--loss-curve", tr.loss_curve, "JSONL loss curve output");
  sc_tr->add_option("--steps", tr.steps, "Optimizer steps")->capture_default_str();
  sc_tr->add_option("--eval-every", tr.eval_every, "Dev evaluation period")->capture_default_str();
  sc_tr->add_option("--batch", tr.hyper.batch_size, "Batch size")->capture_default_str();
  sc_tr->add_option("--lr", tr.hyper.learning_rate, "Adam learning rate")->capture_default_str();
  sc_tr->add_option("--hidden", tr.hyper.hidden, "Hidden size")->capture_default_str();
  sc_tr->add_option("--word-dim", tr.hyper.word_dim, "Word embedding size")->capture_default_str();
  sc_tr->add_option("--feature-dim", tr.feature_dim, "BIO/NER/POS embedding size")->capture_default_str();
  sc_tr->add_option("--dropout", tr.hyper.dropout, "Encoder input dropout")->capture_default_str();
  sc_tr->add_option("--clip", tr.hyper.clip_norm, "Global gradient-norm clip")->capture_default_str();

  GenerateArgs ge;
  auto* sc_ge = app.add_subcommand("generate", "Generate questions with beam search");
  sc_ge->add_option("--model", ge.model, "Checkpoint path")->required();
  sc_ge->add_option("--vocab-dir", ge.vocab_dir, "Vocabulary directory (default: from the sidecar)");
  sc_ge->add_option("--input", ge.input, "JSONL corpus (questions optional)")->required();
  sc_ge->add_option("--out", ge.out, "Questions output (default stdout)");
  sc_ge->add_option("--timing", ge.timing, "Timing/score JSON output");
  sc_ge->add_option("--beam", ge.beam, "Beam width")->capture_default_str()->check(CLI::PositiveNumber);
  sc_ge->add_option("--max-length", ge.max_length, "Maximum decoder steps")->capture_default_str();
  sc_ge->add_option("--cutoff", ge.cutoff, "Sources are truncated to this length")->capture_default_str();
  sc_ge->add_flag("--greedy", ge.greedy, "Greedy decoding instead of beam search");

  ScoreArgs sc;
  auto* sc_sc = app.add_subcommand("score", "BLEU-1..4 and ROUGE-L of candidates against references");
  sc_sc->add_option("--cand", sc.cand, "Candidate questions, one per line")->required();
  sc_sc->add_option("--ref", sc.ref, "Reference questions, one per line")->required();
  sc_sc->add_option("--out", sc.out, "JSON report path (default stdout)");

  BenchArgs be;
  auto* sc_be = app.add_subcommand("bench", "Per-word output-layer decode latency");
  sc_be->add_option("--vocab-size", be.vocab_size,
                    "Benchmark a single layer of this size (question vocab with --wt)");
  sc_be->add_flag("--wt", be.wt, "Single-layer mode: WT heads instead of a full softmax");
  sc_be->add_option("--quest-vocab", be.quest_vocab, "Comparison: WT question vocabulary")->capture_default_str();
  sc_be->add_option("--full-vocab", be.full_vocab, "Comparison: full softmax size")->capture_default_str();
  sc_be->add_option("--source-len", be.source_len, "Copy support of the WT heads")->capture_default_str();
  sc_be->add_option("--hidden", be.opts.hidden, "Hidden size")->capture_default_str();
  sc_be->add_option("--beam", be.opts.beam, "Beam width")->capture_default_str();
  sc_be->add_option("--words", be.opts.words, "Timed words per repetition")->capture_default_str();
  sc_be->add_option("--warmup", be.opts.warmup, "Untimed warmup words")->capture_default_str();
  sc_be->add_option("--repetitions", be.opts.repetitions, "Repetitions")->capture_default_str();
  sc_be->add_option("--trans-fraction", be.opts.trans_fraction,
                    "Share of WT words needing a type step")->capture_default_str();
  sc_be->add_option("--out", be.out, "JSON report path (default stdout)");

  SelftestArgs st;
  auto* sc_st = app.add_subcommand("selftest", "Gradient check, codec round trip and property checks");
  sc_st->add_option("--toy-out", st.toy_out, "Instead, write a toy JSONL corpus here");
  sc_st->add_option("--toy-size", st.toy_size, "Toy corpus size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sc_av->parsed()) {
      av.top_given = top_opt->count() > 0;
      return cmd_analyze_vocab(g, av);
    }
    if (sc_en->parsed()) return cmd_encode(g, en);
    if (sc_de->parsed()) return cmd_decode(g, de);
    if (sc_bv->parsed()) return cmd_build_vocab(g, bv);
    if (sc_tr->parsed()) return cmd_train(g, tr);
    if (sc_ge->parsed()) return cmd_generate(g, ge);
    if (sc_sc->parsed()) return cmd_score(g, sc);
    if (sc_be->parsed()) return cmd_bench(g, be);
    if (sc_st->parsed()) return cmd_selftest(g, st);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
