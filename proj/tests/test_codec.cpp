#include <doctest.h>

#include <random>
#include <sstream>

#include "morphoqg/corpus_io.hpp"
#include "morphoqg/errors.hpp"
#include "morphoqg/selftest.hpp"
#include "morphoqg/toy_corpus.hpp"
#include "support.hpp"

using namespace morphoqg;
using morphoqg::test::morph;

namespace {

TaggedToken tok(std::string w, std::string pos, AnswerBio bio = AnswerBio::O) {
  return {std::move(w), std::move(pos), "O", bio};
}

std::vector<TaggedToken> he_succeeded_kennedy() {
  return {tok("He", "PRP"), tok("succeeded", "VBD"), tok("Kennedy", "NNP", AnswerBio::B)};
}

Vocab quest_vocab(std::vector<std::string> words) {
  std::vector<std::string> t = {"<pad>", "<unk>", "<sos>", "<eos>"};
  t.insert(t.end(), words.begin(), words.end());
  return Vocab::from_tokens(std::move(t));
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("encode_source rewrites to roots and keeps features") {
  const auto src = encode_source(he_succeeded_kennedy(), morph());
  CHECK(src.roots == std::vector<std::string>{"he", "succeed", "kennedy"});
  CHECK(src.answer == AnswerSpan{2, 2});
  REQUIRE(src.features.size() == 3);
  CHECK(src.features[1] == TokenFeatures{"VBD", "O", AnswerBio::O});
  CHECK(src.features[2].answer_bio == AnswerBio::B);
}

TEST_CASE("encode_source on root-form input is a fixed point") {
  const std::vector<TaggedToken> t = {tok("the", "DT"), tok("dog", "NN", AnswerBio::B),
                                      tok("run", "VB")};
  CHECK(encode_source(t, morph()).roots == std::vector<std::string>{"the", "dog", "run"});
}

TEST_CASE("encode_source contract cases") {
  std::vector<TaggedToken> long_src(129, tok("word", "NN"));
  long_src[0].answer_bio = AnswerBio::B;
  CHECK_THROWS_AS(encode_source(long_src, morph()), CutoffExceeded);
  EncodeOptions trunc;
  trunc.truncate = true;
  CHECK(encode_source(long_src, morph(), trunc).roots.size() == 128);
  CHECK_THROWS_AS(encode_source({}, morph()), EmptyInputError);
  const std::vector<TaggedToken> no_answer = {tok("a", "DT")};
  CHECK_THROWS_AS(encode_source(no_answer, morph()), DataError);
}

TEST_CASE("encode_target: when did he succeed ?") {
  const auto src = encode_source(he_succeeded_kennedy(), morph());
  const Vocab q = quest_vocab({"when", "do", "?"});
  const std::vector<TaggedToken> question = {tok("when", "WRB"), tok("did", "VBD"),
                                             tok("he", "PRP"), tok("succeed", "VB"),
                                             tok("?", ".")};
  const auto actions = encode_target(question, src.roots, src.answer, q, morph());
  const std::vector<TargetAction> want = {
      TargetAction::quest(4), TargetAction::quest(5), TargetAction::trans(TransformationType::Ed),
      TargetAction::copy(0),  TargetAction::copy(1),  TargetAction::quest(6)};
  CHECK(actions == want);
  CHECK(realize(actions, src.roots, q, morph()) == "when did he succeed ?");
}

TEST_CASE("encode_target: copies only, and UNK fallback") {
  const auto src = encode_source(he_succeeded_kennedy(), morph());
  const Vocab q = quest_vocab({"who"});
  const std::vector<TaggedToken> copies = {tok("Kennedy", "NNP"), tok("he", "PRP")};
  CHECK(encode_target(copies, src.roots, src.answer, q, morph()) ==
        std::vector<TargetAction>{TargetAction::copy(2), TargetAction::copy(0)});
  const std::vector<TaggedToken> unknown = {tok("zebra", "NN")};
  CHECK(encode_target(unknown, src.roots, src.answer, q, morph()) ==
        std::vector<TargetAction>{TargetAction::quest(Vocab::kUnk)});
}

TEST_CASE("encode_target copies the occurrence nearest the answer") {
  const std::vector<TaggedToken> s = {tok("the", "DT"), tok("cat", "NN"), tok("saw", "VBD"),
                                      tok("the", "DT"), tok("dog", "NN", AnswerBio::B)};
  const auto src = encode_source(s, morph());
  const std::vector<TaggedToken> question = {tok("the", "DT")};
  CHECK(encode_target(question, src.roots, src.answer, quest_vocab({}), morph()) ==
        std::vector<TargetAction>{TargetAction::copy(3)});
  // Equidistant occurrences: the leftmost wins.
  const std::vector<TaggedToken> s2 = {tok("x", "NN"), tok("a", "DT", AnswerBio::B), tok("x", "NN")};
  const auto src2 = encode_source(s2, morph());
  const std::vector<TaggedToken> q2 = {tok("x", "NN")};
  CHECK(encode_target(q2, src2.roots, src2.answer, quest_vocab({}), morph()) ==
        std::vector<TargetAction>{TargetAction::copy(0)});
}

TEST_CASE("realize") {
  const Vocab q = quest_vocab({"do"});
  const std::vector<std::string> none;
  CHECK(realize(std::vector{TargetAction::quest(4), TargetAction::trans(TransformationType::Ed)},
                none, q, morph()) == "did");
  const std::vector<std::string> what = {"what"};
  CHECK(realize(std::vector{TargetAction::copy(0)}, what, q, morph()) == "what");
  CHECK_THROWS_AS(realize(std::vector{TargetAction::trans(TransformationType::Ed)}, none, q, morph()),
                  DanglingTransError);
  CHECK_THROWS_AS(realize(std::vector{TargetAction::quest(4), TargetAction::trans(TransformationType::Ed),
                                      TargetAction::trans(TransformationType::Ing)},
                          none, q, morph()),
                  DanglingTransError);
  CHECK_THROWS_AS(realize(std::vector{TargetAction::copy(3)}, what, q, morph()), IndexOutOfVocab);
}

TEST_CASE("round trip over the toy corpus") {
  const auto corpus = toy_corpus(200, 7);
  const Vocabs v = build_vocabs(corpus, morph());
  std::size_t coverable = 0;
  for (const auto& raw : corpus) {
    const EncodedExample ex = encode_example(raw, v.quest, morph());
    CHECK(ex.source_roots.size() == raw.source.size());
    CHECK(trans_adjacency_ok(ex.target_actions));
    if (!is_coverable(raw.question, ex.source_roots, v.quest, morph())) continue;
    ++coverable;
    CHECK(realize(ex.target_actions, ex.source_roots, v.quest, morph()) == ex.reference_question);
  }
  CHECK(coverable == corpus.size());
}

TEST_CASE("trans adjacency property on random sequences") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<TargetAction> seq(std::uniform_int_distribution<int>(0, 6)(rng));
    for (auto& a : seq) {
      const int k = std::uniform_int_distribution<int>(0, 2)(rng);
      a = k == 0 ? TargetAction::copy(0) : k == 1 ? TargetAction::quest(4)
                                                  : TargetAction::trans(TransformationType::Ns);
    }
    bool accepted = true;
    try {
      validate_actions(seq, 1, 5);
    } catch (const DanglingTransError&) {
      accepted = false;
    }
    CHECK(accepted == trans_adjacency_ok(seq));
  }
}

TEST_CASE("vocabulary construction") {
  RawExample ex;
  ex.source = {tok("a", "DT"), tok("a", "DT", AnswerBio::B), tok("b", "NN")};
  ex.question = {tok("b", "NN"), tok("a", "DT")};
  const std::vector<RawExample> corpus = {ex};
  const Vocabs v = build_vocabs(corpus, morph(), {1, 1});
  CHECK(v.encoder.tokens() == std::vector<std::string>{"<pad>", "<unk>", "<sos>", "<eos>", "a"});
  // Equal counts: lexicographically smaller first.
  CHECK(v.quest.tokens() == std::vector<std::string>{"<pad>", "<unk>", "<sos>", "<eos>", "a"});
  CHECK(v.encoder.id_or_unk("b") == Vocab::kUnk);
  CHECK_THROWS_AS(Vocab::from_tokens({"a", "b"}), DataError);
}

TEST_CASE("corpus and encoded JSON round trip") {
  test::TempDir dir;
  const auto corpus = toy_corpus(12, 1);
  write_corpus(dir / "c.jsonl", corpus);
  const auto back = read_corpus(dir / "c.jsonl");
  REQUIRE(back.size() == corpus.size());
  CHECK(join_lower(back[5].question) == join_lower(corpus[5].question));
  CHECK(back[5].source[0].ner == corpus[5].source[0].ner);

  const Vocabs v = build_vocabs(corpus, morph());
  write_vocabs(dir.path(), v);
  const Vocabs v2 = read_vocabs(dir.path());
  CHECK(v2.encoder == v.encoder);
  CHECK(v2.quest == v.quest);

  std::vector<EncodedExample> enc;
  for (const auto& r : corpus) enc.push_back(encode_example(r, v.quest, morph()));
  std::ostringstream os;
  write_encoded(os, enc, v.quest);
  test::write_file(dir / "e.jsonl", os.str());
  const auto enc2 = read_encoded(dir / "e.jsonl");
  REQUIRE(enc2.size() == enc.size());
  for (std::size_t i = 0; i < enc.size(); ++i) {
    CHECK(enc2[i].target_actions == enc[i].target_actions);
    CHECK(enc2[i].source_roots == enc[i].source_roots);
    CHECK(enc2[i].answer_span == enc[i].answer_span);
  }
}

TEST_CASE("malformed corpus lines") {
  test::TempDir dir;
  test::write_file(dir / "bad.jsonl", "{\"tokens\": [\"a\"]\n");
  CHECK_THROWS(read_corpus(dir / "bad.jsonl"));
  CHECK_THROWS_AS(read_corpus(dir / "missing.jsonl"), FileError);
}

}  // TEST_SUITE
