#include <doctest.h>

#include "morphoqg/bench.hpp"
#include "morphoqg/errors.hpp"
#include "morphoqg/metrics.hpp"

using namespace morphoqg;

namespace {
using Strings = std::vector<std::string>;
}

TEST_SUITE("metrics") {

TEST_CASE("identical candidates score the maximum") {
  const Strings c = {"who wrote the book ?", "when did the war end ?"};
  const auto b = bleu(c, c);
  for (double x : b.bleu) CHECK(x == doctest::Approx(100.0));
  CHECK(rouge_l_corpus(c, c) == doctest::Approx(1.0));
}

TEST_CASE("clipped unigram precision") {
  const auto b = bleu(Strings{"the the the"}, Strings{"the cat"}, 1);
  CHECK(b.precisions[0] == doctest::Approx(1.0 / 3.0));
  CHECK(b.brevity_penalty == 1.0);
  CHECK(b.bleu[0] == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("case-insensitive and unsmoothed") {
  CHECK(bleu(Strings{"The Cat"}, Strings{"the cat"}, 2).bleu[1] == doctest::Approx(100.0));
  // No bigram match: BLEU-2 is zero rather than smoothed.
  const auto b = bleu(Strings{"cat the"}, Strings{"the cat"}, 2);
  CHECK(b.bleu[0] == doctest::Approx(100.0));
  CHECK(b.bleu[1] == 0.0);
}

TEST_CASE("empty candidate") {
  const auto b = bleu(Strings{""}, Strings{"the cat"});
  CHECK(b.brevity_penalty == 0.0);
  for (double x : b.bleu) CHECK(x == 0.0);
  CHECK(rouge_l("", "the cat").f == 0.0);
}

TEST_CASE("length mismatch") {
  CHECK_THROWS_AS(bleu(Strings{"a"}, Strings{"a", "b"}), LengthMismatch);
  CHECK_THROWS_AS(rouge_l_corpus(Strings{"a"}, Strings{}), LengthMismatch);
}

TEST_CASE("ROUGE-L") {
  const auto r = rouge_l("a b c d", "a c d");
  CHECK(r.precision == doctest::Approx(0.75));
  CHECK(r.recall == doctest::Approx(1.0));
  CHECK(r.f == doctest::Approx((1 + 1.2) * 0.75 / (1.0 + 1.2 * 0.75)));
  CHECK(rouge_l("x y", "a b").f == 0.0);
  CHECK(rouge_l("a b", "a b").f == doctest::Approx(1.0));
  CHECK(lcs_length(Strings{"a", "b", "c"}, Strings{"b", "a", "c"}) == 2);
}

TEST_CASE("bench: support sizes and monotone latency") {
  CHECK(OutputLayerSpec::wt_heads(1000, 128).support() == 1000 + 9 + 128);
  CHECK(OutputLayerSpec::full_softmax(30000).support() == 30000);
  BenchOptions o;
  o.hidden = 64;
  o.beam = 4;
  o.words = 20;
  o.warmup = 2;
  const auto small = bench_layer(OutputLayerSpec::full_softmax(200), o);
  const auto large = bench_layer(OutputLayerSpec::full_softmax(20000), o);
  CHECK(small.mean_s > 0.0);
  CHECK(large.median_of_medians_s > small.median_of_medians_s);
  const auto cmp = bench_decode(OutputLayerSpec::full_softmax(2000), OutputLayerSpec::full_softmax(2000), o);
  CHECK(cmp.speedup > 0.3);
  CHECK(cmp.speedup < 3.0);
}

}  // TEST_SUITE
