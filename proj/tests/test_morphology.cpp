#include <doctest.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "morphoqg/errors.hpp"
#include "support.hpp"

using namespace morphoqg;
using morphoqg::test::morph;

TEST_SUITE("morphology") {

TEST_CASE("apply_transform on the documented examples") {
  CHECK(morph().apply_transform("commit", TransformationType::Ing) == "committing");
  CHECK(morph().apply_transform("commit", TransformationType::Ed) == "committed");
  CHECK(morph().apply_transform("go", TransformationType::Ed) == "went");
  CHECK(morph().apply_transform("run", TransformationType::Vs) == "runs");
  CHECK(morph().apply_transform("plan", TransformationType::Ed) == "planned");
}

TEST_CASE("orthographic rules") {
  CHECK(morph().apply_transform("make", TransformationType::Ing) == "making");
  CHECK(morph().apply_transform("carry", TransformationType::Ed) == "carried");
  CHECK(morph().apply_transform("box", TransformationType::Ns) == "boxes");
  CHECK(morph().apply_transform("watch", TransformationType::Vs) == "watches");
  CHECK(morph().apply_transform("big", TransformationType::Jer) == "bigger");
  CHECK(morph().apply_transform("happy", TransformationType::Jest) == "happiest");
  CHECK(morph().apply_transform("play", TransformationType::Vs) == "plays");
}

TEST_CASE("apply_transform rejects non-alphabetic roots") {
  CHECK_THROWS_AS(morph().apply_transform("abc1", TransformationType::Ed), UnknownRuleError);
  CHECK_THROWS_AS(morph().apply_transform("", TransformationType::Ns), UnknownRuleError);
}

TEST_CASE("analyze on the documented examples") {
  CHECK(morph().analyze("succeeded", "VBD") == MorphAnalysis{"succeed", TransformationType::Ed});
  CHECK(morph().analyze("dog", "NN") == MorphAnalysis{"dog", std::nullopt});
  CHECK(morph().analyze("went", "VBD") == MorphAnalysis{"go", TransformationType::Ed});
}

TEST_CASE("analyze maps every inflectional tag to its type") {
  CHECK(morph().analyze("running", "VBG").transform == TransformationType::Ing);
  CHECK(morph().analyze("runs", "VBZ").transform == TransformationType::Vs);
  CHECK(morph().analyze("taken", "VBN") == MorphAnalysis{"take", TransformationType::Edp});
  CHECK(morph().analyze("cities", "NNS") == MorphAnalysis{"city", TransformationType::Ns});
  CHECK(morph().analyze("taller", "JJR") == MorphAnalysis{"tall", TransformationType::Jer});
  CHECK(morph().analyze("tallest", "JJS") == MorphAnalysis{"tall", TransformationType::Jest});
  CHECK(morph().analyze("better", "RBR").transform == TransformationType::Ver);
  CHECK(morph().analyze("best", "RBS").transform == TransformationType::Vest);
  CHECK(morph().analyze("running", "NN") == MorphAnalysis{"running", std::nullopt});
}

TEST_CASE("analyze lowercases and falls back to the word itself") {
  CHECK(morph().analyze("Kennedy", "NNP") == MorphAnalysis{"kennedy", std::nullopt});
  CHECK(morph().analyze("1990s", "NNS").transform == std::nullopt);
}

TEST_CASE("irregular TSV parsing") {
  SUBCASE("one row") {
    std::istringstream in("went\tgo\t##ed\n");
    const auto t = IrregularTable::parse(in);
    REQUIRE(t.size() == 1);
    CHECK(t.entries()[0] == IrregularEntry{"went", "go", TransformationType::Ed});
    CHECK(t.form("go", TransformationType::Ed) == "went");
  }
  SUBCASE("empty file") {
    std::istringstream in("");
    CHECK(IrregularTable::parse(in).empty());
  }
  SUBCASE("two columns") {
    std::istringstream in("# header\nwent\tgo\t##ed\nran\trun\n");
    try {
      IrregularTable::parse(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("unknown tag") {
    std::istringstream in("went\tgo\t##past\n");
    CHECK_THROWS_AS(IrregularTable::parse(in), ParseError);
  }
  SUBCASE("conflicting rows") {
    std::istringstream in("went\tgo\t##ed\ngoed\tgo\t##ed\n");
    CHECK_THROWS_AS(IrregularTable::parse(in), DuplicateKeyError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(IrregularTable::load("/nonexistent/irregular.tsv"), FileError);
  }
}

TEST_CASE("irregular table round trip") {
  const auto& entries = morph().irregular().entries();
  REQUIRE(entries.size() >= 500);
  std::size_t ok_apply = 0, ok_analyze = 0;
  for (const auto& e : entries) {
    ok_apply += morph().apply_transform(e.root, e.type) == e.inflected;
    ok_analyze += morph().analyze(e.inflected, pos_tag_for(e.type)) ==
                  MorphAnalysis{e.root, e.type};
  }
  CHECK(ok_apply == entries.size());
  CHECK(ok_analyze == entries.size());
}

TEST_CASE("regular lexicon round trip") {
  std::ifstream in(std::string(MORPHOQG_TEST_DATA_DIR) + "/lexicon.tsv");
  REQUIRE(in);
  std::string line;
  std::size_t total = 0, apply_ok = 0, analyze_ok = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string root, tag, inflected;
    std::getline(row, root, '\t');
    std::getline(row, tag, '\t');
    std::getline(row, inflected, '\t');
    const auto t = parse_tag(tag);
    REQUIRE(t.has_value());
    ++total;
    const std::string out = morph().apply_transform(root, *t);
    apply_ok += out == inflected;
    analyze_ok += morph().analyze(out, pos_tag_for(*t)) == MorphAnalysis{root, *t};
  }
  REQUIRE(total >= 500);
  CHECK(static_cast<double>(apply_ok) / total >= 0.99);
  CHECK(static_cast<double>(analyze_ok) / total >= 0.99);
}

TEST_CASE("no tag leakage and determinism") {
  for (const char* root : {"walk", "study", "stop", "fly", "quick", "happy"}) {
    for (TransformationType t : kAllTransforms) {
      const std::string a = morph().apply_transform(root, t);
      CHECK(a.find("##") == std::string::npos);
      CHECK(a == morph().apply_transform(root, t));
    }
  }
}

TEST_CASE("tag strings") {
  for (std::size_t i = 0; i < kNumTransforms; ++i) {
    const TransformationType t = transform_from_id(i);
    CHECK(transform_id(t) == i);
    CHECK(parse_tag(tag_string(t)) == t);
    CHECK(transform_for_pos_tag(pos_tag_for(t)) == t);
  }
  CHECK(tag_string(TransformationType::Ing) == "##ing");
  CHECK(tag_string(TransformationType::Vest) == "##vest");
  CHECK_FALSE(parse_tag("##xyz").has_value());
}

}  // TEST_SUITE
