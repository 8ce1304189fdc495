#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>

#include "support.hpp"

using morphoqg::test::read_file;
using morphoqg::test::TempDir;
using morphoqg::test::write_file;

namespace {

int run(const std::string& args, const TempDir& dir) {
  const std::string cmd = std::string("cd '") + dir.path().string() + "' && '" MORPHOQG_CLI_PATH "' " +
                          args + " > '" + (dir / "stdout.txt").string() + "' 2> '" +
                          (dir / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
  TempDir d;
  CHECK(run("", d) == 1);
  CHECK(run("encode --out x.jsonl", d) == 1);
  CHECK(read_file(d / "stderr.txt").find("--input") != std::string::npos);
  CHECK(run("no-such-command", d) == 1);
  for (const char* sub : {"analyze-vocab", "encode", "decode", "build-vocab", "train", "generate",
                          "score", "bench", "selftest"}) {
    CAPTURE(sub);
    CHECK(run(std::string(sub) + " --help", d) == 0);
    CHECK(read_file(d / "stdout.txt").find("--help") != std::string::npos);
  }
}

TEST_CASE("data errors exit 2") {
  TempDir d;
  CHECK(run("encode --input missing.jsonl --out x.jsonl", d) == 2);
  write_file(d / "bad.jsonl", "{not json\n");
  CHECK(run("encode --input bad.jsonl --out x.jsonl", d) == 2);
  write_file(d / "a.txt", "a\nb\n");
  write_file(d / "b.txt", "a\n");
  CHECK(run("score --cand a.txt --ref b.txt", d) == 2);
}

TEST_CASE("encode, decode and build-vocab pipeline") {
  TempDir d;
  REQUIRE(run("selftest --toy-out toy.jsonl --toy-size 30", d) == 0);
  REQUIRE(run("encode --input toy.jsonl --out enc.jsonl --save-vocab vocab", d) == 0);
  CHECK(line_count(read_file(d / "enc.jsonl")) == 30);
  const auto first = nlohmann::json::parse(read_file(d / "enc.jsonl").substr(0, read_file(d / "enc.jsonl").find('\n')));
  CHECK(first.contains("actions"));

  REQUIRE(run("decode --input enc.jsonl --vocab-dir vocab --out dec.txt", d) == 0);
  const std::string decoded = read_file(d / "dec.txt");
  CHECK(line_count(decoded) == 30);
  CHECK(decoded.find("##") == std::string::npos);

  REQUIRE(run("build-vocab --input toy.jsonl --out-dir v2", d) == 0);
  CHECK(read_file(d / "v2/quest.txt") == read_file(d / "vocab/quest.txt"));

  // Determinism: identical inputs give byte-identical outputs.
  REQUIRE(run("encode --input toy.jsonl --out enc2.jsonl", d) == 0);
  CHECK(read_file(d / "enc2.jsonl") == read_file(d / "enc.jsonl"));

  REQUIRE(run("encode --input toy.jsonl --out split.jsonl --split 0.6,0.2,0.2", d) == 0);
  CHECK(line_count(read_file(d / "split.train.jsonl")) + line_count(read_file(d / "split.dev.jsonl")) +
            line_count(read_file(d / "split.test.jsonl")) ==
        30);
}

TEST_CASE("train, generate and score") {
  TempDir d;
  REQUIRE(run("selftest --toy-out toy.jsonl --toy-size 12", d) == 0);
  REQUIRE(run("encode --input toy.jsonl --out enc.jsonl --save-vocab vocab", d) == 0);
  const std::string train =
      "train --train enc.jsonl --dev enc.jsonl --vocab-dir vocab --steps 6 --eval-every 3 --batch 4 "
      "--hidden 8 --word-dim 8 --feature-dim 4 ";
  REQUIRE(run(train + "--out m.ckpt --loss-curve curve.jsonl", d) == 0);
  REQUIRE(run(train + "--out m2.ckpt --loss-curve curve2.jsonl", d) == 0);
  CHECK(read_file(d / "m.ckpt") == read_file(d / "m2.ckpt"));
  CHECK(read_file(d / "curve.jsonl") == read_file(d / "curve2.jsonl"));
  const auto sidecar = nlohmann::json::parse(read_file(d / "m.ckpt.json"));
  CHECK(sidecar.contains("seed"));

  REQUIRE(run("generate --model m.ckpt --input toy.jsonl --beam 3 --out q.txt --timing t.json", d) == 0);
  CHECK(line_count(read_file(d / "q.txt")) == 12);
  const auto timing = nlohmann::json::parse(read_file(d / "t.json"));
  CHECK(timing.dump().find("seconds_per_word") != std::string::npos);

  write_file(d / "ref.txt", "who wrote the book ?\n");
  write_file(d / "cand.txt", "who wrote the book ?\n");
  REQUIRE(run("score --cand cand.txt --ref ref.txt --out s.json", d) == 0);
  const auto s = nlohmann::json::parse(read_file(d / "s.json"));
  CHECK(s.dump().find("rouge_l") != std::string::npos);
}

TEST_CASE("config file and environment prefix") {
  TempDir d;
  REQUIRE(run("selftest --toy-out data/toy.jsonl --toy-size 5", d) == 0);
  write_file(d / "cfg.toml", "[encode]\ninput = \"data/toy.jsonl\"\nout = \"enc.jsonl\"\n");
  CHECK(run("--config cfg.toml encode", d) == 0);
  CHECK(line_count(read_file(d / "enc.jsonl")) == 5);
  CHECK(run("encode --input toy.jsonl --out enc3.jsonl", d) == 2);
  CHECK(run("", d) == 1);
  const std::string env = "env MORPHOQG_DATA='" + (d / "data").string() + "' '" MORPHOQG_CLI_PATH "'";
  const std::string cmd = "cd '" + d.path().string() + "' && " + env +
                          " encode --input toy.jsonl --out '" + (d / "enc4.jsonl").string() + "' 2>/dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(read_file(d / "enc4.jsonl") == read_file(d / "enc.jsonl"));
}

TEST_CASE("analyze-vocab and bench emit JSON") {
  TempDir d;
  write_file(d / "v.txt", "went\ndog\n##ing\n");
  REQUIRE(run("analyze-vocab --input v.txt", d) == 0);
  const auto r = nlohmann::json::parse(read_file(d / "stdout.txt"));
  CHECK(r.at("inflected_count") == 1);
  CHECK(run("analyze-vocab --input nope.txt", d) == 2);
  REQUIRE(run("bench --vocab-size 500 --wt --hidden 32 --beam 2 --words 5 --warmup 1 --repetitions 1", d) == 0);
  CHECK(nlohmann::json::parse(read_file(d / "stdout.txt")).dump().find("mean_s") != std::string::npos);
}

TEST_CASE("selftest passes") {
  TempDir d;
  CHECK(run("selftest", d) == 0);
  CHECK(read_file(d / "stdout.txt").find("selftest passed") != std::string::npos);
}

}  // TEST_SUITE
