#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "ntm/io.hpp"
#include "support/cli_fixture.hpp"

using namespace ntm;
using testing::run_cli;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> train_args(const testing::CliWorkspace& ws, const std::string& model,
                                    const std::string& out_dir, std::size_t epochs = 2) {
  std::vector<std::string> args = {"train",     "--model",    model,       "--topics", "3",
                                   "--epochs",  std::to_string(epochs),    "--batch-size", "16",
                                   "--docword", ws.docword.string(), "--vocab", ws.vocab.string(),
                                   "--out-dir", out_dir};
  if (model != "ntm" && model != "nvdm" && model != "gsm") {
    args.push_back("--embeddings");
    args.push_back(ws.embeddings.string());
  }
  return args;
}

}  // namespace

TEST_CASE("train writes manifest, checkpoint, trace and held-out documents") {
  testing::CliWorkspace ws("train");
  const auto r = run_cli(train_args(ws, "ntm-r", ws.path("run")));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* leaf : {"train-manifest.json", "checkpoint.ntm", "trace.csv", "test_docword.txt"}) {
    CHECK(fs::exists(ws.root / "run" / leaf));
  }
  const auto manifest = nlohmann::json::parse(io::read_file(ws.root / "run" / "train-manifest.json"));
  CHECK(manifest["options"]["lambda"] == 50.0);
  CHECK(manifest["inputs"]["docword"]["sha256"] == io::sha256_file(ws.docword));
  CHECK(manifest["inputs"]["docword"]["path"] == fs::absolute(ws.docword).lexically_normal().string());
  REQUIRE(run_cli(train_args(ws, "ntm-r", ws.path("run"))).code == 0);
  CHECK(io::read_file(ws.root / "run" / "train-manifest.json") == manifest.dump(2) + "\n");
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["epochs"] == 2);
}

TEST_CASE("identical invocations produce identical bytes") {
  testing::CliWorkspace ws("determinism");
  REQUIRE(run_cli(train_args(ws, "ntm-fr", ws.path("a"))).code == 0);
  REQUIRE(run_cli(train_args(ws, "ntm-fr", ws.path("b"))).code == 0);
  CHECK(io::read_file(ws.root / "a" / "trace.csv") == io::read_file(ws.root / "b" / "trace.csv"));
  CHECK(io::read_file(ws.root / "a" / "checkpoint.ntm") == io::read_file(ws.root / "b" / "checkpoint.ntm"));
}

TEST_CASE("zero epochs gives a header-only trace") {
  testing::CliWorkspace ws("zero");
  REQUIRE(run_cli(train_args(ws, "ntm", ws.path("run"), 0)).code == 0);
  CHECK(io::read_file(ws.root / "run" / "trace.csv") ==
        "epoch,elbo,train_ppl,test_ppl,npmi,wetc_pw,wetc_c,wall_seconds\n");
  CHECK(fs::exists(ws.root / "run" / "checkpoint.ntm"));
}

TEST_CASE("json trace format") {
  testing::CliWorkspace ws("json");
  auto args = train_args(ws, "ntm", ws.path("run"));
  args.insert(args.end(), {"--trace-format", "json"});
  REQUIRE(run_cli(args).code == 0);
  CHECK(nlohmann::json::parse(io::read_file(ws.root / "run" / "trace.json")).size() == 2);
}

TEST_CASE("usage and configuration errors exit 2") {
  testing::CliWorkspace ws("usage");
  CHECK(run_cli({"train", "--model", "ntm-r", "--docword", ws.docword.string(), "--vocab",
                 ws.vocab.string(), "--out-dir", ws.path("x")})
            .code == 2);
  auto with_lambda = train_args(ws, "ntm", ws.path("x"));
  with_lambda.insert(with_lambda.end(), {"--lambda", "5"});
  CHECK(run_cli(with_lambda).code == 2);
  CHECK(run_cli({"train", "--bogus"}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"cooc", "--reference", ws.reference.string(), "--vocab", ws.vocab.string(), "--window", "1",
                 "--out-dir", ws.path("x")})
            .code == 2);
}

TEST_CASE("missing inputs exit 4") {
  testing::CliWorkspace ws("io");
  auto args = train_args(ws, "ntm", ws.path("run"));
  args[10] = ws.path("missing.txt");
  CHECK(run_cli(args).code == 4);
}

TEST_CASE("malformed inputs exit 4") {
  testing::CliWorkspace ws("malformed");
  std::ofstream(ws.path("bad_docword.txt")) << "3\n10\n2\n1 99 1\n";
  auto args = train_args(ws, "ntm", ws.path("run"));
  args[10] = ws.path("bad_docword.txt");
  CHECK(run_cli(args).code == 4);
}

TEST_CASE("cooc, topics, eval and correlate") {
  testing::CliWorkspace ws("pipeline");
  const auto cooc = run_cli({"cooc", "--reference", ws.reference.string(), "--vocab", ws.vocab.string(),
                             "--out-dir", ws.path("stats")});
  REQUIRE_MESSAGE(cooc.code == 0, cooc.err);
  const auto cooc_json = nlohmann::json::parse(cooc.out);
  CHECK(cooc_json["window_size"] == 10);
  CHECK(cooc_json["covered_words"] == 30);
  const std::string cache = ws.path("stats/cooc.txt");

  auto args = train_args(ws, "ntm", ws.path("run"));
  args.insert(args.end(), {"--cooc", cache, "--embeddings", ws.embeddings.string()});
  REQUIRE(run_cli(args).code == 0);
  const std::string ckpt = ws.path("run/checkpoint.ntm");

  const auto topics = run_cli({"topics", "--checkpoint", ckpt, "--vocab", ws.vocab.string(), "--top-n", "5",
                               "--cooc", cache, "--embeddings", ws.embeddings.string(), "--out-dir", ws.path("t")});
  REQUIRE_MESSAGE(topics.code == 0, topics.err);
  const auto listing = nlohmann::json::parse(topics.out);
  CHECK(listing["topics"].size() == 3);
  CHECK(listing["topics"][0]["words"].size() == 5);
  CHECK(listing.contains("mean_npmi"));

  CHECK(run_cli({"topics", "--checkpoint", ckpt, "--vocab", ws.vocab.string(), "--top-n", "31", "--out-dir",
                 ws.path("t")})
            .code == 2);

  const auto eval = run_cli({"eval", "--checkpoint", ckpt, "--docword", ws.path("run/test_docword.txt"), "--vocab",
                             ws.vocab.string(), "--mc-eval", "4", "--out-dir", ws.path("e"), "--out",
                             ws.path("e/report.json")});
  REQUIRE_MESSAGE(eval.code == 0, eval.err);
  const auto report = nlohmann::json::parse(eval.out);
  CHECK(report["mc_samples_eval"] == 4);
  CHECK(report["test_perplexity"].get<double>() > 1.0);
  CHECK(fs::exists(ws.root / "e" / "report.json"));
  CHECK(fs::exists(ws.root / "e" / "eval-manifest.json"));

  io::write_file(ws.root / "other_vocab.txt", io::read_file(ws.vocab) + "extra\n");
  CHECK(run_cli({"eval", "--checkpoint", ckpt, "--docword", ws.path("run/test_docword.txt"), "--vocab",
                 ws.path("other_vocab.txt"), "--out-dir", ws.path("e")})
            .code == 2);

  io::write_file(ws.root / "ratings.txt",
                 "w0 w1 w2\t3\nw10 w11 w12\t2\nw20 w21 w5\t1\nw3 w14 w25\t0.5\nw0 nosuchword\t1\n");
  const auto corr = run_cli({"correlate", "--ratings", ws.path("ratings.txt"), "--cooc", cache, "--embeddings",
                             ws.embeddings.string(), "--out-dir", ws.path("c")});
  REQUIRE_MESSAGE(corr.code == 0, corr.err);
  CHECK(corr.out.find("WETC_C") != std::string::npos);
  CHECK(corr.out.find("skipped 1 unresolved") != std::string::npos);
  const auto table = nlohmann::json::parse(io::read_file(ws.root / "c" / "correlation.json"));
  CHECK(table["evaluated_topics"] == 4);
}

TEST_CASE("cooc with no vocabulary coverage exits 2") {
  testing::CliWorkspace ws("coverage");
  io::write_file(ws.root / "unrelated.txt", "zebra yak\nquokka\n");
  CHECK(run_cli({"cooc", "--reference", ws.path("unrelated.txt"), "--vocab", ws.vocab.string(), "--out-dir",
                 ws.path("s")})
            .code == 2);
  CHECK_FALSE(fs::exists(ws.root / "s" / "cooc.txt"));
}

TEST_CASE("output directory from the environment") {
  testing::CliWorkspace ws("env");
  ::setenv(cli::kOutDirEnv, ws.path("from_env").c_str(), 1);
  const auto r = run_cli({"cooc", "--reference", ws.reference.string(), "--vocab", ws.vocab.string()});
  ::unsetenv(cli::kOutDirEnv);
  CHECK(r.code == 0);
  CHECK(fs::exists(ws.root / "from_env" / "cooc.txt"));
}

TEST_CASE("the executable reports exit codes") {
  const char* binary = std::getenv("NTM_TEST_BINARY");
  if (binary == nullptr) return;
  CHECK(std::system((std::string(binary) + " --help > /dev/null").c_str()) == 0);
  const int status = std::system((std::string(binary) + " train --model nope 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(status) == 2);
}
