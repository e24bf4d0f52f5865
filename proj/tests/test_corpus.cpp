#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include <zlib.h>

#include "doctest.h"
#include "ntm/corpus.hpp"
#include "ntm/error.hpp"
#include "ntm/io.hpp"
#include "support/cooc_oracle.hpp"
#include "support/synthetic.hpp"

using namespace ntm;
namespace fs = std::filesystem;

namespace {

VocabularyPtr vocab_of(std::vector<std::string> words) {
  return std::make_shared<const Vocabulary>(std::move(words));
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ntm_test_corpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::vector<std::string>> random_token_corpus(std::mt19937_64& gen,
                                                          const std::vector<std::string>& alphabet) {
  std::uniform_int_distribution<std::size_t> docs(1, 10), len(0, 50), pick(0, alphabet.size() - 1);
  std::vector<std::vector<std::string>> out(docs(gen));
  for (auto& d : out) {
    d.resize(len(gen));
    for (auto& t : d) t = alphabet[pick(gen)];
  }
  return out;
}

}  // namespace

TEST_SUITE("vocabulary") {
  TEST_CASE("index is the inverse of the word list") {
    const auto v = parse_vocabulary("apple\nbanana\ncherry\n");
    REQUIRE(v->size() == 3);
    for (std::size_t i = 0; i < v->size(); ++i) CHECK(v->find(v->word(i)) == i);
    CHECK_FALSE(v->find("durian").has_value());
  }

  TEST_CASE("duplicates and blank entries are rejected") {
    CHECK_THROWS_AS(parse_vocabulary("a\nb\na\n"), ParseError);
    CHECK_THROWS_AS(parse_vocabulary("a\n\nb\n"), ParseError);
    CHECK_THROWS_AS(Vocabulary({"x", "x"}), ContractError);
  }

  TEST_CASE("digest depends on order and content") {
    CHECK(Vocabulary({"a", "b"}).digest() == Vocabulary({"a", "b"}).digest());
    CHECK(Vocabulary({"a", "b"}).digest() != Vocabulary({"b", "a"}).digest());
    CHECK(Vocabulary({"a", "b"}).digest().size() == 64);
  }
}

TEST_SUITE("uci") {
  TEST_CASE("direct transcription") {
    const auto load = parse_uci_bow("2\n3\n3\n1 1 2\n1 3 1\n2 2 5\n", vocab_of({"a", "b", "c"}));
    REQUIRE(load.corpus.size() == 2);
    CHECK(load.dropped_documents == 0);
    CHECK(load.corpus.documents[0] == Document{{{0, 2}, {2, 1}}});
    CHECK(load.corpus.documents[1] == Document{{{1, 5}}});
  }

  TEST_CASE("NNZ mismatch is a parse error") {
    CHECK_THROWS_AS(parse_uci_bow("2\n3\n4\n1 1 2\n1 3 1\n2 2 5\n", vocab_of({"a", "b", "c"})), ParseError);
    CHECK_THROWS_AS(parse_uci_bow("2\n3\n2\n1 1 2\n1 3 1\n2 2 5\n", vocab_of({"a", "b", "c"})), ParseError);
  }

  TEST_CASE("unmentioned document is dropped and counted") {
    const auto load = parse_uci_bow("3\n3\n2\n1 1 2\n3 2 1\n", vocab_of({"a", "b", "c"}));
    CHECK(load.corpus.size() == 2);
    CHECK(load.dropped_documents == 1);
  }

  TEST_CASE("malformed records report their line") {
    try {
      parse_uci_bow("1\n3\n2\n1 1 2\n1 x 1\n", vocab_of({"a", "b", "c"}));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 5);
    }
    CHECK_THROWS_AS(parse_uci_bow("1\n3\n1\n1 4 2\n", vocab_of({"a", "b", "c"})), RangeError);
    CHECK_THROWS_AS(parse_uci_bow("1\n3\n1\n2 1 2\n", vocab_of({"a", "b", "c"})), RangeError);
    CHECK_THROWS_AS(parse_uci_bow("1\n3\n1\n1 1 0\n", vocab_of({"a", "b", "c"})), ParseError);
    CHECK_THROWS_AS(parse_uci_bow("1\n3\n2\n1 1 1\n1 1 2\n", vocab_of({"a", "b", "c"})), ParseError);
    CHECK_THROWS_AS(parse_uci_bow("1\n4\n1\n1 1 1\n", vocab_of({"a", "b", "c"})), ParseError);
    CHECK_THROWS_AS(parse_uci_bow("1\n3\n", vocab_of({"a", "b", "c"})), ParseError);
  }

  TEST_CASE("round trip through files, plain and gzip") {
    const auto data = testing::clustered_corpus(3, {.vocab = 200, .documents = 50, .clusters = 4,
                                                    .words_per_cluster = 20, .embedding_dim = 8});
    const fs::path dir = temp_dir("roundtrip");
    save_uci_bow(data.corpus, dir / "docword.txt", dir / "vocab.txt");
    const auto loaded = load_uci_bow(dir / "docword.txt", dir / "vocab.txt");
    CHECK(loaded.corpus.documents == data.corpus.documents);
    CHECK(*loaded.corpus.vocabulary == *data.corpus.vocabulary);

    const std::string text = format_uci_docword(data.corpus);
    gzFile gz = gzopen((dir / "docword.txt.gz").c_str(), "wb");
    REQUIRE(gz != nullptr);
    gzwrite(gz, text.data(), static_cast<unsigned>(text.size()));
    gzclose(gz);
    CHECK(load_uci_bow(dir / "docword.txt.gz", dir / "vocab.txt").corpus.documents == data.corpus.documents);
    CHECK_THROWS_AS(load_uci_bow(dir / "missing.txt", dir / "vocab.txt"), IoError);
  }
}

TEST_SUITE("split and batches") {
  Corpus numbered(std::size_t n) {
    Corpus c;
    c.vocabulary = testing::numbered_vocabulary(n);
    for (std::uint32_t i = 0; i < n; ++i) c.documents.push_back(Document{{{i, i + 1}}});
    return c;
  }

  TEST_CASE("partition") {
    const Corpus c = numbered(10);
    const auto parts = split(c, 0.1, 7);
    CHECK(parts.train.size() == 9);
    CHECK(parts.test.size() == 1);
    std::set<std::uint32_t> seen;
    for (const auto* side : {&parts.train, &parts.test}) {
      for (const auto& d : side->documents) CHECK(seen.insert(d.entries[0].word).second);
    }
    CHECK(seen.size() == 10);
    CHECK(split(c, 0.1, 7).test.documents == parts.test.documents);
  }

  TEST_CASE("test size is the ceiling") {
    CHECK(split(numbered(10), 0.25, 1).test.size() == 3);
    CHECK(split(numbered(100), 0.1, 1).test.size() == 10);
  }

  TEST_CASE("different seeds give different membership") {
    const Corpus c = numbered(100);
    bool differed = false;
    for (std::uint64_t s = 1; s <= 9; s += 2) {
      differed = differed || split(c, 0.1, s).test.documents != split(c, 0.1, s + 1).test.documents;
    }
    CHECK(differed);
  }

  TEST_CASE("empty side and bad fraction are contract errors") {
    CHECK_THROWS_AS(split(numbered(1), 0.5, 1), ContractError);
    CHECK_THROWS_AS(split(numbered(10), 0.0, 1), ContractError);
    CHECK_THROWS_AS(split(numbered(10), 1.0, 1), ContractError);
  }

  TEST_CASE("batch sizes") {
    auto sizes = [](const std::vector<std::vector<std::size_t>>& order) {
      std::vector<std::size_t> out;
      for (const auto& b : order) out.push_back(b.size());
      return out;
    };
    CHECK(sizes(batch_order(10, 4, 1, 0)) == std::vector<std::size_t>{4, 4, 2});
    const auto singles = batch_order(10, 1, 1, 0);
    CHECK(singles.size() == 10);
    std::set<std::size_t> covered;
    for (const auto& b : singles) covered.insert(b[0]);
    CHECK(covered.size() == 10);
    CHECK(batch_order(10, 4, 5, 3) == batch_order(10, 4, 5, 3));
    CHECK(batch_order(50, 4, 5, 3) != batch_order(50, 4, 5, 4));
  }

  TEST_CASE("densification conserves mass") {
    const auto data = testing::clustered_corpus(5, {.vocab = 120, .documents = 37, .clusters = 3,
                                                    .words_per_cluster = 20, .embedding_dim = 4});
    std::vector<double> column_sums(120, 0.0);
    for (const Tensor& batch : batch_iter(data.corpus, 8, 2, 1)) {
      for (std::size_t r = 0; r < batch.rows(); ++r) {
        for (std::size_t w = 0; w < batch.cols(); ++w) column_sums[w] += batch(r, w);
      }
    }
    const auto totals = data.corpus.word_totals();
    for (std::size_t w = 0; w < 120; ++w) CHECK(column_sums[w] == static_cast<double>(totals[w]));
  }
}

TEST_SUITE("cooccurrence") {
  TEST_CASE("tokenize") {
    CHECK(tokenize("Hello, World! x2-y") == std::vector<std::string>{"hello", "world", "x2", "y"});
    CHECK(tokenize("  ").empty());
    CHECK(tokenize("caf\xc3\xa9 bar") == std::vector<std::string>{"caf\xc3\xa9", "bar"});
  }

  TEST_CASE("examples") {
    const auto v = vocab_of({"a", "b", "c"});
    auto s1 = count_cooccurrence({{"a", "b"}}, v, 10);
    CHECK(s1.total_windows() == 1);
    CHECK(s1.unigram(0) == 1);
    CHECK(s1.unigram(1) == 1);
    CHECK(s1.pair(0, 1) == 1);

    auto s2 = count_cooccurrence({{"a", "a", "a"}}, v, 2);
    CHECK(s2.total_windows() == 2);
    CHECK(s2.unigram(0) == 2);
    CHECK(s2.distinct_pairs() == 0);

    auto s3 = count_cooccurrence({{"a", "b", "c", "a"}}, v, 2);
    CHECK(s3.total_windows() == 3);
    CHECK(s3.pair(0, 1) == 1);
    CHECK(s3.pair(1, 2) == 1);
    CHECK(s3.pair(2, 0) == 1);
    CHECK(s3.unigram(0) == 2);
    CHECK(s3.unigram(1) == 2);
    CHECK(s3.unigram(2) == 2);
  }

  TEST_CASE("out-of-vocabulary tokens occupy positions") {
    auto s = count_cooccurrence({{"a", "zzz", "b"}}, vocab_of({"a", "b"}), 2);
    CHECK(s.total_windows() == 2);
    CHECK(s.pair(0, 1) == 0);
  }

  TEST_CASE("window size below two is rejected") {
    CHECK_THROWS_AS(count_cooccurrence({{"a"}}, vocab_of({"a"}), 1), ContractError);
  }

  TEST_CASE("matches brute-force enumeration and parallel equals serial") {
    std::mt19937_64 gen(42);
    const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e", "f", "g", "oov1", "oov2"};
    const auto v = vocab_of({"a", "b", "c", "d", "e", "f", "g"});
    const std::set<std::string> in_vocab(v->words().begin(), v->words().end());
    for (int trial = 0; trial < 40; ++trial) {
      const auto docs = random_token_corpus(gen, alphabet);
      const std::size_t window = 2 + trial % 9;
      const auto oracle = testing::brute_force_windows(docs, in_vocab, window);
      const auto serial = count_cooccurrence(docs, v, window, Execution::serial);
      const auto parallel = count_cooccurrence(docs, v, window, Execution::parallel);
      CHECK(serial == parallel);
      REQUIRE(serial.total_windows() == oracle.windows);
      for (std::size_t i = 0; i < v->size(); ++i) {
        CHECK(serial.unigram(i) == oracle.unigram_count(v->word(i)));
        for (std::size_t j = 0; j < v->size(); ++j) {
          if (i == j) continue;
          CHECK(serial.pair(i, j) == oracle.pair_count(v->word(i), v->word(j)));
          CHECK(serial.pair(i, j) == serial.pair(j, i));
          CHECK(serial.pair(i, j) <= std::min(serial.unigram(i), serial.unigram(j)));
        }
        CHECK(serial.unigram(i) <= serial.total_windows());
      }
    }
  }

  TEST_CASE("large corpus: sharded counting equals serial") {
    std::mt19937_64 gen(77);
    std::vector<std::string> alphabet;
    for (int i = 0; i < 300; ++i) alphabet.push_back("t" + std::to_string(i));
    std::vector<std::vector<std::string>> docs(2000);
    std::uniform_int_distribution<std::size_t> len(0, 80), pick(0, 299);
    for (auto& d : docs) {
      d.resize(len(gen));
      for (auto& t : d) t = alphabet[pick(gen)];
    }
    const auto v = testing::numbered_vocabulary(250, "t");
    CHECK(count_cooccurrence(docs, v, 10, Execution::serial) ==
          count_cooccurrence(docs, v, 10, Execution::parallel));
  }

  TEST_CASE("merge sums counts") {
    const auto v = vocab_of({"a", "b", "c"});
    const std::vector<std::vector<std::string>> left = {{"a", "b"}, {"c", "a", "b"}};
    const std::vector<std::vector<std::string>> right = {{"b", "c"}};
    auto merged = count_cooccurrence(left, v, 3, Execution::serial);
    merged.merge(count_cooccurrence(right, v, 3, Execution::serial));
    CHECK(merged == count_cooccurrence({{"a", "b"}, {"c", "a", "b"}, {"b", "c"}}, v, 3, Execution::serial));
    CHECK_THROWS_AS(merged.merge(CooccurrenceStats(v, 4)), ContractError);
  }

  TEST_CASE("cache round trip is exact") {
    std::mt19937_64 gen(1);
    const auto v = vocab_of({"a", "b", "c", "d", "e", "f", "g"});
    const auto stats = count_cooccurrence(random_token_corpus(gen, {"a", "b", "c", "d", "e", "f", "g", "x"}), v, 4);
    const fs::path dir = temp_dir("cache");
    stats.save(dir / "cooc.txt");
    const auto loaded = CooccurrenceStats::load(dir / "cooc.txt");
    CHECK(loaded == stats);
    CHECK(loaded.serialize() == stats.serialize());
    CHECK_THROWS_AS(CooccurrenceStats::deserialize("ntm-cooc 2\n"), ParseError);
  }

  TEST_CASE("reindexing onto another vocabulary") {
    const auto v = vocab_of({"a", "b", "c"});
    const auto stats = count_cooccurrence({{"a", "b", "c"}}, v, 3);
    const auto re = stats.reindexed(vocab_of({"c", "z", "a"}));
    CHECK(re.total_windows() == 1);
    CHECK(re.unigram(0) == 1);
    CHECK(re.unigram(1) == 0);
    CHECK(re.pair(0, 2) == 1);
    CHECK(re.pair(1, 2) == 0);
  }
}
