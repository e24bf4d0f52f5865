#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ntm/tensor.hpp"

namespace ntm {

class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws ContractError on duplicate or empty words.
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const noexcept { return words_.size(); }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::optional<std::size_t> find(std::string_view word) const;
  // SHA-256 over the words joined by '\n'; identifies a vocabulary in
  // checkpoints and caches.
  std::string digest() const;

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

using VocabularyPtr = std::shared_ptr<const Vocabulary>;

// One token per line; line number is the 1-based word id.
VocabularyPtr load_vocabulary(const std::filesystem::path& path);
VocabularyPtr parse_vocabulary(std::string_view text, const std::string& source = "vocab");

struct WordCount {
  std::uint32_t word;
  std::uint32_t count;

  bool operator==(const WordCount&) const = default;
};

// Sparse bag of words, entries sorted by word index.
struct Document {
  std::vector<WordCount> entries;

  std::uint64_t length() const noexcept;
  bool operator==(const Document&) const = default;
};

struct Corpus {
  VocabularyPtr vocabulary;
  std::vector<Document> documents;
  std::string name;

  std::size_t size() const noexcept { return documents.size(); }
  std::size_t vocab_size() const noexcept { return vocabulary ? vocabulary->size() : 0; }
  std::uint64_t total_tokens() const noexcept;
  // Per-word total counts over all documents.
  std::vector<std::uint64_t> word_totals() const;
};

struct CorpusLoad {
  Corpus corpus;
  std::size_t dropped_documents = 0;
};

// UCI bag-of-words: header lines D, W, NNZ then NNZ lines "docID wordID count"
// with 1-based ids. Documents without entries are dropped and counted.
CorpusLoad load_uci_bow(const std::filesystem::path& docword, const std::filesystem::path& vocab);
CorpusLoad parse_uci_bow(std::string_view docword, VocabularyPtr vocabulary,
                         const std::string& source = "docword");
std::string format_uci_docword(const Corpus& corpus);
std::string format_vocabulary(const Vocabulary& vocabulary);
void save_uci_bow(const Corpus& corpus, const std::filesystem::path& docword,
                  const std::filesystem::path& vocab);

struct TrainTestSplit {
  Corpus train;
  Corpus test;
};

// Seeded shuffle, then the last ceil(test_fraction * D) documents form the test set.
TrainTestSplit split(const Corpus& corpus, double test_fraction, std::uint64_t seed);

// Document indices per batch for one epoch; a pure function of (seed, epoch).
// The final batch may be partial.
std::vector<std::vector<std::size_t>> batch_order(std::size_t num_documents,
                                                  std::size_t batch_size, std::uint64_t seed,
                                                  std::uint64_t epoch);
// Dense [n x |V|] count matrix for the given documents.
Tensor densify(const Corpus& corpus, std::span<const std::size_t> doc_indices);
std::vector<Tensor> batch_iter(const Corpus& corpus, std::size_t batch_size, std::uint64_t seed,
                               std::uint64_t epoch);

// Lowercases ASCII and splits on runs of non-alphanumeric bytes. Bytes >= 0x80
// are word characters so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view text);
// Plain text, one document per line.
std::vector<std::vector<std::string>> load_reference_corpus(const std::filesystem::path& path);

enum class Execution { serial, parallel };

// Sliding-window document-frequency statistics. A window contributes at most
// one count per distinct word and per distinct unordered word pair.
class CooccurrenceStats {
 public:
  CooccurrenceStats() = default;
  CooccurrenceStats(VocabularyPtr vocabulary, std::size_t window_size);

  std::size_t window_size() const noexcept { return window_size_; }
  std::uint64_t total_windows() const noexcept { return total_windows_; }
  const Vocabulary& vocabulary() const { return *vocabulary_; }
  const VocabularyPtr& vocabulary_ptr() const noexcept { return vocabulary_; }

  std::uint64_t unigram(std::size_t word) const { return unigrams_.at(word); }
  std::uint64_t pair(std::size_t a, std::size_t b) const;
  std::size_t distinct_pairs() const noexcept { return pairs_.size(); }
  std::size_t covered_words() const noexcept;

  // Adds one window given its sorted, distinct in-vocabulary word ids.
  void add_window(std::span<const std::uint32_t> distinct_words);
  // Sums counts; both sides must share window size and vocabulary.
  void merge(const CooccurrenceStats& other);

  // Maps counts onto another vocabulary by word; words unknown to this
  // vocabulary get zero counts.
  CooccurrenceStats reindexed(VocabularyPtr target) const;

  std::string serialize() const;
  static CooccurrenceStats deserialize(std::string_view text, const std::string& source = "cooc");
  void save(const std::filesystem::path& path) const;
  static CooccurrenceStats load(const std::filesystem::path& path);

  bool operator==(const CooccurrenceStats& other) const;

 private:
  static std::uint64_t key(std::size_t a, std::size_t b) noexcept {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
  }

  VocabularyPtr vocabulary_;
  std::size_t window_size_ = 0;
  std::uint64_t total_windows_ = 0;
  std::vector<std::uint64_t> unigrams_;
  std::unordered_map<std::uint64_t, std::uint64_t> pairs_;
};

// Token ids per document; -1 marks out-of-vocabulary tokens, which still
// occupy window positions.
using EncodedDocument = std::vector<std::int32_t>;
std::vector<EncodedDocument> encode_tokens(const std::vector<std::vector<std::string>>& documents,
                                           const Vocabulary& vocabulary);

// Windows of window_size tokens, stride 1; documents shorter than the window
// form one window. Throws ContractError for window_size < 2. The parallel path
// shards documents and merges by summation, giving identical counts.
CooccurrenceStats count_cooccurrence(std::span<const EncodedDocument> documents,
                                     VocabularyPtr vocabulary, std::size_t window_size,
                                     Execution execution = Execution::parallel);
CooccurrenceStats count_cooccurrence(const std::vector<std::vector<std::string>>& documents,
                                     VocabularyPtr vocabulary, std::size_t window_size,
                                     Execution execution = Execution::parallel);

}  // namespace ntm
