#include "ntm/corpus.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>
#include <charconv>
#include <cmath>
#include <numeric>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "ntm/error.hpp"
#include "ntm/io.hpp"
#include "ntm/rng.hpp"

namespace ntm {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].empty()) throw ContractError("empty word at vocabulary index " + std::to_string(i));
    if (!index_.emplace(words_[i], i).second) {
      throw ContractError("duplicate vocabulary word '" + words_[i] + "'");
    }
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::digest() const { return io::sha256_hex(format_vocabulary(*this)); }

VocabularyPtr parse_vocabulary(std::string_view text, const std::string& source) {
  std::vector<std::string> words;
  std::unordered_map<std::string_view, std::size_t> seen;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view w = lines[i];
    while (!w.empty() && (w.back() == ' ' || w.back() == '\t')) w.remove_suffix(1);
    while (!w.empty() && (w.front() == ' ' || w.front() == '\t')) w.remove_prefix(1);
    if (w.empty()) {
      // Tolerate trailing blank lines only.
      const bool rest_blank = std::all_of(lines.begin() + static_cast<std::ptrdiff_t>(i), lines.end(),
                                          [](std::string_view l) {
                                            return l.find_first_not_of(" \t") == std::string_view::npos;
                                          });
      if (rest_blank) break;
      throw ParseError(source, i + 1, "empty vocabulary entry");
    }
    if (w.find_first_of(" \t") != std::string_view::npos) {
      throw ParseError(source, i + 1, "vocabulary entry contains whitespace");
    }
    if (!seen.emplace(w, i).second) {
      throw ParseError(source, i + 1, "duplicate vocabulary word '" + std::string(w) + "'");
    }
    words.emplace_back(w);
  }
  return std::make_shared<const Vocabulary>(std::move(words));
}

VocabularyPtr load_vocabulary(const std::filesystem::path& path) {
  return parse_vocabulary(io::read_file(path), path.string());
}

std::uint64_t Document::length() const noexcept {
  std::uint64_t n = 0;
  for (const auto& e : entries) n += e.count;
  return n;
}

std::uint64_t Corpus::total_tokens() const noexcept {
  std::uint64_t n = 0;
  for (const auto& d : documents) n += d.length();
  return n;
}

std::vector<std::uint64_t> Corpus::word_totals() const {
  std::vector<std::uint64_t> totals(vocab_size(), 0);
  for (const auto& d : documents)
    for (const auto& e : d.entries) totals[e.word] += e.count;
  return totals;
}

namespace {

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

// Parses whitespace-separated unsigned integers; false on any malformation.
template <std::size_t N>
bool parse_uints(std::string_view line, std::array<std::uint64_t, N>& out) {
  const char* p = line.data();
  const char* end = line.data() + line.size();
  for (std::size_t i = 0; i < N; ++i) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    const auto [next, ec] = std::from_chars(p, end, out[i]);
    if (ec != std::errc() || next == p) return false;
    p = next;
  }
  while (p < end && (*p == ' ' || *p == '\t')) ++p;
  return p == end;
}

}  // namespace

CorpusLoad parse_uci_bow(std::string_view docword, VocabularyPtr vocabulary,
                         const std::string& source) {
  const auto lines = io::split_lines(docword);
  std::array<std::uint64_t, 1> header[3];
  for (std::size_t i = 0; i < 3; ++i) {
    if (i >= lines.size() || !parse_uints(lines[i], header[i])) {
      throw ParseError(source, i + 1, "expected a non-negative integer header line");
    }
  }
  const std::uint64_t num_docs = header[0][0];
  const std::uint64_t num_words = header[1][0];
  const std::uint64_t nnz = header[2][0];
  if (num_words != vocabulary->size()) {
    throw ParseError(source, 2,
                     "header declares W=" + std::to_string(num_words) + " but vocabulary has " +
                         std::to_string(vocabulary->size()) + " words");
  }

  std::size_t last = lines.size();
  while (last > 3 && is_blank(lines[last - 1])) --last;
  if (last - 3 != nnz) {
    throw ParseError(source, last,
                     "header declares NNZ=" + std::to_string(nnz) + " but found " +
                         std::to_string(last - 3) + " records");
  }

  std::vector<Document> docs(num_docs);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(nnz);
  for (std::size_t i = 3; i < last; ++i) {
    std::array<std::uint64_t, 3> rec{};
    if (!parse_uints(lines[i], rec)) {
      throw ParseError(source, i + 1, "expected 'docID wordID count'");
    }
    const auto [doc_id, word_id, count] = rec;
    if (doc_id == 0 || doc_id > num_docs) {
      throw RangeError(source + ":" + std::to_string(i + 1) + ": docID " + std::to_string(doc_id) +
                       " outside 1.." + std::to_string(num_docs));
    }
    if (word_id == 0 || word_id > num_words) {
      throw RangeError(source + ":" + std::to_string(i + 1) + ": wordID " +
                       std::to_string(word_id) + " outside 1.." + std::to_string(num_words));
    }
    if (count == 0 || count > UINT32_MAX) {
      throw ParseError(source, i + 1, "count must be a positive 32-bit integer");
    }
    if (!seen.insert((doc_id - 1) * num_words + (word_id - 1)).second) {
      throw ParseError(source, i + 1, "repeated (docID, wordID) record");
    }
    docs[doc_id - 1].entries.push_back(
        {static_cast<std::uint32_t>(word_id - 1), static_cast<std::uint32_t>(count)});
  }

  CorpusLoad result;
  result.corpus.vocabulary = std::move(vocabulary);
  result.corpus.name = source;
  for (auto& doc : docs) {
    if (doc.entries.empty()) {
      ++result.dropped_documents;
      continue;
    }
    std::sort(doc.entries.begin(), doc.entries.end(),
              [](const WordCount& a, const WordCount& b) { return a.word < b.word; });
    result.corpus.documents.push_back(std::move(doc));
  }
  return result;
}

CorpusLoad load_uci_bow(const std::filesystem::path& docword, const std::filesystem::path& vocab) {
  auto result = parse_uci_bow(io::read_file(docword), load_vocabulary(vocab), docword.string());
  result.corpus.name = docword.filename().string();
  return result;
}

std::string format_uci_docword(const Corpus& corpus) {
  std::size_t nnz = 0;
  for (const auto& d : corpus.documents) nnz += d.entries.size();
  std::string out = std::to_string(corpus.size()) + "\n" + std::to_string(corpus.vocab_size()) +
                    "\n" + std::to_string(nnz) + "\n";
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (const auto& e : corpus.documents[d].entries) {
      out += std::to_string(d + 1) + ' ' + std::to_string(e.word + 1) + ' ' +
             std::to_string(e.count) + '\n';
    }
  }
  return out;
}

std::string format_vocabulary(const Vocabulary& vocabulary) {
  std::string out;
  for (const auto& w : vocabulary.words()) {
    out += w;
    out += '\n';
  }
  return out;
}

void save_uci_bow(const Corpus& corpus, const std::filesystem::path& docword,
                  const std::filesystem::path& vocab) {
  io::write_file(docword, format_uci_docword(corpus));
  io::write_file(vocab, format_vocabulary(*corpus.vocabulary));
}

TrainTestSplit split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ContractError("test fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.size();
  // The small slack keeps exact products such as 0.3 * 10 from rounding up.
  const auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
  if (n_test == 0 || n_test >= n) {
    throw ContractError("split of " + std::to_string(n) + " documents at fraction " +
                        std::to_string(test_fraction) + " leaves an empty side");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  TrainTestSplit out;
  out.train.vocabulary = out.test.vocabulary = corpus.vocabulary;
  out.train.name = corpus.name + "/train";
  out.test.name = corpus.name + "/test";
  for (std::size_t i = 0; i < n; ++i) {
    auto& side = i < n - n_test ? out.train : out.test;
    side.documents.push_back(corpus.documents[order[i]]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> batch_order(std::size_t num_documents,
                                                  std::size_t batch_size, std::uint64_t seed,
                                                  std::uint64_t epoch) {
  if (batch_size == 0) throw ContractError("batch size must be at least 1");
  std::vector<std::size_t> order(num_documents);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, epoch));
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < num_documents; start += batch_size) {
    const std::size_t end = std::min(num_documents, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

Tensor densify(const Corpus& corpus, std::span<const std::size_t> doc_indices) {
  Tensor x(doc_indices.size(), corpus.vocab_size());
  for (std::size_t r = 0; r < doc_indices.size(); ++r) {
    for (const auto& e : corpus.documents.at(doc_indices[r]).entries) {
      x(r, e.word) = static_cast<double>(e.count);
    }
  }
  return x;
}

std::vector<Tensor> batch_iter(const Corpus& corpus, std::size_t batch_size, std::uint64_t seed,
                               std::uint64_t epoch) {
  std::vector<Tensor> batches;
  for (const auto& idx : batch_order(corpus.size(), batch_size, seed, epoch)) {
    batches.push_back(densify(corpus, idx));
  }
  return batches;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word_char = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                           (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word_char) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::vector<std::string>> load_reference_corpus(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  std::vector<std::vector<std::string>> docs;
  for (std::string_view line : io::split_lines(text)) docs.push_back(tokenize(line));
  return docs;
}

// ---------------------------------------------------------------------------

CooccurrenceStats::CooccurrenceStats(VocabularyPtr vocabulary, std::size_t window_size)
    : vocabulary_(std::move(vocabulary)),
      window_size_(window_size),
      unigrams_(vocabulary_ ? vocabulary_->size() : 0, 0) {
  if (window_size < 2) throw ContractError("window size must be at least 2");
}

std::uint64_t CooccurrenceStats::pair(std::size_t a, std::size_t b) const {
  if (a == b) return unigrams_.at(a);
  if (a > b) std::swap(a, b);
  const auto it = pairs_.find(key(a, b));
  return it == pairs_.end() ? 0 : it->second;
}

std::size_t CooccurrenceStats::covered_words() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(unigrams_.begin(), unigrams_.end(), [](std::uint64_t c) { return c > 0; }));
}

void CooccurrenceStats::add_window(std::span<const std::uint32_t> distinct_words) {
  ++total_windows_;
  for (std::size_t i = 0; i < distinct_words.size(); ++i) {
    ++unigrams_[distinct_words[i]];
    for (std::size_t j = i + 1; j < distinct_words.size(); ++j) {
      ++pairs_[key(distinct_words[i], distinct_words[j])];
    }
  }
}

void CooccurrenceStats::merge(const CooccurrenceStats& other) {
  if (other.window_size_ != window_size_ || other.unigrams_.size() != unigrams_.size()) {
    throw ContractError("cannot merge co-occurrence stats with different window or vocabulary");
  }
  total_windows_ += other.total_windows_;
  for (std::size_t i = 0; i < unigrams_.size(); ++i) unigrams_[i] += other.unigrams_[i];
  for (const auto& [k, v] : other.pairs_) pairs_[k] += v;
}

CooccurrenceStats CooccurrenceStats::reindexed(VocabularyPtr target) const {
  CooccurrenceStats out(target, window_size_);
  out.total_windows_ = total_windows_;
  std::vector<std::optional<std::size_t>> source_of(target->size());
  for (std::size_t t = 0; t < target->size(); ++t) {
    source_of[t] = vocabulary_->find(target->word(t));
    if (source_of[t]) out.unigrams_[t] = unigrams_[*source_of[t]];
  }
  for (std::size_t a = 0; a < target->size(); ++a) {
    if (!source_of[a]) continue;
    for (std::size_t b = a + 1; b < target->size(); ++b) {
      if (!source_of[b]) continue;
      const std::uint64_t c = pair(*source_of[a], *source_of[b]);
      if (c > 0) out.pairs_[key(a, b)] = c;
    }
  }
  return out;
}

std::string CooccurrenceStats::serialize() const {
  std::string out = "ntm-cooc 1\n";
  out += "window_size " + std::to_string(window_size_) + "\n";
  out += "total_windows " + std::to_string(total_windows_) + "\n";
  out += "vocabulary " + std::to_string(vocabulary_->size()) + "\n";
  out += format_vocabulary(*vocabulary_);
  std::size_t nonzero = 0;
  for (auto c : unigrams_) nonzero += c > 0;
  out += "unigrams " + std::to_string(nonzero) + "\n";
  for (std::size_t i = 0; i < unigrams_.size(); ++i) {
    if (unigrams_[i] > 0) out += std::to_string(i) + ' ' + std::to_string(unigrams_[i]) + '\n';
  }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> sorted(pairs_.begin(), pairs_.end());
  std::sort(sorted.begin(), sorted.end());
  out += "pairs " + std::to_string(sorted.size()) + "\n";
  for (const auto& [k, v] : sorted) {
    out += std::to_string(k >> 32) + ' ' + std::to_string(k & 0xffffffffULL) + ' ' +
           std::to_string(v) + '\n';
  }
  return out;
}

CooccurrenceStats CooccurrenceStats::deserialize(std::string_view text, const std::string& source) {
  const auto lines = io::split_lines(text);
  std::size_t at = 0;
  auto next = [&]() -> std::string_view {
    if (at >= lines.size()) throw ParseError(source, at + 1, "unexpected end of cache");
    return lines[at++];
  };
  auto keyed = [&](std::string_view name) -> std::uint64_t {
    const std::string_view line = next();
    std::array<std::uint64_t, 1> v{};
    if (!line.starts_with(name) || !parse_uints(line.substr(name.size()), v)) {
      throw ParseError(source, at, "expected '" + std::string(name) + " <integer>'");
    }
    return v[0];
  };

  if (next() != "ntm-cooc 1") throw ParseError(source, 1, "not a co-occurrence cache");
  const std::uint64_t window = keyed("window_size");
  const std::uint64_t total = keyed("total_windows");
  const std::uint64_t vocab_size = keyed("vocabulary");
  std::vector<std::string> words;
  for (std::uint64_t i = 0; i < vocab_size; ++i) words.emplace_back(next());
  CooccurrenceStats stats(std::make_shared<const Vocabulary>(std::move(words)), window);
  stats.total_windows_ = total;

  const std::uint64_t n_uni = keyed("unigrams");
  for (std::uint64_t i = 0; i < n_uni; ++i) {
    std::array<std::uint64_t, 2> rec{};
    if (!parse_uints(next(), rec) || rec[0] >= vocab_size || rec[1] > total) {
      throw ParseError(source, at, "bad unigram record");
    }
    stats.unigrams_[rec[0]] = rec[1];
  }
  const std::uint64_t n_pairs = keyed("pairs");
  for (std::uint64_t i = 0; i < n_pairs; ++i) {
    std::array<std::uint64_t, 3> rec{};
    if (!parse_uints(next(), rec) || rec[0] >= rec[1] || rec[1] >= vocab_size ||
        rec[2] > std::min(stats.unigrams_[rec[0]], stats.unigrams_[rec[1]])) {
      throw ParseError(source, at, "bad pair record");
    }
    stats.pairs_[key(rec[0], rec[1])] = rec[2];
  }
  while (at < lines.size()) {
    if (!is_blank(lines[at])) throw ParseError(source, at + 1, "trailing content in cache");
    ++at;
  }
  return stats;
}

void CooccurrenceStats::save(const std::filesystem::path& path) const {
  io::write_file(path, serialize());
}

CooccurrenceStats CooccurrenceStats::load(const std::filesystem::path& path) {
  return deserialize(io::read_file(path), path.string());
}

bool CooccurrenceStats::operator==(const CooccurrenceStats& other) const {
  const bool same_vocab = vocabulary_ == other.vocabulary_ ||
                          (vocabulary_ && other.vocabulary_ && *vocabulary_ == *other.vocabulary_);
  return same_vocab && window_size_ == other.window_size_ &&
         total_windows_ == other.total_windows_ && unigrams_ == other.unigrams_ &&
         pairs_ == other.pairs_;
}

std::vector<EncodedDocument> encode_tokens(const std::vector<std::vector<std::string>>& documents,
                                           const Vocabulary& vocabulary) {
  std::vector<EncodedDocument> out;
  out.reserve(documents.size());
  for (const auto& doc : documents) {
    EncodedDocument ids;
    ids.reserve(doc.size());
    for (const auto& token : doc) {
      const auto idx = vocabulary.find(token);
      ids.push_back(idx ? static_cast<std::int32_t>(*idx) : -1);
    }
    out.push_back(std::move(ids));
  }
  return out;
}

namespace {

void count_document(const EncodedDocument& doc, std::size_t window, CooccurrenceStats& stats,
                    std::vector<std::uint32_t>& scratch) {
  if (doc.empty()) return;
  const std::size_t span = std::min(window, doc.size());
  const std::size_t windows = doc.size() - span + 1;
  for (std::size_t start = 0; start < windows; ++start) {
    scratch.clear();
    for (std::size_t p = start; p < start + span; ++p) {
      if (doc[p] >= 0) scratch.push_back(static_cast<std::uint32_t>(doc[p]));
    }
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    stats.add_window(scratch);
  }
}

}  // namespace

CooccurrenceStats count_cooccurrence(std::span<const EncodedDocument> documents,
                                     VocabularyPtr vocabulary, std::size_t window_size,
                                     Execution execution) {
  CooccurrenceStats total(vocabulary, window_size);
  if (execution == Execution::serial) {
    std::vector<std::uint32_t> scratch;
    for (const auto& doc : documents) count_document(doc, window_size, total, scratch);
    return total;
  }

  int shards = 1;
#if defined(_OPENMP)
  shards = omp_get_max_threads();
#endif
  std::vector<CooccurrenceStats> partial(static_cast<std::size_t>(shards),
                                         CooccurrenceStats(vocabulary, window_size));
  const auto n = static_cast<std::int64_t>(documents.size());
#pragma omp parallel num_threads(shards)
  {
    int shard = 0;
#if defined(_OPENMP)
    shard = omp_get_thread_num();
#endif
    std::vector<std::uint32_t> scratch;
#pragma omp for schedule(dynamic, 64)
    for (std::int64_t d = 0; d < n; ++d) {
      count_document(documents[static_cast<std::size_t>(d)], window_size,
                     partial[static_cast<std::size_t>(shard)], scratch);
    }
  }
  for (const auto& p : partial) total.merge(p);
  return total;
}

CooccurrenceStats count_cooccurrence(const std::vector<std::vector<std::string>>& documents,
                                     VocabularyPtr vocabulary, std::size_t window_size,
                                     Execution execution) {
  if (window_size < 2) throw ContractError("window size must be at least 2");
  const auto encoded = encode_tokens(documents, *vocabulary);
  return count_cooccurrence(encoded, std::move(vocabulary), window_size, execution);
}

}  // namespace ntm
