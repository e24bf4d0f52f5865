#include "ntm/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "ntm/error.hpp"
#include "ntm/io.hpp"

namespace ntm {

std::size_t EmbeddingMatrix::oov_count() const noexcept {
  return static_cast<std::size_t>(std::count(oov_mask.begin(), oov_mask.end(), true));
}

Tensor EmbeddingMatrix::topic_word_matrix(std::span<const std::size_t> word_indices) const {
  Tensor out(word_indices.size(), dim());
  for (std::size_t r = 0; r < word_indices.size(); ++r) {
    if (word_indices[r] >= rows()) {
      throw RangeError("word index " + std::to_string(word_indices[r]) +
                       " outside embedding matrix of " + std::to_string(rows()) + " rows");
    }
    const auto src = matrix.row(word_indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void normalize_rows_guarded(Tensor& matrix, double epsilon) {
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    auto row = matrix.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < epsilon) continue;
    for (double& v : row) v /= norm;
  }
}

EmbeddingMatrix make_embeddings(Tensor raw, bool normalize) {
  EmbeddingMatrix e;
  e.oov_mask.resize(raw.rows());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto row = raw.row(r);
    e.oov_mask[r] = std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; });
  }
  e.matrix = std::move(raw);
  if (normalize) normalize_rows_guarded(e.matrix);
  e.normalized = normalize;
  return e;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool is_unsigned(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace

EmbeddingLoad parse_embeddings(std::string_view text, const Vocabulary& vocabulary,
                               bool lowercase_match, const std::string& source) {
  // File words we need, mapped to the vocabulary rows they may fill.
  std::unordered_map<std::string, std::vector<double>> found;
  std::unordered_map<std::string, bool> wanted;
  for (const auto& w : vocabulary.words()) {
    wanted.emplace(w, true);
    if (lowercase_match) wanted.emplace(lowercase(w), true);
  }

  EmbeddingLoad result;
  std::size_t dim = 0;
  const auto lines = io::split_lines(text);
  bool first_content = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = split_ws(lines[i]);
    if (fields.empty()) continue;
    if (first_content) {
      first_content = false;
      if (fields.size() == 2 && is_unsigned(fields[0]) && is_unsigned(fields[1])) continue;
    }
    if (fields.size() < 2) throw ParseError(source, i + 1, "expected a word followed by values");
    const std::size_t d = fields.size() - 1;
    if (dim == 0) {
      dim = d;
    } else if (d != dim) {
      throw ParseError(source, i + 1,
                       "expected " + std::to_string(dim) + " values, found " + std::to_string(d));
    }
    const std::string word(fields[0]);
    if (!wanted.contains(word)) continue;
    std::vector<double> values(d);
    for (std::size_t k = 0; k < d; ++k) {
      const auto f = fields[k + 1];
      const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), values[k]);
      if (ec != std::errc() || end != f.data() + f.size() || !std::isfinite(values[k])) {
        throw ParseError(source, i + 1, "bad value '" + std::string(f) + "'");
      }
    }
    if (!found.insert_or_assign(word, std::move(values)).second) {
      ++result.duplicate_words;
      result.warnings.push_back(source + ":" + std::to_string(i + 1) + ": duplicate word '" + word +
                                "', last occurrence wins");
    }
  }
  if (dim == 0) throw ParseError(source, lines.size(), "no embedding vectors found");

  Tensor raw(vocabulary.size(), dim);
  std::vector<bool> oov(vocabulary.size(), true);
  for (std::size_t r = 0; r < vocabulary.size(); ++r) {
    auto it = found.find(vocabulary.word(r));
    if (it == found.end() && lowercase_match) it = found.find(lowercase(vocabulary.word(r)));
    if (it == found.end()) continue;
    std::copy(it->second.begin(), it->second.end(), raw.row(r).begin());
    oov[r] = false;
  }
  result.oov_count = static_cast<std::size_t>(std::count(oov.begin(), oov.end(), true));
  if (result.oov_count == vocabulary.size()) {
    throw ContractError(source + ": no vocabulary word has an embedding");
  }
  result.embeddings.matrix = std::move(raw);
  result.embeddings.oov_mask = std::move(oov);
  normalize_rows_guarded(result.embeddings.matrix);
  result.embeddings.normalized = true;
  return result;
}

EmbeddingLoad load_embeddings(const std::filesystem::path& path, const Vocabulary& vocabulary,
                              bool lowercase_match) {
  return parse_embeddings(io::read_file(path), vocabulary, lowercase_match, path.string());
}

std::string format_embeddings(const Vocabulary& vocabulary, const EmbeddingMatrix& embeddings) {
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < vocabulary.size(); ++r) {
    if (embeddings.oov_mask[r]) continue;
    out += vocabulary.word(r);
    for (double v : embeddings.matrix.row(r)) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace ntm
