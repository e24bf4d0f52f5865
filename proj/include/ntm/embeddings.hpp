#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntm/corpus.hpp"
#include "ntm/tensor.hpp"

namespace ntm {

// Word vectors aligned row-for-row with a Vocabulary. Words missing from the
// source file are all-zero rows flagged in oov_mask.
struct EmbeddingMatrix {
  Tensor matrix;
  std::vector<bool> oov_mask;
  bool normalized = false;

  std::size_t dim() const noexcept { return matrix.cols(); }
  std::size_t rows() const noexcept { return matrix.rows(); }
  std::size_t oov_count() const noexcept;

  // Rows gathered in the given order; throws RangeError for a bad index.
  Tensor topic_word_matrix(std::span<const std::size_t> word_indices) const;
};

// L2-normalizes rows in place; rows with norm below epsilon are left as is.
void normalize_rows_guarded(Tensor& matrix, double epsilon = 1e-12);

// Wraps raw vectors (rows aligned with a vocabulary); zero rows become OOV.
EmbeddingMatrix make_embeddings(Tensor raw, bool normalize = true);

struct EmbeddingLoad {
  EmbeddingMatrix embeddings;
  std::size_t oov_count = 0;
  std::size_t duplicate_words = 0;
  std::vector<std::string> warnings;
};

// Text format "word v1 ... vD", whitespace separated, plain or gzip. A leading
// "count dim" header line is skipped. Exact matches are preferred; with
// lowercase_match a vocabulary word falls back to its lowercase form. The last
// occurrence of a duplicated word wins. Rows are normalized (guarded).
EmbeddingLoad load_embeddings(const std::filesystem::path& path, const Vocabulary& vocabulary,
                              bool lowercase_match = true);
EmbeddingLoad parse_embeddings(std::string_view text, const Vocabulary& vocabulary,
                               bool lowercase_match = true,
                               const std::string& source = "embeddings");

// Inverse of parse_embeddings for the rows of a vocabulary; OOV rows are skipped.
std::string format_embeddings(const Vocabulary& vocabulary, const EmbeddingMatrix& embeddings);

}  // namespace ntm
