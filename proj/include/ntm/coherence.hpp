#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntm/autodiff.hpp"
#include "ntm/corpus.hpp"
#include "ntm/embeddings.hpp"
#include "ntm/error.hpp"
#include "ntm/tensor.hpp"

namespace ntm {

// Top-N vocabulary indices of one topic, most probable first.
using TopicWordList = std::vector<std::size_t>;

// Throws ContractError unless the list has at least two distinct indices.
void validate_topic(std::span<const std::size_t> topic);

enum class PairStatus { ok, never_cooccur, missing_word, saturated };

// NPMI of one word pair from window probabilities. Degenerate cases take
// their limiting values: never co-occurring -> -1; a word absent from the
// reference -> 0 (missing_word); P(a,b) = 1 with identical support -> 1.
double npmi_pair(std::size_t a, std::size_t b, const CooccurrenceStats& stats,
                 PairStatus* status = nullptr);

struct NpmiScore {
  double value = 0.0;
  std::size_t missing_word_pairs = 0;
  std::size_t saturated_pairs = 0;
};

// Sum of pair NPMI over i < j, divided by N(N-1).
NpmiScore npmi_topic(std::span<const std::size_t> topic, const CooccurrenceStats& stats);

// Pairwise embedding coherence over rows of a row-normalized [N x D] matrix:
// sum over i < j of <E_i, E_j>, divided by N(N-1).
double wetc_pw(const Tensor& topic_embeddings);
// Closed form (sum of the row Gram matrix - N) / (2N(N-1)); equals wetc_pw
// when no row is zero.
double wetc_pw_gram(const Tensor& topic_embeddings);

struct CentroidCoherence {
  double value = 0.0;
  bool degenerate = false;
};

// Mean cosine between each row and the unit-normalized centroid. A centroid
// with norm below 1e-12 yields {0, degenerate}.
CentroidCoherence wetc_c(const Tensor& topic_embeddings);

// Differentiable per-topic coherence C [1 x K] of a decoder matrix W [|V| x K]
// against fixed row-normalized embeddings E [|V| x D]:
//   W_hat = W with unit columns, T = E^T W_hat with unit columns, S = E T,
//   C_k = sum_i S_ik * W_hat_ik.
// Gradients reach W only when E is a constant.
ad::Var coherence_regularizer(ad::Var decoder_matrix, ad::Var embeddings);

enum class CorrelationMethod { pearson, spearman };

class UndefinedCorrelation : public ContractError {
 public:
  using ContractError::ContractError;
};

// Average (1-based) ranks; ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);
// Throws ContractError for mismatched lengths or n < 3 and
// UndefinedCorrelation for constant input.
double correlate(std::span<const double> x, std::span<const double> y, CorrelationMethod method);

struct CoherenceReport {
  std::vector<TopicWordList> topics;
  std::optional<std::vector<double>> per_topic_npmi;
  std::optional<std::vector<double>> per_topic_wetc_pw;
  std::optional<std::vector<double>> per_topic_wetc_c;
  std::optional<double> mean_npmi;
  std::optional<double> mean_wetc_pw;
  std::optional<double> mean_wetc_c;
  std::size_t flagged_npmi_pairs = 0;
  std::size_t degenerate_centroids = 0;
};

// Extracts top-N words per column of W and scores them. NPMI needs stats and
// WETC needs embeddings; absent inputs leave the corresponding fields empty.
CoherenceReport evaluate_coherence(const Tensor& decoder_matrix, std::size_t top_n,
                                   const CooccurrenceStats* stats,
                                   const EmbeddingMatrix* embeddings);

struct RatedTopic {
  std::vector<std::string> words;
  double rating = 0.0;
};
using RatedTopicSet = std::vector<RatedTopic>;

// Lines "word1 word2 ... wordN<TAB>rating".
RatedTopicSet parse_ratings(std::string_view text, const std::string& source = "ratings");
RatedTopicSet load_ratings(const std::filesystem::path& path);

struct CorrelationRow {
  std::string metric;
  std::optional<double> pearson;
  std::optional<double> spearman;
};

struct CorrelationTable {
  std::vector<CorrelationRow> rows;  // NPMI, WETC_PW, WETC_C
  std::size_t evaluated_topics = 0;
  std::size_t skipped_unresolved = 0;
  std::size_t skipped_zero_embedding = 0;
  std::vector<double> npmi, wetc_pw, wetc_c, ratings;
};

// Scores every resolvable rated topic and correlates each metric with the
// ratings. Embeddings must be aligned with the stats vocabulary. A topic is
// unresolved if any word is missing from that vocabulary. Throws
// ContractError when fewer than three topics remain.
CorrelationTable correlation_study(const RatedTopicSet& rated, const CooccurrenceStats& stats,
                                   const EmbeddingMatrix& embeddings);

}  // namespace ntm
