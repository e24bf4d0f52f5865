#include "ntm/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ntm/io.hpp"
#include "ntm/models.hpp"

namespace ntm {

void validate_topic(std::span<const std::size_t> topic) {
  if (topic.size() < 2) throw ContractError("a topic needs at least two words");
  std::unordered_set<std::size_t> seen(topic.begin(), topic.end());
  if (seen.size() != topic.size()) throw ContractError("topic word indices must be distinct");
}

double npmi_pair(std::size_t a, std::size_t b, const CooccurrenceStats& stats, PairStatus* status) {
  auto set = [status](PairStatus s) {
    if (status) *status = s;
  };
  const auto total = static_cast<double>(stats.total_windows());
  const std::uint64_t ca = stats.unigram(a);
  const std::uint64_t cb = stats.unigram(b);
  if (ca == 0 || cb == 0) {
    set(PairStatus::missing_word);
    return 0.0;
  }
  const std::uint64_t cab = stats.pair(a, b);
  if (cab == 0) {
    set(PairStatus::never_cooccur);
    return -1.0;
  }
  if (cab == stats.total_windows()) {
    // -log P(a,b) = 0. Identical support is the limit NPMI -> 1.
    const bool identical = ca == cab && cb == cab;
    set(identical ? PairStatus::ok : PairStatus::saturated);
    return identical ? 1.0 : 0.0;
  }
  set(PairStatus::ok);
  const double p_ab = static_cast<double>(cab) / total;
  const double p_a = static_cast<double>(ca) / total;
  const double p_b = static_cast<double>(cb) / total;
  return std::log(p_ab / (p_a * p_b)) / -std::log(p_ab);
}

NpmiScore npmi_topic(std::span<const std::size_t> topic, const CooccurrenceStats& stats) {
  validate_topic(topic);
  if (stats.total_windows() == 0) throw ContractError("co-occurrence stats contain no windows");
  NpmiScore score;
  double total = 0.0;
  const std::size_t n = topic.size();
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      PairStatus status = PairStatus::ok;
      total += npmi_pair(topic[i], topic[j], stats, &status);
      if (status == PairStatus::missing_word) ++score.missing_word_pairs;
      if (status == PairStatus::saturated) ++score.saturated_pairs;
    }
  }
  score.value = total / static_cast<double>(n * (n - 1));
  return score;
}

double wetc_pw(const Tensor& e) {
  const std::size_t n = e.rows();
  if (n < 2) throw ContractError("wetc_pw needs at least two rows");
  double total = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const auto a = e.row(i);
      const auto b = e.row(j);
      total += std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    }
  }
  return total / static_cast<double>(n * (n - 1));
}

double wetc_pw_gram(const Tensor& e) {
  const std::size_t n = e.rows();
  if (n < 2) throw ContractError("wetc_pw needs at least two rows");
  // Sum of all entries of E E^T is the squared norm of the column sums.
  std::vector<double> column_sum(e.cols(), 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < e.cols(); ++c) column_sum[c] += e(r, c);
  double gram_total = 0.0;
  for (double s : column_sum) gram_total += s * s;
  const auto nd = static_cast<double>(n);
  return (gram_total - nd) / (2.0 * nd * (nd - 1.0));
}

CentroidCoherence wetc_c(const Tensor& e) {
  const std::size_t n = e.rows();
  if (n == 0) throw ContractError("wetc_c needs at least one row");
  std::vector<double> centroid(e.cols(), 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < e.cols(); ++c) centroid[c] += e(r, c);
  double sq = 0.0;
  for (double& v : centroid) {
    v /= static_cast<double>(n);
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (norm < 1e-12) return {0.0, true};
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = e.row(r);
    total += std::inner_product(row.begin(), row.end(), centroid.begin(), 0.0) / norm;
  }
  return {total / static_cast<double>(n), false};
}

ad::Var coherence_regularizer(ad::Var decoder_matrix, ad::Var embeddings) {
  const ad::Var w_hat = ad::normalize_cols(decoder_matrix);
  const ad::Var topic_vectors = ad::normalize_cols(ad::matmul(ad::transpose(embeddings), w_hat));
  const ad::Var similarity = ad::matmul(embeddings, topic_vectors);
  return ad::reduce(ad::mul(similarity, w_hat), ad::Reduction::sum, ad::Axis::rows);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double correlate(std::span<const double> x, std::span<const double> y, CorrelationMethod method) {
  if (x.size() != y.size()) throw ContractError("correlate: inputs differ in length");
  if (x.size() < 3) throw ContractError("correlate: need at least three observations");
  if (method == CorrelationMethod::spearman) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return correlate(rx, ry, CorrelationMethod::pearson);
  }
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("correlation of a constant series");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t') ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

CoherenceReport evaluate_coherence(const Tensor& decoder_matrix, std::size_t top_n,
                                   const CooccurrenceStats* stats,
                                   const EmbeddingMatrix* embeddings) {
  if (top_n < 2) throw ContractError("top-N must be at least 2");
  CoherenceReport report;
  report.topics = top_words(decoder_matrix, top_n);
  if (report.topics.empty()) return report;

  if (stats) {
    std::vector<double> scores;
    for (const auto& topic : report.topics) {
      const NpmiScore s = npmi_topic(topic, *stats);
      scores.push_back(s.value);
      report.flagged_npmi_pairs += s.missing_word_pairs + s.saturated_pairs;
    }
    report.mean_npmi = mean(scores);
    report.per_topic_npmi = std::move(scores);
  }
  if (embeddings) {
    std::vector<double> pw, centroid;
    for (const auto& topic : report.topics) {
      const Tensor e = embeddings->topic_word_matrix(topic);
      pw.push_back(wetc_pw(e));
      const CentroidCoherence c = wetc_c(e);
      centroid.push_back(c.value);
      report.degenerate_centroids += c.degenerate;
    }
    report.mean_wetc_pw = mean(pw);
    report.mean_wetc_c = mean(centroid);
    report.per_topic_wetc_pw = std::move(pw);
    report.per_topic_wetc_c = std::move(centroid);
  }
  return report;
}

RatedTopicSet parse_ratings(std::string_view text, const std::string& source) {
  RatedTopicSet rated;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) throw ParseError(source, i + 1, "missing TAB before rating");
    RatedTopic topic;
    const std::string rating(line.substr(tab + 1));
    std::size_t used = 0;
    try {
      topic.rating = std::stod(rating, &used);
    } catch (const std::exception&) {
      throw ParseError(source, i + 1, "bad rating '" + rating + "'");
    }
    if (rating.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(topic.rating)) {
      throw ParseError(source, i + 1, "bad rating '" + rating + "'");
    }
    topic.words = split_words(line.substr(0, tab));
    if (topic.words.size() < 2) throw ParseError(source, i + 1, "a rated topic needs two words");
    rated.push_back(std::move(topic));
  }
  if (rated.empty()) throw ParseError(source, lines.size(), "no rated topics");
  return rated;
}

RatedTopicSet load_ratings(const std::filesystem::path& path) {
  return parse_ratings(io::read_file(path), path.string());
}

CorrelationTable correlation_study(const RatedTopicSet& rated, const CooccurrenceStats& stats,
                                   const EmbeddingMatrix& embeddings) {
  const Vocabulary& vocab = stats.vocabulary();
  if (embeddings.rows() != vocab.size()) {
    throw ContractError("embeddings are not aligned with the co-occurrence vocabulary");
  }
  CorrelationTable table;
  for (const auto& topic : rated) {
    TopicWordList indices;
    bool resolved = true;
    for (const auto& w : topic.words) {
      const auto idx = vocab.find(w);
      if (!idx) {
        resolved = false;
        break;
      }
      if (std::find(indices.begin(), indices.end(), *idx) == indices.end()) indices.push_back(*idx);
    }
    if (!resolved || indices.size() < 2) {
      ++table.skipped_unresolved;
      continue;
    }
    const Tensor e = embeddings.topic_word_matrix(indices);
    if (std::all_of(indices.begin(), indices.end(),
                    [&](std::size_t i) { return embeddings.oov_mask[i]; })) {
      ++table.skipped_zero_embedding;
      continue;
    }
    table.npmi.push_back(npmi_topic(indices, stats).value);
    table.wetc_pw.push_back(wetc_pw(e));
    table.wetc_c.push_back(wetc_c(e).value);
    table.ratings.push_back(topic.rating);
  }
  table.evaluated_topics = table.ratings.size();
  if (table.evaluated_topics < 3) {
    throw ContractError("correlation study needs at least 3 resolvable topics, found " +
                        std::to_string(table.evaluated_topics));
  }
  auto row = [&](const char* name, const std::vector<double>& scores) {
    CorrelationRow r{name, std::nullopt, std::nullopt};
    try {
      r.pearson = correlate(scores, table.ratings, CorrelationMethod::pearson);
      r.spearman = correlate(scores, table.ratings, CorrelationMethod::spearman);
    } catch (const UndefinedCorrelation&) {
    }
    return r;
  };
  table.rows = {row("NPMI", table.npmi), row("WETC_PW", table.wetc_pw), row("WETC_C", table.wetc_c)};
  return table;
}

}  // namespace ntm
