#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntm/autodiff.hpp"
#include "ntm/corpus.hpp"
#include "ntm/embeddings.hpp"
#include "ntm/rng.hpp"
#include "ntm/tensor.hpp"

namespace ntm {

// z = f(h): relu for NTM, identity for NVDM, softmax for GSM.
enum class LatentActivation { relu, identity, softmax };

enum class ModelKind { ntm, nvdm, gsm, ntm_r, ntm_f, ntm_fr };

// How the coherence term is weighed against a batch. batch: lambda * sum C
// is added once per batch to the batch-summed ELBO, and the whole objective is
// divided by the nominal batch size, so a short final batch carries the same
// weight as a full one. document: lambda * sum C is added to every document's
// ELBO, i.e. to the batch mean.
enum class CoherenceScope { batch, document };

std::string_view to_string(ModelKind kind);
std::string_view to_string(LatentActivation activation);
std::optional<ModelKind> parse_model_kind(std::string_view name);
std::optional<LatentActivation> parse_latent_activation(std::string_view name);
std::string_view to_string(CoherenceScope scope);
std::optional<CoherenceScope> parse_coherence_scope(std::string_view name);

inline constexpr double kDefaultCoherenceWeight = 50.0;
inline constexpr double kLikelihoodFloor = 1e-10;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t topics = 0;
  LatentActivation activation = LatentActivation::relu;
  // Decoder restricted to W = E * T_hat with E fixed.
  bool factorized = false;
  // Weight of the coherence term added to the ELBO.
  double lambda = 0.0;
  CoherenceScope coherence_scope = CoherenceScope::batch;
  std::size_t mc_samples_train = 1;
  std::size_t mc_samples_eval = 8;
  std::uint64_t seed = 0;

  static ModelConfig for_kind(ModelKind kind, std::size_t vocab_size, std::size_t topics,
                              double lambda = kDefaultCoherenceWeight);

  bool needs_embeddings() const noexcept { return factorized || lambda > 0.0; }
  // Throws ConfigError on contradictions, e.g. lambda > 0 without embeddings
  // or embeddings whose row count differs from vocab_size.
  void validate(const EmbeddingMatrix* embeddings) const;

  bool operator==(const ModelConfig&) const = default;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Parameters of one topic model. Order is fixed and is also the order in
// which the optimizer applies updates:
//   encoder.hidden1.{weight,bias}     |V| -> 3K, sigmoid
//   encoder.hidden2.{weight,bias}     3K -> 2K, sigmoid
//   encoder.mu.{weight,bias}          2K -> K
//   encoder.log_sigma.{weight,bias}   2K -> K
//   decoder.weight [|V| x K] or decoder.topic_factor [D x K]
//   decoder.bias [1 x |V|]
// Weight matrices are stored [in x out]; biases are [1 x out].
class NeuralTopicModel {
 public:
  // Glorot-uniform weights, zero biases, topic factor ~ N(0, 0.02^2); all
  // draws from Rng(config.seed).
  static NeuralTopicModel initialize(const ModelConfig& config,
                                     std::shared_ptr<const EmbeddingMatrix> embeddings = nullptr);
  static NeuralTopicModel zeros(const ModelConfig& config,
                                std::shared_ptr<const EmbeddingMatrix> embeddings = nullptr);
  // Adopts the given tensors after checking names and shapes.
  NeuralTopicModel(ModelConfig config, std::vector<NamedTensor> parameters,
                   std::shared_ptr<const EmbeddingMatrix> embeddings);

  const ModelConfig& config() const noexcept { return config_; }
  std::span<const NamedTensor> parameters() const noexcept { return parameters_; }
  std::span<NamedTensor> parameters() noexcept { return parameters_; }
  const Tensor& parameter(std::string_view name) const;
  const EmbeddingMatrix* embeddings() const noexcept { return embeddings_.get(); }
  const std::shared_ptr<const EmbeddingMatrix>& embeddings_ptr() const noexcept {
    return embeddings_;
  }

  // The topic-word matrix W [|V| x K]; for factorized models E * T_hat.
  Tensor decoder_matrix() const;
  std::size_t decoder_parameter_count() const noexcept;
  std::size_t parameter_count() const noexcept;

 private:
  ModelConfig config_;
  std::vector<NamedTensor> parameters_;
  std::shared_ptr<const EmbeddingMatrix> embeddings_;
};

// Expected parameter names and shapes for a configuration.
std::vector<NamedTensor> parameter_layout(const ModelConfig& config, std::size_t embedding_dim);

// Noise for the reparameterization, drawn as a [rows x cols] tensor.
using NoiseSource = std::function<Tensor(std::size_t rows, std::size_t cols)>;
NoiseSource zero_noise();
NoiseSource gaussian_noise(Rng& rng);

// A model's parameters bound into one autodiff graph.
class ModelGraph {
 public:
  struct Encoding {
    ad::Var mu;
    ad::Var log_sigma;
  };

  // With trainable=false parameters enter the graph as constants.
  ModelGraph(ad::Graph& graph, const NeuralTopicModel& model, bool trainable = true);

  ad::Graph& graph() noexcept { return graph_; }
  const ModelConfig& config() const noexcept { return model_.config(); }
  // Leaves in model parameter order.
  std::span<const ad::Var> parameters() const noexcept { return leaves_; }

  Encoding encode(ad::Var x);
  ad::Var decode(ad::Var z);
  ad::Var decoder_matrix();
  ad::Var embeddings();

 private:
  ad::Graph& graph_;
  const NeuralTopicModel& model_;
  std::vector<ad::Var> leaves_;
  std::optional<ad::Var> decoder_matrix_;
  std::optional<ad::Var> embeddings_;
};

// h = mu + exp(log_sigma) * eps, z = activation(h).
ad::Var sample_latent(ad::Var mu, ad::Var log_sigma, ad::Var eps, LatentActivation activation);
// Per-document sum_v x_v log max(y_v, 1e-10) as [B x 1]; clamped entries are
// added to clamp_events when given.
ad::Var log_likelihood(ad::Var x, ad::Var y, std::size_t* clamp_events = nullptr);
// Per-document KL(N(mu, sigma^2) || N(0, I)) as [B x 1].
ad::Var kl_divergence(ad::Var mu, ad::Var log_sigma);

struct ElboTerms {
  ad::Var elbo;            // [1x1] mean over the batch
  ad::Var per_document;    // [B x 1]
  ad::Var log_likelihood;  // [B x 1], averaged over samples
  ad::Var kl;              // [B x 1]
  std::size_t clamp_events = 0;
};

// Monte Carlo ELBO with `samples` reparameterized draws and analytic KL.
ElboTerms elbo(ModelGraph& model, ad::Var x, std::size_t samples, const NoiseSource& noise);

struct Objective {
  ad::Var value;  // [1x1], to be maximized
  ElboTerms elbo;
  std::optional<ad::Var> coherence;  // [1 x K] when lambda > 0
};

// Mean ELBO + (lambda / B) * sum_k C_k, where B is nominal_batch (the rows of
// x when 0), or mean ELBO + lambda * sum_k C_k under CoherenceScope::document.
// Uses mc_samples_train draws.
Objective objective(ModelGraph& model, ad::Var x, const NoiseSource& noise,
                    std::size_t nominal_batch = 0);

struct PerplexityReport {
  // exp(-(1/D) sum_d elbo_d / n_d) with mc_samples_eval draws per document.
  double perplexity = 0.0;
  // Same with the mean latent (eps = 0).
  double mean_latent_perplexity = 0.0;
  std::size_t documents = 0;
  std::size_t clamp_events = 0;
};

PerplexityReport perplexity(const Corpus& corpus, const NeuralTopicModel& model,
                            std::uint64_t eval_seed, std::size_t chunk_size = 256);

// Per column, the indices of the N largest entries, descending; ties go to
// the lower index. Throws ContractError when N > |V|.
std::vector<std::vector<std::size_t>> top_words(const Tensor& decoder_matrix, std::size_t n);

// Self-describing model snapshot: config, vocabulary digest, generator state
// and every tensor, including the fixed embeddings when the model has them.
struct Checkpoint {
  ModelConfig config;
  std::string vocabulary_digest;
  std::string rng_state;
  std::vector<NamedTensor> tensors;
};

Checkpoint make_checkpoint(const NeuralTopicModel& model, std::string vocabulary_digest,
                           std::string rng_state);
NeuralTopicModel model_from_checkpoint(const Checkpoint& checkpoint);

// Layout: 8-byte magic "NTMCKPT1", u64 little-endian header length, JSON
// header, then float64 little-endian tensor data in header order.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source = "checkpoint");
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ntm
