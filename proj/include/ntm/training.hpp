#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntm/corpus.hpp"
#include "ntm/embeddings.hpp"
#include "ntm/models.hpp"
#include "ntm/tensor.hpp"

namespace ntm {

struct AdadeltaConfig {
  double rho = 0.95;
  double epsilon = 1e-6;
  // Multiplier on the Adadelta step.
  double learning_rate = 0.01;
};

struct AdadeltaState {
  AdadeltaConfig config;
  std::vector<Tensor> avg_sq_grad;
  std::vector<Tensor> avg_sq_update;

  static AdadeltaState for_shapes(std::span<const Tensor> params, AdadeltaConfig config);
  static AdadeltaState for_parameters(std::span<const NamedTensor> params, AdadeltaConfig config);
  // True when accumulators match the parameter shapes and are nonnegative.
  bool mirrors(std::span<const NamedTensor> params) const;
};

// One descent step on a minimization objective, parameters in span order:
//   G <- rho G + (1 - rho) g^2
//   delta = -sqrt(U + eps) / sqrt(G + eps) * g
//   U <- rho U + (1 - rho) delta^2
//   param <- param + lr * delta
void adadelta_step(std::span<Tensor> params, std::span<const Tensor> grads, AdadeltaState& state);
void adadelta_step(std::span<NamedTensor> params, std::span<const Tensor> grads,
                   AdadeltaState& state);

struct TraceRow {
  std::size_t epoch = 0;
  // Mean per-document training ELBO over the epoch's batches.
  double elbo = 0.0;
  // Accumulated from the training passes of the epoch (parameters move
  // between batches); test perplexity is a full evaluation after the epoch.
  double train_perplexity = 0.0;
  double test_perplexity = 0.0;
  std::optional<double> npmi;
  std::optional<double> wetc_pw;
  std::optional<double> wetc_c;
  std::optional<double> wall_seconds;

  bool operator==(const TraceRow&) const = default;
};

using Trace = std::vector<TraceRow>;

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  AdadeltaConfig optimizer;
  // NPMI is evaluated on epochs divisible by this (and on the last epoch).
  std::size_t npmi_every = 1;
  std::size_t top_n = 10;
  // Wall-clock time makes traces differ between otherwise identical runs.
  bool record_wall_time = false;
  // Called after each epoch with the new trace row and the current model.
  std::function<void(const TraceRow&, const NeuralTopicModel&)> on_epoch;
};

struct TrainResult {
  NeuralTopicModel model;
  Trace trace;
  std::string rng_state;
};

// Raised on a non-finite objective or gradient; keeps the trace up to the
// last completed epoch.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(std::size_t epoch, std::size_t batch, Trace trace);
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }
  const Trace& trace() const noexcept { return trace_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
  Trace trace_;
};

// Seed streams derived from config.seed: parameter initialization uses the
// seed itself, batch order uses (seed, epoch), reparameterization noise and
// per-epoch evaluation use independent mixes.
std::uint64_t evaluation_seed(std::uint64_t seed, std::size_t epoch);

TrainResult train(const ModelConfig& config, const TrainOptions& options, const Corpus& train_corpus,
                  const Corpus& test_corpus,
                  std::shared_ptr<const EmbeddingMatrix> embeddings = nullptr,
                  const CooccurrenceStats* stats = nullptr);

enum class TraceFormat { csv, json };

// Columns epoch,elbo,train_ppl,test_ppl,npmi,wetc_pw,wetc_c,wall_seconds.
// Floats use 17 significant digits; absent values are empty (csv) or null
// (json). Throws ContractError for an empty trace.
std::string format_trace(const Trace& trace, TraceFormat format);
void export_trace(const Trace& trace, const std::filesystem::path& destination, TraceFormat format);
Trace parse_trace_json(std::string_view text);

}  // namespace ntm
