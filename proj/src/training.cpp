#include "ntm/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "ntm/coherence.hpp"
#include "ntm/error.hpp"
#include "ntm/io.hpp"
#include "ntm/rng.hpp"

namespace ntm {

AdadeltaState AdadeltaState::for_shapes(std::span<const Tensor> params, AdadeltaConfig config) {
  AdadeltaState state{config, {}, {}};
  for (const auto& p : params) {
    state.avg_sq_grad.emplace_back(p.rows(), p.cols());
    state.avg_sq_update.emplace_back(p.rows(), p.cols());
  }
  return state;
}

AdadeltaState AdadeltaState::for_parameters(std::span<const NamedTensor> params,
                                            AdadeltaConfig config) {
  std::vector<Tensor> shapes;
  for (const auto& p : params) shapes.emplace_back(p.value.rows(), p.value.cols());
  return for_shapes(shapes, config);
}

bool AdadeltaState::mirrors(std::span<const NamedTensor> params) const {
  if (avg_sq_grad.size() != params.size() || avg_sq_update.size() != params.size()) return false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!avg_sq_grad[i].same_shape(params[i].value) ||
        !avg_sq_update[i].same_shape(params[i].value)) {
      return false;
    }
    for (double v : avg_sq_grad[i].values())
      if (!(v >= 0.0)) return false;
    for (double v : avg_sq_update[i].values())
      if (!(v >= 0.0)) return false;
  }
  return true;
}

void adadelta_step(std::span<Tensor> params, std::span<const Tensor> grads, AdadeltaState& state) {
  if (params.size() != grads.size() || params.size() != state.avg_sq_grad.size()) {
    throw DimensionError("adadelta_step: parameter, gradient and state counts differ");
  }
  const double rho = state.config.rho;
  const double eps = state.config.epsilon;
  const double lr = state.config.learning_rate;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& param = params[p];
    const Tensor& g = grads[p];
    Tensor& sq_grad = state.avg_sq_grad[p];
    Tensor& sq_update = state.avg_sq_update[p];
    if (!param.same_shape(g) || !param.same_shape(sq_grad)) {
      throw DimensionError("adadelta_step: shape mismatch at parameter " + std::to_string(p) +
                           ": " + param.shape_string() + " vs gradient " + g.shape_string());
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
      sq_grad[i] = rho * sq_grad[i] + (1.0 - rho) * g[i] * g[i];
      const double delta = -std::sqrt(sq_update[i] + eps) / std::sqrt(sq_grad[i] + eps) * g[i];
      sq_update[i] = rho * sq_update[i] + (1.0 - rho) * delta * delta;
      param[i] += lr * delta;
    }
  }
}

void adadelta_step(std::span<NamedTensor> params, std::span<const Tensor> grads,
                   AdadeltaState& state) {
  std::vector<Tensor> values;
  values.reserve(params.size());
  for (auto& p : params) values.push_back(std::move(p.value));
  try {
    adadelta_step(std::span<Tensor>(values), grads, state);
  } catch (...) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].value = std::move(values[i]);
    throw;
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = std::move(values[i]);
}

TrainingAborted::TrainingAborted(std::size_t epoch, std::size_t batch, Trace trace)
    : std::runtime_error("non-finite objective at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch)),
      epoch_(epoch),
      batch_(batch),
      trace_(std::move(trace)) {}

std::uint64_t evaluation_seed(std::uint64_t seed, std::size_t epoch) {
  return mix_seed(mix_seed(seed, 0x65766121ULL), epoch);
}

namespace {

bool all_finite(std::span<const Tensor> tensors) {
  for (const auto& t : tensors)
    if (!t.all_finite()) return false;
  return true;
}

}  // namespace

TrainResult train(const ModelConfig& config, const TrainOptions& options, const Corpus& train_corpus,
                  const Corpus& test_corpus, std::shared_ptr<const EmbeddingMatrix> embeddings,
                  const CooccurrenceStats* stats) {
  config.validate(embeddings.get());
  if (train_corpus.vocab_size() != config.vocab_size || test_corpus.vocab_size() != config.vocab_size) {
    throw ConfigError("corpus vocabulary does not match the model vocabulary size");
  }
  if (options.npmi_every == 0) throw ConfigError("npmi_every must be at least 1");
  if (train_corpus.size() == 0) throw ConfigError("training corpus is empty");

  NeuralTopicModel model = NeuralTopicModel::initialize(config, embeddings);
  AdadeltaState state = AdadeltaState::for_parameters(model.parameters(), options.optimizer);
  Rng noise_rng(mix_seed(config.seed, 0x6e6f697365ULL));
  const NoiseSource noise = gaussian_noise(noise_rng);
  Trace trace;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    double elbo_sum = 0.0;
    double normalized_sum = 0.0;
    const auto batches = batch_order(train_corpus.size(), options.batch_size, config.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      ad::Graph graph;
      ModelGraph bound(graph, model);
      const ad::Var x = graph.constant(densify(train_corpus, batches[b]));
      const Objective obj = objective(bound, x, noise, options.batch_size);
      if (!std::isfinite(obj.value.value().item())) throw TrainingAborted(epoch, b, trace);
      const ad::Gradients grads = graph.backward(ad::scale(obj.value, -1.0));
      if (!all_finite(grads.all())) throw TrainingAborted(epoch, b, trace);

      const Tensor& per_doc = obj.elbo.per_document.value();
      for (std::size_t r = 0; r < batches[b].size(); ++r) {
        elbo_sum += per_doc[r];
        normalized_sum +=
            per_doc[r] / static_cast<double>(train_corpus.documents[batches[b][r]].length());
      }
      adadelta_step(model.parameters(), grads.all(), state);
    }
    if (!state.mirrors(model.parameters())) {
      throw std::logic_error("optimizer state no longer mirrors the parameters");
    }

    TraceRow row;
    row.epoch = epoch;
    const auto n_train = static_cast<double>(train_corpus.size());
    row.elbo = elbo_sum / n_train;
    row.train_perplexity = std::exp(-normalized_sum / n_train);
    row.test_perplexity = perplexity(test_corpus, model, evaluation_seed(config.seed, epoch)).perplexity;
    const bool with_npmi =
        stats && (epoch % options.npmi_every == 0 || epoch == options.epochs);
    const Tensor w = model.decoder_matrix();
    const std::size_t top_n = std::min(options.top_n, w.rows());
    if (top_n >= 2 && (with_npmi || embeddings)) {
      const CoherenceReport report =
          evaluate_coherence(w, top_n, with_npmi ? stats : nullptr, embeddings.get());
      row.npmi = report.mean_npmi;
      row.wetc_pw = report.mean_wetc_pw;
      row.wetc_c = report.mean_wetc_c;
    }
    if (!std::isfinite(row.test_perplexity) || !std::isfinite(row.elbo)) {
      throw TrainingAborted(epoch, batches.size(), trace);
    }
    if (options.record_wall_time) {
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    trace.push_back(row);
    if (options.on_epoch) options.on_epoch(row, model);
  }
  return {std::move(model), std::move(trace), noise_rng.state()};
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); }

std::optional<double> opt_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string format_trace(const Trace& trace, TraceFormat format) {
  if (trace.empty()) throw ContractError("cannot export an empty trace");
  if (format == TraceFormat::csv) {
    std::string out = "epoch,elbo,train_ppl,test_ppl,npmi,wetc_pw,wetc_c,wall_seconds\n";
    for (const auto& r : trace) {
      out += std::to_string(r.epoch) + ',' + fmt17(r.elbo) + ',' + fmt17(r.train_perplexity) + ',' +
             fmt17(r.test_perplexity) + ',' + fmt_opt(r.npmi) + ',' + fmt_opt(r.wetc_pw) + ',' +
             fmt_opt(r.wetc_c) + ',' + fmt_opt(r.wall_seconds) + '\n';
    }
    return out;
  }
  // JSON numbers are written as raw 17-digit literals so the text matches the CSV.
  std::string out = "[\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& r = trace[i];
    auto num = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string("null"); };
    out += "  {\"epoch\": " + std::to_string(r.epoch) + ", \"elbo\": " + fmt17(r.elbo) +
           ", \"train_ppl\": " + fmt17(r.train_perplexity) + ", \"test_ppl\": " +
           fmt17(r.test_perplexity) + ", \"npmi\": " + num(r.npmi) + ", \"wetc_pw\": " +
           num(r.wetc_pw) + ", \"wetc_c\": " + num(r.wetc_c) + ", \"wall_seconds\": " +
           num(r.wall_seconds) + "}";
    out += i + 1 < trace.size() ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

void export_trace(const Trace& trace, const std::filesystem::path& destination, TraceFormat format) {
  io::write_file(destination, format_trace(trace, format));
}

Trace parse_trace_json(std::string_view text) {
  Trace trace;
  for (const auto& j : nlohmann::json::parse(text)) {
    TraceRow r;
    r.epoch = j.at("epoch").get<std::size_t>();
    r.elbo = j.at("elbo").get<double>();
    r.train_perplexity = j.at("train_ppl").get<double>();
    r.test_perplexity = j.at("test_ppl").get<double>();
    r.npmi = opt_from_json(j.at("npmi"));
    r.wetc_pw = opt_from_json(j.at("wetc_pw"));
    r.wetc_c = opt_from_json(j.at("wetc_c"));
    r.wall_seconds = opt_from_json(j.at("wall_seconds"));
    trace.push_back(r);
  }
  return trace;
}

}  // namespace ntm
