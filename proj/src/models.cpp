#include "ntm/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "json.hpp"

#include "ntm/coherence.hpp"
#include "ntm/error.hpp"
#include "ntm/io.hpp"

namespace ntm {

namespace {

constexpr std::string_view kCheckpointMagic = "NTMCKPT1";
constexpr double kTopicFactorStddev = 0.02;

struct KindInfo {
  ModelKind kind;
  std::string_view name;
};
constexpr KindInfo kKinds[] = {{ModelKind::ntm, "ntm"},     {ModelKind::nvdm, "nvdm"},
                               {ModelKind::gsm, "gsm"},     {ModelKind::ntm_r, "ntm-r"},
                               {ModelKind::ntm_f, "ntm-f"}, {ModelKind::ntm_fr, "ntm-fr"}};

}  // namespace

std::string_view to_string(ModelKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "unknown";
}

std::string_view to_string(CoherenceScope scope) {
  return scope == CoherenceScope::batch ? "batch" : "document";
}

std::optional<CoherenceScope> parse_coherence_scope(std::string_view name) {
  if (name == "batch") return CoherenceScope::batch;
  if (name == "document") return CoherenceScope::document;
  return std::nullopt;
}

std::string_view to_string(LatentActivation activation) {
  switch (activation) {
    case LatentActivation::relu: return "relu";
    case LatentActivation::identity: return "identity";
    case LatentActivation::softmax: return "softmax";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (const auto& k : kKinds)
    if (k.name == name) return k.kind;
  return std::nullopt;
}

std::optional<LatentActivation> parse_latent_activation(std::string_view name) {
  for (auto a : {LatentActivation::relu, LatentActivation::identity, LatentActivation::softmax})
    if (to_string(a) == name) return a;
  return std::nullopt;
}

ModelConfig ModelConfig::for_kind(ModelKind kind, std::size_t vocab_size, std::size_t topics,
                                  double lambda) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  c.topics = topics;
  switch (kind) {
    case ModelKind::ntm: break;
    case ModelKind::nvdm: c.activation = LatentActivation::identity; break;
    case ModelKind::gsm: c.activation = LatentActivation::softmax; break;
    case ModelKind::ntm_r: c.lambda = lambda; break;
    case ModelKind::ntm_f: c.factorized = true; break;
    case ModelKind::ntm_fr:
      c.factorized = true;
      c.lambda = lambda;
      break;
  }
  return c;
}

void ModelConfig::validate(const EmbeddingMatrix* embeddings) const {
  if (vocab_size == 0) throw ConfigError("vocabulary size must be positive");
  if (topics == 0) throw ConfigError("number of topics must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (mc_samples_train == 0 || mc_samples_eval == 0) {
    throw ConfigError("Monte Carlo sample counts must be at least 1");
  }
  if (lambda > 0.0 && !embeddings) {
    throw ConfigError("coherence regularization (lambda > 0) requires word embeddings");
  }
  if (factorized && !embeddings) throw ConfigError("factorized decoder requires word embeddings");
  if (embeddings && embeddings->rows() != vocab_size) {
    throw ConfigError("embedding matrix has " + std::to_string(embeddings->rows()) +
                      " rows for a vocabulary of " + std::to_string(vocab_size));
  }
}

std::vector<NamedTensor> parameter_layout(const ModelConfig& config, std::size_t embedding_dim) {
  const std::size_t v = config.vocab_size;
  const std::size_t k = config.topics;
  std::vector<NamedTensor> layout = {
      {"encoder.hidden1.weight", Tensor(v, 3 * k)},   {"encoder.hidden1.bias", Tensor(1, 3 * k)},
      {"encoder.hidden2.weight", Tensor(3 * k, 2 * k)}, {"encoder.hidden2.bias", Tensor(1, 2 * k)},
      {"encoder.mu.weight", Tensor(2 * k, k)},        {"encoder.mu.bias", Tensor(1, k)},
      {"encoder.log_sigma.weight", Tensor(2 * k, k)}, {"encoder.log_sigma.bias", Tensor(1, k)},
  };
  if (config.factorized) {
    layout.push_back({"decoder.topic_factor", Tensor(embedding_dim, k)});
  } else {
    layout.push_back({"decoder.weight", Tensor(v, k)});
  }
  layout.push_back({"decoder.bias", Tensor(1, v)});
  return layout;
}

NeuralTopicModel::NeuralTopicModel(ModelConfig config, std::vector<NamedTensor> parameters,
                                   std::shared_ptr<const EmbeddingMatrix> embeddings)
    : config_(config), parameters_(std::move(parameters)), embeddings_(std::move(embeddings)) {
  config_.validate(embeddings_.get());
  const auto layout = parameter_layout(config_, embeddings_ ? embeddings_->dim() : 0);
  if (layout.size() != parameters_.size()) throw ConfigError("parameter list does not match model layout");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i].name != parameters_[i].name || !layout[i].value.same_shape(parameters_[i].value)) {
      throw ConfigError("parameter " + std::to_string(i) + " expected " + layout[i].name + " " +
                        layout[i].value.shape_string() + ", got " + parameters_[i].name + " " +
                        parameters_[i].value.shape_string());
    }
  }
}

NeuralTopicModel NeuralTopicModel::zeros(const ModelConfig& config,
                                         std::shared_ptr<const EmbeddingMatrix> embeddings) {
  config.validate(embeddings.get());
  auto layout = parameter_layout(config, embeddings ? embeddings->dim() : 0);
  return NeuralTopicModel(config, std::move(layout), std::move(embeddings));
}

NeuralTopicModel NeuralTopicModel::initialize(const ModelConfig& config,
                                              std::shared_ptr<const EmbeddingMatrix> embeddings) {
  config.validate(embeddings.get());
  auto layout = parameter_layout(config, embeddings ? embeddings->dim() : 0);
  Rng rng(config.seed);
  for (auto& p : layout) {
    if (p.name.ends_with(".bias")) continue;
    if (p.name == "decoder.topic_factor") {
      p.value = rng.normal_tensor(p.value.rows(), p.value.cols(), kTopicFactorStddev);
      continue;
    }
    const double limit =
        std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
    p.value = rng.uniform_tensor(p.value.rows(), p.value.cols(), -limit, limit);
  }
  return NeuralTopicModel(config, std::move(layout), std::move(embeddings));
}

const Tensor& NeuralTopicModel::parameter(std::string_view name) const {
  for (const auto& p : parameters_)
    if (p.name == name) return p.value;
  throw ContractError("no parameter named " + std::string(name));
}

Tensor NeuralTopicModel::decoder_matrix() const {
  if (config_.factorized) {
    ad::Graph graph;
    ModelGraph bound(graph, *this, false);
    return bound.decoder_matrix().value();
  }
  return parameter("decoder.weight");
}

std::size_t NeuralTopicModel::decoder_parameter_count() const noexcept {
  return parameters_[parameters_.size() - 2].value.size() + parameters_.back().value.size();
}

std::size_t NeuralTopicModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : parameters_) n += p.value.size();
  return n;
}

NoiseSource zero_noise() {
  return [](std::size_t rows, std::size_t cols) { return Tensor(rows, cols); };
}

NoiseSource gaussian_noise(Rng& rng) {
  return [&rng](std::size_t rows, std::size_t cols) { return rng.normal_tensor(rows, cols); };
}

ModelGraph::ModelGraph(ad::Graph& graph, const NeuralTopicModel& model, bool trainable)
    : graph_(graph), model_(model) {
  for (const auto& p : model.parameters()) {
    leaves_.push_back(trainable ? graph.parameter(p.value) : graph.constant(p.value));
  }
}

ModelGraph::Encoding ModelGraph::encode(ad::Var x) {
  if (x.value().cols() != config().vocab_size) {
    throw DimensionError("encode: input " + x.value().shape_string() + " for vocabulary of " +
                         std::to_string(config().vocab_size));
  }
  auto dense = [&](ad::Var in, std::size_t layer) {
    return ad::add_row(ad::matmul(in, leaves_[2 * layer]), leaves_[2 * layer + 1]);
  };
  const ad::Var h1 = ad::activation(dense(x, 0), ad::Activation::sigmoid);
  const ad::Var pi = ad::activation(dense(h1, 1), ad::Activation::sigmoid);
  return {dense(pi, 2), dense(pi, 3)};
}

ad::Var ModelGraph::embeddings() {
  if (!embeddings_) {
    if (!model_.embeddings()) throw ConfigError("model has no embeddings");
    embeddings_ = graph_.constant(model_.embeddings()->matrix);
  }
  return *embeddings_;
}

ad::Var ModelGraph::decoder_matrix() {
  if (!decoder_matrix_) {
    const ad::Var factor = leaves_[8];
    decoder_matrix_ = config().factorized ? ad::matmul(embeddings(), factor) : factor;
  }
  return *decoder_matrix_;
}

ad::Var ModelGraph::decode(ad::Var z) {
  const ad::Var logits = ad::add_row(ad::matmul(z, ad::transpose(decoder_matrix())), leaves_[9]);
  return ad::activation(logits, ad::Activation::softmax_rows);
}

ad::Var sample_latent(ad::Var mu, ad::Var log_sigma, ad::Var eps, LatentActivation activation) {
  const ad::Var h = ad::add(mu, ad::mul(ad::activation(log_sigma, ad::Activation::exp), eps));
  switch (activation) {
    case LatentActivation::relu: return ad::activation(h, ad::Activation::relu);
    case LatentActivation::identity: return h;
    case LatentActivation::softmax: return ad::activation(h, ad::Activation::softmax_rows);
  }
  throw ContractError("unknown latent activation");
}

ad::Var log_likelihood(ad::Var x, ad::Var y, std::size_t* clamp_events) {
  if (clamp_events) {
    for (double v : y.value().values()) *clamp_events += v < kLikelihoodFloor;
  }
  const ad::Var log_y =
      ad::activation(ad::clamp_min(y, kLikelihoodFloor), ad::Activation::log);
  return ad::reduce(ad::mul(x, log_y), ad::Reduction::sum, ad::Axis::cols);
}

ad::Var kl_divergence(ad::Var mu, ad::Var log_sigma) {
  const ad::Var two_log_sigma = ad::scale(log_sigma, 2.0);
  const ad::Var terms =
      ad::sub(ad::sub(ad::add_scalar(two_log_sigma, 1.0), ad::mul(mu, mu)),
              ad::activation(two_log_sigma, ad::Activation::exp));
  return ad::scale(ad::reduce(terms, ad::Reduction::sum, ad::Axis::cols), -0.5);
}

ElboTerms elbo(ModelGraph& model, ad::Var x, std::size_t samples, const NoiseSource& noise) {
  if (samples == 0) throw ContractError("elbo needs at least one sample");
  ElboTerms terms;
  const auto enc = model.encode(x);
  const std::size_t batch = x.value().rows();
  std::optional<ad::Var> ll_sum;
  for (std::size_t s = 0; s < samples; ++s) {
    const ad::Var eps = model.graph().constant(noise(batch, model.config().topics));
    const ad::Var z = sample_latent(enc.mu, enc.log_sigma, eps, model.config().activation);
    const ad::Var ll = log_likelihood(x, model.decode(z), &terms.clamp_events);
    ll_sum = ll_sum ? ad::add(*ll_sum, ll) : ll;
  }
  terms.log_likelihood =
      samples == 1 ? *ll_sum : ad::scale(*ll_sum, 1.0 / static_cast<double>(samples));
  terms.kl = kl_divergence(enc.mu, enc.log_sigma);
  terms.per_document = ad::sub(terms.log_likelihood, terms.kl);
  terms.elbo = ad::reduce(terms.per_document, ad::Reduction::mean, ad::Axis::all);
  return terms;
}

Objective objective(ModelGraph& model, ad::Var x, const NoiseSource& noise,
                    std::size_t nominal_batch) {
  Objective obj;
  obj.elbo = elbo(model, x, model.config().mc_samples_train, noise);
  obj.value = obj.elbo.elbo;
  if (model.config().lambda > 0.0) {
    obj.coherence = coherence_regularizer(model.decoder_matrix(), model.embeddings());
    const ad::Var total = ad::reduce(*obj.coherence, ad::Reduction::sum, ad::Axis::all);
    double weight = model.config().lambda;
    if (model.config().coherence_scope == CoherenceScope::batch) {
      weight /= static_cast<double>(nominal_batch > 0 ? nominal_batch : x.value().rows());
    }
    obj.value = ad::add(obj.value, ad::scale(total, weight));
  }
  return obj;
}

PerplexityReport perplexity(const Corpus& corpus, const NeuralTopicModel& model,
                            std::uint64_t eval_seed, std::size_t chunk_size) {
  if (corpus.vocab_size() != model.config().vocab_size) {
    throw DimensionError("corpus vocabulary size " + std::to_string(corpus.vocab_size()) +
                         " differs from model vocabulary size " +
                         std::to_string(model.config().vocab_size));
  }
  if (chunk_size == 0) throw ContractError("chunk size must be positive");
  PerplexityReport report;
  Rng rng(eval_seed);
  const NoiseSource noise = gaussian_noise(rng);
  double stochastic_sum = 0.0;
  double mean_latent_sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < corpus.size(); start += chunk_size) {
    idx.resize(std::min(chunk_size, corpus.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    ad::Graph graph;
    ModelGraph bound(graph, model, false);
    const ad::Var x = graph.constant(densify(corpus, idx));
    const ElboTerms stochastic = elbo(bound, x, model.config().mc_samples_eval, noise);
    const ElboTerms mean_latent = elbo(bound, x, 1, zero_noise());
    report.clamp_events += stochastic.clamp_events + mean_latent.clamp_events;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto length = static_cast<double>(corpus.documents[idx[r]].length());
      if (length == 0.0) throw ContractError("perplexity of an empty document");
      stochastic_sum += stochastic.per_document.value()[r] / length;
      mean_latent_sum += mean_latent.per_document.value()[r] / length;
    }
  }
  report.documents = corpus.size();
  if (report.documents == 0) throw ContractError("perplexity of an empty corpus");
  const auto d = static_cast<double>(report.documents);
  report.perplexity = std::exp(-stochastic_sum / d);
  report.mean_latent_perplexity = std::exp(-mean_latent_sum / d);
  return report;
}

std::vector<std::vector<std::size_t>> top_words(const Tensor& w, std::size_t n) {
  if (n > w.rows()) {
    throw ContractError("top-" + std::to_string(n) + " requested from a vocabulary of " +
                        std::to_string(w.rows()));
  }
  std::vector<std::vector<std::size_t>> topics(w.cols());
  std::vector<std::size_t> order(w.rows());
  for (std::size_t k = 0; k < w.cols(); ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double va = w(a, k);
                        const double vb = w(b, k);
                        return va > vb || (va == vb && a < b);
                      });
    topics[k].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return topics;
}

// --- checkpoints -----------------------------------------------------------

namespace {

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"topics", c.topics},
          {"activation", std::string(to_string(c.activation))},
          {"factorized", c.factorized},
          {"lambda", c.lambda},
          {"coherence_scope", std::string(to_string(c.coherence_scope))},
          {"mc_samples_train", c.mc_samples_train},
          {"mc_samples_eval", c.mc_samples_eval},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.topics = j.at("topics").get<std::size_t>();
  const auto activation = parse_latent_activation(j.at("activation").get<std::string>());
  if (!activation) throw ConfigError("unknown latent activation in checkpoint");
  c.activation = *activation;
  c.factorized = j.at("factorized").get<bool>();
  c.lambda = j.at("lambda").get<double>();
  const auto scope = parse_coherence_scope(j.at("coherence_scope").get<std::string>());
  if (!scope) throw ConfigError("unknown coherence scope in checkpoint");
  c.coherence_scope = *scope;
  c.mc_samples_train = j.at("mc_samples_train").get<std::size_t>();
  c.mc_samples_eval = j.at("mc_samples_eval").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64(std::string_view bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

constexpr std::string_view kEmbeddingTensor = "decoder.embeddings";

}  // namespace

Checkpoint make_checkpoint(const NeuralTopicModel& model, std::string vocabulary_digest,
                           std::string rng_state) {
  Checkpoint c{model.config(), std::move(vocabulary_digest), std::move(rng_state), {}};
  c.tensors.assign(model.parameters().begin(), model.parameters().end());
  if (model.embeddings()) {
    c.tensors.push_back({std::string(kEmbeddingTensor), model.embeddings()->matrix});
  }
  return c;
}

NeuralTopicModel model_from_checkpoint(const Checkpoint& checkpoint) {
  std::vector<NamedTensor> params;
  std::shared_ptr<const EmbeddingMatrix> embeddings;
  for (const auto& t : checkpoint.tensors) {
    if (t.name == kEmbeddingTensor) {
      auto e = make_embeddings(t.value, false);
      e.normalized = true;
      embeddings = std::make_shared<const EmbeddingMatrix>(std::move(e));
    } else {
      params.push_back(t);
    }
  }
  return NeuralTopicModel(checkpoint.config, std::move(params), std::move(embeddings));
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  nlohmann::json header;
  header["format"] = "ntm-checkpoint";
  header["version"] = 1;
  header["config"] = config_to_json(checkpoint.config);
  header["vocabulary_digest"] = checkpoint.vocabulary_digest;
  header["rng_state"] = checkpoint.rng_state;
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : checkpoint.tensors) {
    header["tensors"].push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}});
  }
  const std::string header_text = header.dump();

  std::string out(kCheckpointMagic);
  append_u64(out, header_text.size());
  out += header_text;
  for (const auto& t : checkpoint.tensors) {
    for (double v : t.value.values()) append_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != kCheckpointMagic) {
    throw ParseError(source, 1, "not a model checkpoint");
  }
  const std::uint64_t header_len = read_u64(bytes, 8);
  if (header_len > bytes.size() - 16) throw ParseError(source, 1, "truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 1, std::string("bad checkpoint header: ") + e.what());
  }

  Checkpoint c;
  std::size_t at = 16 + header_len;
  try {
    if (header.at("format") != "ntm-checkpoint" || header.at("version") != 1) {
      throw ParseError(source, 1, "unsupported checkpoint format");
    }
    c.config = config_from_json(header.at("config"));
    c.vocabulary_digest = header.at("vocabulary_digest").get<std::string>();
    c.rng_state = header.at("rng_state").get<std::string>();
    for (const auto& t : header.at("tensors")) {
      const auto rows = t.at("rows").get<std::size_t>();
      const auto cols = t.at("cols").get<std::size_t>();
      if ((bytes.size() - at) / 8 < rows * cols) throw ParseError(source, 1, "truncated tensor data");
      std::vector<double> values(rows * cols);
      for (double& v : values) {
        v = std::bit_cast<double>(read_u64(bytes, at));
        at += 8;
      }
      c.tensors.push_back({t.at("name").get<std::string>(), Tensor(rows, cols, std::move(values))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 1, std::string("bad checkpoint header: ") + e.what());
  }
  if (at != bytes.size()) throw ParseError(source, 1, "trailing bytes after tensor data");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  io::write_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(io::read_file(path), path.string());
}

}  // namespace ntm
