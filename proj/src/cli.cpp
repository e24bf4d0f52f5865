#include "ntm/cli.hpp"

#include <openssl/opensslv.h>
#include <zlib.h>

#include <filesystem>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "ntm/coherence.hpp"
#include "ntm/corpus.hpp"
#include "ntm/embeddings.hpp"
#include "ntm/error.hpp"
#include "ntm/io.hpp"
#include "ntm/models.hpp"
#include "ntm/training.hpp"

namespace ntm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string absolute(const std::string& path) {
  if (path.empty()) return {};
  return fs::absolute(path).lexically_normal().string();
}

json input_entry(const std::string& path) {
  if (path.empty()) return nullptr;
  if (!fs::exists(path)) throw IoError("input not found: " + path);
  return {{"path", absolute(path)}, {"sha256", io::sha256_file(path)}};
}

json build_info() {
  return {{"tool", kToolVersion},
          {"compiler", __VERSION__},
          {"cplusplus", __cplusplus},
#if defined(_OPENMP)
          {"openmp", _OPENMP},
#else
          {"openmp", nullptr},
#endif
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"zlib", ZLIB_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT}};
}

fs::path prepare_out_dir(const std::string& out_dir) {
  const fs::path dir = absolute(out_dir.empty() ? "." : out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, json options, json inputs) {
  json manifest = {{"command", command},
                   {"options", std::move(options)},
                   {"inputs", std::move(inputs)},
                   {"build", build_info()}};
  io::write_file(dir / (command + "-manifest.json"), manifest.dump(2) + "\n");
}

void emit(std::ostream& out, const json& j, const std::string& file) {
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!file.empty()) io::write_file(file, text);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Runs a command body, mapping exceptions onto exit codes.
template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const TrainingAborted& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalAbort;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
}

std::shared_ptr<const EmbeddingMatrix> load_embeddings_for(const std::string& path,
                                                           const Vocabulary& vocab,
                                                           std::ostream& err) {
  if (path.empty()) return nullptr;
  EmbeddingLoad load = load_embeddings(path, vocab);
  for (const auto& w : load.warnings) err << "warning: " << w << "\n";
  err << "embeddings: dim " << load.embeddings.dim() << ", " << load.oov_count << " of "
      << vocab.size() << " words out of vocabulary\n";
  return std::make_shared<const EmbeddingMatrix>(std::move(load.embeddings));
}

std::optional<CooccurrenceStats> load_stats_for(const std::string& path, const VocabularyPtr& vocab) {
  if (path.empty()) return std::nullopt;
  CooccurrenceStats stats = CooccurrenceStats::load(path);
  if (stats.vocabulary().digest() != vocab->digest()) stats = stats.reindexed(vocab);
  return stats;
}

// Checkpoint plus the vocabulary file it must agree with.
struct LoadedModel {
  Checkpoint checkpoint;
  VocabularyPtr vocabulary;
};

LoadedModel load_model_with_vocab(const std::string& checkpoint_path, const std::string& vocab_path) {
  LoadedModel m{load_checkpoint(checkpoint_path), load_vocabulary(vocab_path)};
  if (m.vocabulary->digest() != m.checkpoint.vocabulary_digest) {
    throw ConfigError("vocabulary " + vocab_path + " does not match the checkpoint's vocabulary");
  }
  return m;
}

json topic_listing(const Tensor& w, const Vocabulary& vocab, const CoherenceReport& report) {
  json topics = json::array();
  for (std::size_t k = 0; k < report.topics.size(); ++k) {
    json words = json::array();
    for (std::size_t idx : report.topics[k]) {
      words.push_back({{"word", vocab.word(idx)}, {"weight", w(idx, k)}});
    }
    json entry = {{"topic", k}, {"words", std::move(words)}};
    if (report.per_topic_npmi) entry["npmi"] = (*report.per_topic_npmi)[k];
    if (report.per_topic_wetc_pw) entry["wetc_pw"] = (*report.per_topic_wetc_pw)[k];
    if (report.per_topic_wetc_c) entry["wetc_c"] = (*report.per_topic_wetc_c)[k];
    topics.push_back(std::move(entry));
  }
  return topics;
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto kind = parse_model_kind(args.model);
    if (!kind) throw ConfigError("unknown model '" + args.model + "'");
    const bool regularized = *kind == ModelKind::ntm_r || *kind == ModelKind::ntm_fr;
    if (!regularized && args.lambda && *args.lambda != 0.0) {
      throw ConfigError("--lambda applies only to ntm-r and ntm-fr");
    }
    const double lambda = regularized ? args.lambda.value_or(kDefaultCoherenceWeight) : 0.0;
    const bool needs_embeddings =
        lambda > 0.0 || *kind == ModelKind::ntm_f || *kind == ModelKind::ntm_fr;
    if (needs_embeddings && args.embeddings.empty()) {
      throw ConfigError("model " + args.model + " requires --embeddings");
    }
    const auto scope = parse_coherence_scope(args.lambda_scope);
    if (!scope) throw ConfigError("--lambda-scope must be batch or document");
    if (args.trace_format != "csv" && args.trace_format != "json") {
      throw ConfigError("--trace-format must be csv or json");
    }
    if (args.topics == 0 || args.batch_size == 0 || args.mc_train == 0 || args.mc_eval == 0 ||
        args.npmi_every == 0 || args.top_n < 2) {
      throw ConfigError("--topics, --batch-size, --mc-train, --mc-eval, --npmi-every must be "
                        "positive and --top-n at least 2");
    }
    if (!(args.lr >= 0.0)) throw ConfigError("--lr must be nonnegative");

    const fs::path dir = prepare_out_dir(args.out_dir);
    const json options = {{"model", args.model},       {"topics", args.topics},
                          {"epochs", args.epochs},     {"batch_size", args.batch_size},
                          {"lr", args.lr},             {"lambda", lambda},
                          {"lambda_scope", args.lambda_scope},
                          {"mc_train", args.mc_train}, {"mc_eval", args.mc_eval},
                          {"seed", args.seed},         {"test_fraction", args.test_fraction},
                          {"trace_format", args.trace_format}, {"npmi_every", args.npmi_every},
                          {"top_n", args.top_n},       {"record_time", args.record_time},
                          {"out_dir", dir.string()},
                          {"adadelta", {{"rho", AdadeltaConfig{}.rho}, {"epsilon", AdadeltaConfig{}.epsilon}}}};
    const json inputs = {{"docword", input_entry(args.docword)},
                         {"vocab", input_entry(args.vocab)},
                         {"embeddings", input_entry(args.embeddings)},
                         {"cooc", input_entry(args.cooc)}};
    write_manifest(dir, "train", options, inputs);

    CorpusLoad load = load_uci_bow(args.docword, args.vocab);
    if (load.dropped_documents > 0) {
      err << "dropped " << load.dropped_documents << " empty documents\n";
    }
    const TrainTestSplit parts = split(load.corpus, args.test_fraction, args.seed);
    const VocabularyPtr vocab = load.corpus.vocabulary;
    const auto embeddings = load_embeddings_for(args.embeddings, *vocab, err);
    const auto stats = load_stats_for(args.cooc, vocab);

    ModelConfig config = ModelConfig::for_kind(*kind, vocab->size(), args.topics, lambda);
    config.coherence_scope = *scope;
    config.mc_samples_train = args.mc_train;
    config.mc_samples_eval = args.mc_eval;
    config.seed = args.seed;

    TrainOptions train_options;
    train_options.epochs = args.epochs;
    train_options.batch_size = args.batch_size;
    train_options.optimizer.learning_rate = args.lr;
    train_options.npmi_every = args.npmi_every;
    train_options.top_n = args.top_n;
    train_options.record_wall_time = args.record_time;
    train_options.on_epoch = [&err](const TraceRow& row, const NeuralTopicModel&) {
      err << "epoch " << row.epoch << " elbo " << row.elbo << " test_ppl " << row.test_perplexity;
      if (row.wetc_c) err << " wetc_c " << *row.wetc_c;
      if (row.npmi) err << " npmi " << *row.npmi;
      err << "\n";
    };

    const TraceFormat format = args.trace_format == "csv" ? TraceFormat::csv : TraceFormat::json;
    const fs::path trace_path = dir / ("trace." + args.trace_format);
    auto write_trace = [&](const Trace& trace) {
      if (trace.empty()) {
        io::write_file(trace_path, format == TraceFormat::csv
                                       ? "epoch,elbo,train_ppl,test_ppl,npmi,wetc_pw,wetc_c,wall_seconds\n"
                                       : "[]\n");
      } else {
        export_trace(trace, trace_path, format);
      }
    };

    io::write_file(dir / "test_docword.txt", format_uci_docword(parts.test));
    TrainResult result = [&] {
      try {
        return train(config, train_options, parts.train, parts.test, embeddings,
                     stats ? &*stats : nullptr);
      } catch (const TrainingAborted& e) {
        write_trace(e.trace());
        throw;
      }
    }();
    write_trace(result.trace);
    save_checkpoint(dir / "checkpoint.ntm",
                    make_checkpoint(result.model, vocab->digest(), result.rng_state));

    json summary = {{"model", args.model},
                    {"epochs", result.trace.size()},
                    {"train_documents", parts.train.size()},
                    {"test_documents", parts.test.size()},
                    {"checkpoint", (dir / "checkpoint.ntm").string()},
                    {"trace", trace_path.string()}};
    if (!result.trace.empty()) {
      const TraceRow& last = result.trace.back();
      summary["final"] = {{"elbo", last.elbo},
                          {"test_perplexity", last.test_perplexity},
                          {"npmi", optional_number(last.npmi)},
                          {"wetc_pw", optional_number(last.wetc_pw)},
                          {"wetc_c", optional_number(last.wetc_c)}};
    }
    emit(out, summary, "");
    return kSuccess;
  });
}

int cmd_topics(const TopicsArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const fs::path dir = prepare_out_dir(args.out_dir);
    write_manifest(dir, "topics",
                   {{"top_n", args.top_n}, {"out", absolute(args.out)}, {"out_dir", dir.string()}},
                   {{"checkpoint", input_entry(args.checkpoint)},
                    {"vocab", input_entry(args.vocab)},
                    {"embeddings", input_entry(args.embeddings)},
                    {"cooc", input_entry(args.cooc)}});

    const LoadedModel loaded = load_model_with_vocab(args.checkpoint, args.vocab);
    const NeuralTopicModel model = model_from_checkpoint(loaded.checkpoint);
    if (args.top_n < 2 || args.top_n > loaded.vocabulary->size()) {
      throw ConfigError("top-N must lie in [2, |V|=" + std::to_string(loaded.vocabulary->size()) + "]");
    }
    auto embeddings = load_embeddings_for(args.embeddings, *loaded.vocabulary, err);
    if (!embeddings) embeddings = model.embeddings_ptr();
    const auto stats = load_stats_for(args.cooc, loaded.vocabulary);

    const Tensor w = model.decoder_matrix();
    const CoherenceReport report =
        evaluate_coherence(w, args.top_n, stats ? &*stats : nullptr, embeddings.get());
    json result = {{"topics", topic_listing(w, *loaded.vocabulary, report)},
                   {"mean_npmi", optional_number(report.mean_npmi)},
                   {"mean_wetc_pw", optional_number(report.mean_wetc_pw)},
                   {"mean_wetc_c", optional_number(report.mean_wetc_c)}};
    if (!report.mean_npmi) result.erase("mean_npmi");
    emit(out, result, args.out);
    return kSuccess;
  });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const fs::path dir = prepare_out_dir(args.out_dir);
    write_manifest(dir, "eval",
                   {{"top_n", args.top_n},
                    {"mc_eval", args.mc_eval ? json(*args.mc_eval) : json(nullptr)},
                    {"seed", args.seed},
                    {"out", absolute(args.out)},
                    {"out_dir", dir.string()}},
                   {{"checkpoint", input_entry(args.checkpoint)},
                    {"docword", input_entry(args.docword)},
                    {"vocab", input_entry(args.vocab)},
                    {"embeddings", input_entry(args.embeddings)},
                    {"cooc", input_entry(args.cooc)}});

    LoadedModel loaded = load_model_with_vocab(args.checkpoint, args.vocab);
    if (args.mc_eval) {
      if (*args.mc_eval == 0) throw ConfigError("--mc-eval must be at least 1");
      loaded.checkpoint.config.mc_samples_eval = *args.mc_eval;
    }
    const NeuralTopicModel model = model_from_checkpoint(loaded.checkpoint);
    if (args.top_n < 2 || args.top_n > loaded.vocabulary->size()) {
      throw ConfigError("top-N must lie in [2, |V|=" + std::to_string(loaded.vocabulary->size()) + "]");
    }
    const CorpusLoad test = [&] {
      CorpusLoad l = parse_uci_bow(io::read_file(args.docword), loaded.vocabulary, args.docword);
      return l;
    }();
    auto embeddings = load_embeddings_for(args.embeddings, *loaded.vocabulary, err);
    if (!embeddings) embeddings = model.embeddings_ptr();
    const auto stats = load_stats_for(args.cooc, loaded.vocabulary);

    const PerplexityReport ppl = perplexity(test.corpus, model, args.seed);
    const Tensor w = model.decoder_matrix();
    const CoherenceReport report =
        evaluate_coherence(w, args.top_n, stats ? &*stats : nullptr, embeddings.get());

    json result = {{"test_perplexity", ppl.perplexity},
                   {"test_perplexity_mean_latent", ppl.mean_latent_perplexity},
                   {"documents", ppl.documents},
                   {"dropped_documents", test.dropped_documents},
                   {"likelihood_clamp_events", ppl.clamp_events},
                   {"mc_samples_eval", model.config().mc_samples_eval},
                   {"mean_npmi", optional_number(report.mean_npmi)},
                   {"mean_wetc_pw", optional_number(report.mean_wetc_pw)},
                   {"mean_wetc_c", optional_number(report.mean_wetc_c)},
                   {"per_topic", topic_listing(w, *loaded.vocabulary, report)}};
    if (!report.mean_npmi) result.erase("mean_npmi");
    emit(out, result, args.out);
    return kSuccess;
  });
}

int cmd_cooc(const CoocArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (args.window < 2) throw ConfigError("--window must be at least 2");
    const fs::path dir = prepare_out_dir(args.out_dir);
    const fs::path cache = args.out.empty() ? dir / "cooc.txt" : fs::path(absolute(args.out));
    write_manifest(dir, "cooc",
                   {{"window", args.window}, {"out", cache.string()}, {"out_dir", dir.string()}},
                   {{"reference", input_entry(args.reference)}, {"vocab", input_entry(args.vocab)}});

    const VocabularyPtr vocab = load_vocabulary(args.vocab);
    const auto documents = load_reference_corpus(args.reference);
    std::size_t tokens = 0;
    for (const auto& d : documents) tokens += d.size();
    if (tokens == 0) throw ConfigError("reference corpus " + args.reference + " has no tokens");
    const CooccurrenceStats stats = count_cooccurrence(documents, vocab, args.window);
    if (stats.covered_words() == 0) {
      throw ConfigError("no vocabulary word occurs in the reference corpus");
    }
    stats.save(cache);
    emit(out,
         {{"cache", cache.string()},
          {"window_size", stats.window_size()},
          {"documents", documents.size()},
          {"total_windows", stats.total_windows()},
          {"covered_words", stats.covered_words()},
          {"vocab_size", vocab->size()},
          {"coverage", static_cast<double>(stats.covered_words()) / static_cast<double>(vocab->size())}},
         "");
    return kSuccess;
  });
}

int cmd_correlate(const CorrelateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const fs::path dir = prepare_out_dir(args.out_dir);
    write_manifest(dir, "correlate", {{"json", args.json}, {"out_dir", dir.string()}},
                   {{"ratings", input_entry(args.ratings)},
                    {"cooc", input_entry(args.cooc)},
                    {"embeddings", input_entry(args.embeddings)}});

    const CooccurrenceStats stats = CooccurrenceStats::load(args.cooc);
    const auto embeddings = load_embeddings_for(args.embeddings, stats.vocabulary(), err);
    const RatedTopicSet rated = load_ratings(args.ratings);
    const CorrelationTable table = correlation_study(rated, stats, *embeddings);

    json rows = json::array();
    for (const auto& r : table.rows) {
      rows.push_back({{"metric", r.metric},
                      {"pearson", optional_number(r.pearson)},
                      {"spearman", optional_number(r.spearman)}});
    }
    const json result = {{"rows", rows},
                         {"evaluated_topics", table.evaluated_topics},
                         {"skipped_unresolved", table.skipped_unresolved},
                         {"skipped_zero_embedding", table.skipped_zero_embedding}};
    io::write_file(dir / "correlation.json", result.dump(2) + "\n");
    if (args.json) {
      emit(out, result, "");
      return kSuccess;
    }
    auto cell = [](const std::optional<double>& v) {
      char buf[32];
      if (!v) return std::string("     n/a");
      std::snprintf(buf, sizeof buf, "%8.4f", *v);
      return std::string(buf);
    };
    out << "metric    pearson  spearman\n";
    for (const auto& r : table.rows) {
      char name[16];
      std::snprintf(name, sizeof name, "%-8s", r.metric.c_str());
      out << name << cell(r.pearson) << "  " << cell(r.spearman) << "\n";
    }
    out << "evaluated " << table.evaluated_topics << " topics; skipped "
        << table.skipped_unresolved << " unresolved, " << table.skipped_zero_embedding
        << " without embeddings\n";
    return kSuccess;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural variational topic models with coherence-aware training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  auto out_dir_option = [](CLI::App* sub, std::string& target) {
    sub->add_option("--out-dir", target, "Output directory")->envname(kOutDirEnv);
  };

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a topic model and record a per-epoch trace");
  train->add_option("--model", train_args.model, "ntm, nvdm, gsm, ntm-r, ntm-f or ntm-fr")
      ->required()
      ->check(CLI::IsMember({"ntm", "nvdm", "gsm", "ntm-r", "ntm-f", "ntm-fr"}));
  train->add_option("-k,--topics", train_args.topics, "Number of topics")->capture_default_str();
  train->add_option("--epochs", train_args.epochs)->capture_default_str();
  train->add_option("--batch-size", train_args.batch_size)->capture_default_str();
  train->add_option("--lr", train_args.lr, "Adadelta step multiplier")->capture_default_str();
  train->add_option("--lambda", train_args.lambda, "Coherence weight (ntm-r, ntm-fr; default 50)");
  train->add_option("--lambda-scope", train_args.lambda_scope,
                    "Coherence term added once per batch or once per document")
      ->check(CLI::IsMember({"batch", "document"}))
      ->capture_default_str();
  train->add_option("--mc-train", train_args.mc_train)->capture_default_str();
  train->add_option("--mc-eval", train_args.mc_eval)->capture_default_str();
  train->add_option("--seed", train_args.seed)->capture_default_str();
  train->add_option("--docword", train_args.docword, "UCI docword file")->required();
  train->add_option("--vocab", train_args.vocab, "UCI vocab file")->required();
  train->add_option("--test-fraction", train_args.test_fraction)->capture_default_str();
  train->add_option("--embeddings", train_args.embeddings, "Text word vectors");
  train->add_option("--cooc", train_args.cooc, "Co-occurrence cache for NPMI traces");
  out_dir_option(train, train_args.out_dir);
  train->add_option("--trace-format", train_args.trace_format)
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  train->add_option("--npmi-every", train_args.npmi_every)->capture_default_str();
  train->add_option("-n,--top-n", train_args.top_n)->capture_default_str();
  train->add_flag("--record-time", train_args.record_time, "Record per-epoch wall time in the trace");

  TopicsArgs topics_args;
  CLI::App* topics = app.add_subcommand("topics", "List the top-N words of each topic");
  topics->add_option("--checkpoint", topics_args.checkpoint)->required();
  topics->add_option("--vocab", topics_args.vocab)->required();
  topics->add_option("-n,--top-n", topics_args.top_n)->capture_default_str();
  topics->add_option("--embeddings", topics_args.embeddings);
  topics->add_option("--cooc", topics_args.cooc);
  topics->add_option("--out", topics_args.out, "Also write the JSON here");
  out_dir_option(topics, topics_args.out_dir);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Held-out perplexity and topic coherence");
  eval->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval->add_option("--docword", eval_args.docword, "Test documents (UCI docword)")->required();
  eval->add_option("--vocab", eval_args.vocab)->required();
  eval->add_option("--embeddings", eval_args.embeddings);
  eval->add_option("--cooc", eval_args.cooc);
  eval->add_option("-n,--top-n", eval_args.top_n)->capture_default_str();
  eval->add_option("--mc-eval", eval_args.mc_eval);
  eval->add_option("--seed", eval_args.seed, "Seed for Monte Carlo evaluation")->capture_default_str();
  eval->add_option("--out", eval_args.out, "Also write the JSON here");
  out_dir_option(eval, eval_args.out_dir);

  CoocArgs cooc_args;
  CLI::App* cooc = app.add_subcommand("cooc", "Count sliding-window co-occurrences for NPMI");
  cooc->add_option("--reference", cooc_args.reference, "Plain text, one document per line")->required();
  cooc->add_option("--vocab", cooc_args.vocab)->required();
  cooc->add_option("--window", cooc_args.window)->capture_default_str();
  cooc->add_option("--out", cooc_args.out, "Cache path (default <out-dir>/cooc.txt)");
  out_dir_option(cooc, cooc_args.out_dir);

  CorrelateArgs correlate_args;
  CLI::App* correlate =
      app.add_subcommand("correlate", "Correlate NPMI and WETC with human topic ratings");
  correlate->add_option("--ratings", correlate_args.ratings)->required();
  correlate->add_option("--cooc", correlate_args.cooc)->required();
  correlate->add_option("--embeddings", correlate_args.embeddings)->required();
  correlate->add_flag("--json", correlate_args.json, "Print JSON instead of a table");
  out_dir_option(correlate, correlate_args.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kUsageError;
  }

  if (*train) return cmd_train(train_args, out, err);
  if (*topics) return cmd_topics(topics_args, out, err);
  if (*eval) return cmd_eval(eval_args, out, err);
  if (*cooc) return cmd_cooc(cooc_args, out, err);
  return cmd_correlate(correlate_args, out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("ntm");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ntm::cli
