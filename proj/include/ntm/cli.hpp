#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ntm::cli {

// Stable exit codes for scripting.
enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 2,
  kNumericalAbort = 3,
  kIoError = 4,
};

// Environment variable naming the default --out-dir.
inline constexpr const char* kOutDirEnv = "NTM_OUT_DIR";

struct TrainArgs {
  std::string model;
  std::size_t topics = 50;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double lr = 0.01;
  std::optional<double> lambda;
  std::string lambda_scope = "batch";
  std::size_t mc_train = 1;
  std::size_t mc_eval = 8;
  std::uint64_t seed = 1;
  std::string docword;
  std::string vocab;
  double test_fraction = 0.1;
  std::string embeddings;
  std::string cooc;
  std::string out_dir = ".";
  std::string trace_format = "csv";
  std::size_t npmi_every = 1;
  std::size_t top_n = 10;
  bool record_time = false;
};

struct TopicsArgs {
  std::string checkpoint;
  std::string vocab;
  std::size_t top_n = 10;
  std::string embeddings;
  std::string cooc;
  std::string out_dir = ".";
  std::string out;
};

struct EvalArgs {
  std::string checkpoint;
  std::string docword;
  std::string vocab;
  std::string embeddings;
  std::string cooc;
  std::size_t top_n = 10;
  std::optional<std::size_t> mc_eval;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string out;
};

struct CoocArgs {
  std::string reference;
  std::string vocab;
  std::size_t window = 10;
  std::string out_dir = ".";
  std::string out;
};

struct CorrelateArgs {
  std::string ratings;
  std::string cooc;
  std::string embeddings;
  std::string out_dir = ".";
  bool json = false;
};

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_topics(const TopicsArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_cooc(const CoocArgs& args, std::ostream& out, std::ostream& err);
int cmd_correlate(const CorrelateArgs& args, std::ostream& out, std::ostream& err);

// Parses argv (argv[0] is the program name) and runs one subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ntm::cli
