#pragma once

// Experiment orchestration: JSON configs, seeded sweeps, CSV output and the
// aggregation used for plotting.
//
// CSV contract (byte-exact): header `seed,episode,phase,return,wall_ms`, LF
// line endings, `.` decimals, shortest round-trip number formatting.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ne3/agents.hpp"
#include "ne3/dreem.hpp"
#include "ne3/env/environment.hpp"
#include "ne3/errors.hpp"

namespace ne3::harness {

/// A seed whose agent threw; the partial CSV and an error manifest are on disk.
class AgentFailureError : public Error {
 public:
  using Error::Error;
};

enum class EnvKind { Combolock, Maze, MountainCar };
enum class AgentKind { NeuralE3, Ue2, OfflineQOnly, Dreem, GreedyQ };

struct EnvSpec {
  EnvKind kind = EnvKind::Combolock;
  // combolock
  int horizon = 5;
  double flip_prob = 0.1;
  int noise_bits = -1;
  bool antishaped = false;
  /// Fixed layout seed; when absent each run seed also seeds the layout.
  std::optional<std::uint64_t> env_seed;
  // maze
  int size = 5;
  // maze and mountain car; 0 means the environment default
  int time_limit = 0;
};

struct DreemSpec {
  dreem::DreemConfig config;
  int perturbations = 30;  // class = truth + this many perturbations
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvSpec env;
  AgentKind agent = AgentKind::NeuralE3;
  agents::AgentConfig neural;  // neural_e3, ue2 and offline_q_only
  agents::GreedyQConfig greedy;
  DreemSpec dreem;
  std::vector<std::uint64_t> seeds = {0};
  bool record_timing = false;  // wall_ms stays 0 otherwise, keeping CSVs reproducible
  std::string output = "runs";
  int threads = 1;
};

/// Validates against the published schema and fills defaults. Unknown keys
/// and wrong types throw SchemaError naming the JSON path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config with every default spelled out.
nlohmann::json to_json(const ExperimentConfig& config);

/// FNV-1a 64 of to_json(config).dump(), as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

std::string to_string(EnvKind k);
std::string to_string(AgentKind k);

/// Fresh environment for one run seed.
std::unique_ptr<env::Environment> make_environment(const EnvSpec& spec, std::uint64_t seed);

struct CsvRow {
  std::uint64_t seed = 0;
  int episode = 0;
  agents::Phase phase = agents::Phase::Explore;
  double ret = 0.0;
  double wall_ms = 0.0;
};

inline constexpr const char* kCsvHeader = "seed,episode,phase,return,wall_ms";

/// Shortest decimal that round-trips.
std::string format_number(double x);
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);
/// Throws SchemaError("<path>:<line>", ...) on a malformed file.
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

/// One seed's episodes. Throws whatever the agent throws.
std::vector<CsvRow> run_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* maze_ascii = nullptr);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides config.output
  std::optional<int> threads;
  std::uint64_t seed_offset = 0;
  std::ostream* maze_ascii = nullptr;  // debug dump of every maze at reset
};

/// Applies NE3_OUT_DIR and NE3_THREADS where the options leave a field unset.
RunOptions with_environment_overrides(RunOptions options);

struct RunOutput {
  std::filesystem::path csv;
  std::filesystem::path manifest;
  nlohmann::json manifest_json;
};

/// Runs every seed (worker pool of `threads`), writes <out>/<name>.csv
/// ordered by (seed, episode) and <out>/<name>.manifest.json. On an agent
/// failure the completed seeds are still written, the manifest records the
/// error and AgentFailureError is thrown.
RunOutput run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct SummaryRow {
  int episode = 0;
  agents::Phase phase = agents::Phase::Explore;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  int n_seeds = 0;
};

/// Per-episode median, min and max across every (file, seed) series. All
/// series must share one episode grid and phase labels, else AlignmentError.
std::vector<SummaryRow> aggregate(const std::vector<std::vector<CsvRow>>& files);
std::vector<SummaryRow> aggregate(const std::vector<std::filesystem::path>& paths);

/// `episode,median,min,max,n_seeds`
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

struct LabeledInput {
  std::string label;
  std::filesystem::path path;
};

/// Plot-ready long format, `method,episode,phase,median,min,max,n_seeds`,
/// one aggregate per labeled input in the given order.
void write_plot_data(std::ostream& out, const std::vector<LabeledInput>& inputs);

}  // namespace ne3::harness
