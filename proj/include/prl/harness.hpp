#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prl/baselines.hpp"
#include "prl/config.hpp"
#include "prl/datasets.hpp"
#include "prl/deigan.hpp"
#include "prl/eigan.hpp"
#include "prl/metrics.hpp"

namespace prl {

// Exit codes shared by the CLI and run manifests.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitData = 4;

/// Maps the in-flight exception to an exit code and a short kind label.
std::pair<int, std::string> classify_exception(std::exception_ptr e);

struct ProbeSpec {
  std::vector<std::size_t> hidden{32};
  std::size_t epochs = 60;
  double lr = 0.05;
  std::size_t batch_size = 32;

  static ProbeSpec from(const EvalSpec& e);
};

/// Fresh softmax classifier trained with minibatch SGD on (Z, Y).
Network train_probe(const Matrix& Z, const Matrix& Y, const ProbeSpec& spec, RngStream& rng);

struct ObjectiveMetrics {
  double ce = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct EvalResult {
  std::map<std::string, ObjectiveMetrics> train;
  std::map<std::string, ObjectiveMetrics> test;
};

using Transform = std::function<Matrix(const Matrix&)>;

/// Applies the transform to both splits, trains one probe per objective on
/// the transformed training split, reports probe metrics on both splits.
EvalResult evaluate_encoder(const Transform& transform, const LabeledDataset& train, const LabeledDataset& test,
                            const std::vector<std::string>& objectives, const ProbeSpec& probes, std::uint64_t seed);
/// Same, for encodings computed by the caller.
EvalResult evaluate_encoded(const Matrix& ztrain, const Matrix& ztest, const LabeledDataset& train,
                            const LabeledDataset& test, const std::vector<std::string>& objectives,
                            const ProbeSpec& probes, std::uint64_t seed);
EvalResult evaluate_encoder(const Network& encoder, const LabeledDataset& train, const LabeledDataset& test,
                            const std::vector<std::string>& objectives, const ProbeSpec& probes, std::uint64_t seed);

struct PreparedData {
  LabeledDataset train;  // normalized
  LabeledDataset test;
  std::vector<LabeledDataset> nodes;  // training shards, empty unless trainer is deigan
  std::optional<CsvReport> csv_report;
};

/// Raw (unsplit, unnormalized) dataset described by the dataset section of a config.
LabeledDataset load_source(const DatasetSpec& spec, std::uint64_t seed);
/// Split, normalize and (for deigan or variance-ramp) shard. Variance-ramp
/// data is regenerated per node; the pooled node splits form train/test.
PreparedData prepare_data(const ExperimentConfig& cfg);

std::vector<std::string> ally_names(const ExperimentConfig& cfg, const LabeledDataset& ds);
std::vector<std::string> adversary_names(const ExperimentConfig& cfg, const LabeledDataset& ds);
/// Game over the configured objectives; `adversaries` restricts the adversary set.
GameConfig build_game(const ExperimentConfig& cfg, const LabeledDataset& ds,
                      const std::optional<std::vector<std::string>>& adversaries = std::nullopt);
EiganConfig build_eigan(const ExperimentConfig& cfg, const LabeledDataset& ds);
FedConfig build_fed(const ExperimentConfig& cfg);
std::vector<NodeSetup> build_nodes(const ExperimentConfig& cfg, const PreparedData& data);

struct RunOutcome {
  int exit_code = kExitOk;
  std::string status = "ok";
  std::string error;
  std::string dir;
  std::string manifest_path;
  std::string experiment_hash;
  EvalResult eval;
  std::optional<Network> encoder;
  std::vector<EpochRecord> history;
  /// Encoder loss on the test split against the trained discriminators
  /// (EIGAN and D-EIGAN runs only).
  std::optional<double> encoder_test_loss;
};

/// Train (per cfg.trainer) and evaluate, writing metrics.csv, a checkpoint
/// and manifest.json under output_dir. Failures are recorded in the manifest
/// and reflected in exit_code rather than thrown.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& subcommand = "run");

/// Writes the prepared splits (and node shards) as dataset caches.
RunOutcome run_generate_data(const ExperimentConfig& cfg);
/// Evaluates a saved encoder, or the raw features when encoder_path is empty.
RunOutcome run_evaluate(const ExperimentConfig& cfg, const std::string& encoder_path);

struct SweepOutcome {
  int exit_code = kExitOk;
  std::string dir;
  std::string manifest_path;
  std::string csv_path;
  std::vector<double> values;
  std::vector<std::vector<RunOutcome>> runs;  // [value][repetition]
};

/// Child config for one sweep point: the axis value applied, the data seed
/// pinned to the parent's and the training seed offset by the repetition.
ExperimentConfig sweep_point(const ExperimentConfig& cfg, double value, std::size_t repetition);
SweepOutcome run_sweep(const ExperimentConfig& cfg);

struct TuneResult {
  double epsilon = 0.0;
  double achieved_ce = 0.0;
  std::size_t iterations = 0;  // bisection steps, endpoint checks excluded
  bool converged = false;
  bool bracket_failure = false;
  std::vector<std::pair<double, double>> trace;  // (ε, CE) for every evaluation
};

inline constexpr std::size_t kMaxBisections = 20;

/// Test CE of a probe for `objective` trained on Laplace-encoded data.
double laplace_probe_ce(const LabeledDataset& train, const LabeledDataset& test, const std::string& objective,
                        double epsilon, const ProbeSpec& probes, std::uint64_t seed);

/// Log-space bisection on ε so that laplace_probe_ce matches target within
/// tolerance. Noise and probe seeds are fixed across evaluations.
TuneResult tune_dp_epsilon(const LabeledDataset& train, const LabeledDataset& test, const std::string& objective,
                           double target_ce, double tolerance, const ProbeSpec& probes, std::uint64_t seed,
                           double eps_lo, double eps_hi);
RunOutcome run_tune_dp(const ExperimentConfig& cfg);

/// CSV with columns z0..z{l-1} followed by one class-name column per objective.
void write_encoded_csv(const std::string& path, const Matrix& Z, const LabeledDataset& ds);

}  // namespace prl
