#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prl/datasets.hpp"
#include "prl/deigan.hpp"
#include "prl/eigan.hpp"

namespace prl {

struct DatasetSpec {
  std::string source = "generator";  // generator | csv | cache
  std::string generator = "quadrant";  // quadrant | circle | octant | overlap
  std::size_t n_per_cluster = 250;
  double sigma = 0.5;
  double ally_sigma = 0.5;  // overlap generator
  double adv_sigma = 0.5;
  std::string octant_roles = "two_allies_one_adversary";
  double circle_inner = 1.0;
  double circle_outer = 3.0;
  std::string path;  // csv or cache file
  CsvSchema csv;
  double split_fraction = 0.7;
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
};

struct GameSpec {
  std::vector<std::string> allies;  // empty: the dataset's suggested roles
  std::vector<std::string> adversaries;
  double alpha = 0.5;
  /// Explicit per-objective weights; when set they replace the α split.
  std::map<std::string, double> weights;
  std::string loss_form = "normalized";
  double lr_encoder = 1e-2;
  double lr_ally = 1e-2;
  double lr_adversary = 1e-2;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::size_t encoder_dim = 2;
  std::string discriminator_update = "post_update";
};

struct FedSpec {
  std::size_t nodes = 1;
  std::size_t delta = 1;
  double phi = 1.0;
  std::size_t rounds = 0;  // 0: ceil(game.epochs / delta)
  std::string shard = "iid";
  double dirichlet = 0.5;
  std::string download_mask = "per_node";
  std::string aggregation = "zero_fill";
  /// all: every node carries every adversary. split: adversary j goes to the
  /// j-th contiguous block of nodes.
  std::string node_adversaries = "all";
  bool parallel = true;
};

struct EvalSpec {
  std::vector<std::size_t> probe_hidden{32};
  std::size_t probe_epochs = 60;
  double probe_lr = 0.05;
  std::size_t probe_batch = 32;
};

struct BaselineSpec {
  double epsilon = 1.0;
  double variance = 0.99;
  std::size_t ae_epochs = 100;
  double ae_lr = 1e-2;
  std::vector<std::size_t> ae_hidden{16};
};

struct SweepSpec {
  std::string axis;  // alpha | phi | delta | nodes | encoder_dim | ally_sigma | adv_sigma
  std::vector<double> values;
  std::size_t repetitions = 1;
};

struct TuneSpec {
  double target_ce = 0.0;  // 0: train EIGAN and use its adversary CE
  double tolerance = 0.02;
  std::string objective;  // default: first adversary
  double eps_lo = 1e-2;
  double eps_hi = 1e3;
};

struct ExperimentConfig {
  std::string output_dir = "runs";
  std::string trainer = "eigan";  // eigan | deigan | pca | autoencoder | laplace | unencoded
  DatasetSpec dataset;
  GameSpec game;
  ArchitectureConfig arch;
  FedSpec fed;
  EvalSpec eval;
  BaselineSpec baseline;
  SweepSpec sweep;
  TuneSpec tune;
  std::uint64_t seed = 0;

  std::uint64_t data_seed() const { return dataset.seed.value_or(seed); }
  /// Throws ConfigError on invalid enum strings or out-of-range values.
  void validate() const;
};

/// Parses a JSON object whose keys are dotted paths ("game.alpha"). Unknown
/// keys and ill-typed values are ConfigErrors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Every key with its current value, keys sorted; the canonical form.
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);
/// SHA-256 hex of the compact canonical form.
std::string config_hash(const ExperimentConfig& cfg);
std::vector<std::string> config_keys();

/// Applies one "key=value" override; value is parsed as JSON, falling back
/// to a plain string.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

}  // namespace prl
