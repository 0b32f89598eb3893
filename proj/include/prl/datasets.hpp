#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prl/game.hpp"
#include "prl/tensor.hpp"

namespace prl {

/// One-hot labels for one objective.
struct LabelSet {
  std::string name;
  Matrix onehot;                         // N×C
  std::vector<std::string> class_names;  // C entries
  std::optional<Role> role;              // suggested role, set by generators

  std::size_t num_classes() const { return onehot.cols(); }
};

/// Per-column statistics used to z-score features.
struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct LabeledDataset {
  Matrix X;  // N×d
  std::vector<LabelSet> labels;
  std::vector<std::string> feature_names;
  std::optional<NormalizationStats> normalization;

  std::size_t size() const { return X.rows(); }
  std::size_t dim() const { return X.cols(); }
  bool has_label(const std::string& name) const;
  const LabelSet& label(const std::string& name) const;
  /// Objective names carrying the given suggested role, in label order.
  std::vector<std::string> names_with_role(Role role) const;
  /// Throws DataError unless every label matrix has N one-hot rows.
  void validate() const;
};

/// Row subset (labels and metadata follow).
LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> rows);
/// Row concatenation; both datasets must carry the same objectives.
LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

std::vector<std::size_t> class_indices(const Matrix& onehot);
Matrix onehot_from_indices(std::span<const std::size_t> classes, std::size_t num_classes);
/// Fraction of rows per class.
std::vector<double> class_proportions(const Matrix& onehot);

// ---------------------------------------------------------------------------
// Synthetic generators. All are deterministic under (parameters, seed).

/// Four 2-D clusters at (-0.5,-0.5), (-0.5,1.5), (1.5,-1.5), (1.5,1.5).
/// "color" (ally) splits on x, "shape" (adversary) splits on y.
LabeledDataset gen_quadrant(std::size_t n_per_cluster, double sigma, std::uint64_t seed);

/// Two annuli around the origin. "ring" (ally): inner vs outer; "half"
/// (adversary): upper vs lower half-plane. Radial noise is truncated at ±2σ,
/// so the gap between rings exceeds 4σ whenever outer − inner > 8σ.
LabeledDataset gen_circle(std::size_t n_per_group, double inner_radius, double outer_radius, double sigma,
                          std::uint64_t seed);

enum class OctantRoles { two_allies_one_adversary, one_ally_two_adversaries };

/// Eight 3-D clusters centred at (±c, ±c, ±c) with one binary label per axis
/// ("axis_x", "axis_y", "axis_z"). The roles choose which axes are allies.
LabeledDataset gen_octant(std::size_t n_per_cluster, double sigma, std::uint64_t seed, OctantRoles roles,
                          double center = 1.5);

/// Four classes at (1,1), (1,2), (2,1), (2,2). "color" (ally) is the x
/// coordinate group, "shape" (adversary) the y group. Noise along x has std
/// ally_sigma and along y adv_sigma, so each objective's overlap is swept
/// independently.
LabeledDataset gen_overlap_grid(std::size_t n_per_class, double ally_sigma, double adv_sigma, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CSV ingestion.

struct CsvObjective {
  std::string name;    // objective name in the dataset
  std::string column;  // CSV column holding the raw value
  std::optional<Role> role;
  /// raw value → class name. Values absent from the map are errors unless
  /// they are missing-value tokens, in which case the row is dropped.
  std::map<std::string, std::string> classes;
};

struct CsvSchema {
  std::vector<std::string> numeric;
  std::vector<std::string> categorical;
  std::vector<CsvObjective> objectives;
  std::vector<std::string> missing_tokens{"", "?"};
  bool trim_whitespace = true;
  /// Also drop rows with missing feature values (otherwise they are errors).
  bool drop_missing_features = true;
};

struct CsvReport {
  std::size_t rows_read = 0;
  std::size_t dropped_missing_objective = 0;
  std::size_t dropped_missing_feature = 0;
};

/// RFC-4180 CSV with a header row. Categorical features are one-hot expanded
/// (levels in sorted order), numeric features pass through.
LabeledDataset load_csv(const std::string& path, const CsvSchema& schema, CsvReport* report = nullptr);
LabeledDataset load_csv(std::istream& in, const CsvSchema& schema, CsvReport* report = nullptr);

/// RFC-4180 record splitting (quoted fields, doubled quotes, embedded newlines).
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Normalization, splitting and sharding.

NormalizationStats fit_normalization(const Matrix& X);
Matrix normalize(const Matrix& X, const NormalizationStats& stats);
Matrix denormalize(const Matrix& X, const NormalizationStats& stats);

struct Split {
  LabeledDataset train;
  LabeledDataset test;
};

/// Stratified by `stratify_by` (default: first ally-suggested objective, else
/// the first objective). When normalize is set, statistics are fit on train
/// and applied to both halves.
Split split(const LabeledDataset& ds, double train_fraction, std::uint64_t seed, bool normalize = true,
            const std::string& stratify_by = {});

enum class ShardMode { iid, label_skew, variance_ramp };

std::string_view to_string(ShardMode m);
ShardMode parse_shard_mode(std::string_view s);

struct ShardPlan {
  std::size_t nodes = 1;
  ShardMode mode = ShardMode::iid;
  double dirichlet_concentration = 0.5;  // label_skew
  std::string skew_objective;            // label_skew; default first ally objective
  std::size_t ramp_n_per_class = 250;    // variance_ramp
  double ramp_variance_step = 0.1;       // node k (1-based) has σ² = step·k
};

/// Exact disjoint partition for iid/label_skew; per-node regeneration with
/// gen_overlap_grid for variance_ramp (the input dataset is then unused).
std::vector<LabeledDataset> shard(const LabeledDataset& ds, const ShardPlan& plan, std::uint64_t seed);

// ---------------------------------------------------------------------------
// "PRLD" dataset cache.

void save_dataset(std::ostream& os, const LabeledDataset& ds);
LabeledDataset load_dataset(std::istream& is);
void save_dataset(const std::string& path, const LabeledDataset& ds);
LabeledDataset load_dataset(const std::string& path);

}  // namespace prl
