#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prl/tensor.hpp"

namespace prl {

enum class Role { ally, adversary };

std::string_view to_string(Role r);

/// One discriminator objective and its importance weight.
struct ObjectiveSpec {
  std::string name;
  Role role = Role::ally;
  std::size_t num_classes = 2;
  double weight = 0.0;
};

/// How the encoder loss combines per-objective losses.
///  normalized: Σ α_Ai·L_Ai − Σ α_Vj·L_Vj with weights summing to one.
///  printed:    Σ L_Ai − α·Σ L_Vj, the unnormalized variant (needs scalar alpha).
enum class LossForm { normalized, printed };

struct GameConfig {
  std::vector<ObjectiveSpec> allies;
  std::vector<ObjectiveSpec> adversaries;
  std::optional<double> alpha;
  LossForm loss_form = LossForm::normalized;
  double lr_encoder = 1e-2;
  double lr_ally = 1e-2;
  double lr_adversary = 1e-2;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::size_t encoder_dim = 2;

  /// Throws ConfigError when the game is malformed (no allies/adversaries,
  /// weights not positive or not summing to one, ...).
  void validate() const;
  std::vector<const ObjectiveSpec*> objectives() const;
  const ObjectiveSpec* find(const std::string& name) const;
};

/// Builds a game with α_Ai = α/n and α_Vj = (1−α)/m. alpha must be in (0, 1).
/// Each entry is (name, class count).
GameConfig make_game(double alpha, const std::vector<std::pair<std::string, std::size_t>>& allies,
                     const std::vector<std::pair<std::string, std::size_t>>& adversaries);

/// Signed coefficient of an objective's CE in the encoder loss.
double encoder_coefficient(const GameConfig& cfg, const ObjectiveSpec& obj);

struct Prediction {
  Matrix yhat;  // soft predictions, rows sum to one
  Matrix y;     // one-hot truths
};

using PredictionBatch = std::map<std::string, Prediction>;

/// Mean over rows of −⟨y, log ŷ⟩ with the clamped log.
double cross_entropy(const Matrix& y, const Matrix& yhat);
/// Mean log-probability assigned to the true class (the empirical utility u).
double mean_log_likelihood(const Matrix& y, const Matrix& yhat);

double encoder_loss(const PredictionBatch& preds, const GameConfig& cfg);
/// Weighted ally utilities minus weighted adversary utilities. Computed from
/// log-likelihoods, independently of encoder_loss, and equal to its negation.
double minimax_score(const PredictionBatch& preds, const GameConfig& cfg);

/// Averages several node games into one: each objective's weight becomes
/// Σ_k α_k / K over the nodes that carry it, so objectives present on only
/// some nodes are scaled by (#nodes carrying it)/K.
GameConfig combine_node_games(const std::vector<GameConfig>& nodes);

// ---------------------------------------------------------------------------
// Overlap analysis between ally and adversary label sets.

struct LabeledObjective {
  std::string name;
  std::set<std::string> labels;
  double weight = 0.0;
};

struct SharedTerm {
  std::string ally;
  std::string adversary;
  std::set<std::string> labels;
  double coefficient = 0.0;  // α_A − α_V
  bool degenerate = false;   // equal weights: the shared term vanishes
  std::optional<Role> favored;
};

struct DisjointTerm {
  std::string ally;
  std::string adversary;
  std::set<std::string> ally_labels;
  std::set<std::string> adversary_labels;
  double ally_weight = 0.0;
  double adversary_weight = 0.0;
};

struct OverlapDecomposition {
  std::vector<SharedTerm> shared;
  std::vector<DisjointTerm> disjoint;
  bool has_overlap() const { return !shared.empty(); }
  bool any_degenerate() const;
};

/// Splits every ally/adversary pair into the part over shared labels, with
/// coefficient α_A − α_V, and the part over the remaining labels.
OverlapDecomposition overlap_decomposition(const std::vector<LabeledObjective>& allies,
                                           const std::vector<LabeledObjective>& adversaries);

// ---------------------------------------------------------------------------
// Closed-form best response of one adversary when the ally's target is a
// linear combination of the adversary targets (scalar-output setting).

enum class BestResponseRegime { interior, uniform, degenerate };

struct BestResponseInput {
  double ally_weight = 0.0;       // α_A
  double ally_label = 0.0;        // Y_A
  double adversary_weight = 0.0;  // α_Vn
  double adversary_label = 0.0;   // Y_Vn
  double own_scale = 1.0;         // w_n
  std::vector<double> other_scales;       // w_j, j ≠ n
  std::vector<double> other_predictions;  // ŷ_Vj, j ≠ n
};

struct BestResponse {
  BestResponseRegime regime = BestResponseRegime::uniform;
  double value = 0.0;  // meaningful only for the interior regime
};

BestResponse best_response_closed_form(const BestResponseInput& in);

}  // namespace prl
