#include "prl/game.hpp"

#include <algorithm>
#include <cmath>

#include "prl/errors.hpp"

namespace prl {

std::string_view to_string(Role r) { return r == Role::ally ? "ally" : "adversary"; }

void GameConfig::validate() const {
  if (allies.empty() || adversaries.empty()) throw ConfigError("game needs at least one ally and one adversary");
  if (alpha && !(*alpha > 0.0 && *alpha < 1.0)) throw ConfigError("alpha must lie strictly between 0 and 1");
  if (loss_form == LossForm::printed && !alpha) throw ConfigError("printed loss form needs a scalar alpha");
  std::set<std::string> names;
  double total = 0.0;
  for (const auto* o : objectives()) {
    if (o->name.empty()) throw ConfigError("objective with empty name");
    if (!names.insert(o->name).second) throw ConfigError("duplicate objective '" + o->name + "'");
    if (o->num_classes < 2) throw ConfigError("objective '" + o->name + "' needs at least two classes");
    if (!(o->weight > 0.0)) throw ConfigError("objective '" + o->name + "' weight must be positive");
    total += o->weight;
  }
  if (loss_form == LossForm::normalized && std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("objective weights sum to " + std::to_string(total) + ", expected 1");
  }
  if (!(lr_encoder >= 0.0 && lr_ally >= 0.0 && lr_adversary >= 0.0)) throw ConfigError("learning rates must be >= 0");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (encoder_dim == 0) throw ConfigError("encoder dimension must be positive");
}

std::vector<const ObjectiveSpec*> GameConfig::objectives() const {
  std::vector<const ObjectiveSpec*> out;
  for (const auto& a : allies) out.push_back(&a);
  for (const auto& v : adversaries) out.push_back(&v);
  return out;
}

const ObjectiveSpec* GameConfig::find(const std::string& name) const {
  for (const auto* o : objectives())
    if (o->name == name) return o;
  return nullptr;
}

GameConfig make_game(double alpha, const std::vector<std::pair<std::string, std::size_t>>& allies,
                     const std::vector<std::pair<std::string, std::size_t>>& adversaries) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie strictly between 0 and 1");
  if (allies.empty() || adversaries.empty()) throw ConfigError("game needs at least one ally and one adversary");
  GameConfig cfg;
  cfg.alpha = alpha;
  const double wa = alpha / static_cast<double>(allies.size());
  const double wv = (1.0 - alpha) / static_cast<double>(adversaries.size());
  for (const auto& [name, c] : allies) cfg.allies.push_back({name, Role::ally, c, wa});
  for (const auto& [name, c] : adversaries) cfg.adversaries.push_back({name, Role::adversary, c, wv});
  return cfg;
}

double encoder_coefficient(const GameConfig& cfg, const ObjectiveSpec& obj) {
  if (cfg.loss_form == LossForm::printed) return obj.role == Role::ally ? 1.0 : -*cfg.alpha;
  return obj.role == Role::ally ? obj.weight : -obj.weight;
}

namespace {

void require_same_shape(const Matrix& y, const Matrix& yhat) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols()) {
    throw ShapeError("cross_entropy: labels " + y.shape_string() + " vs predictions " + yhat.shape_string());
  }
  if (y.rows() == 0) throw ShapeError("cross_entropy: empty batch");
}

const Prediction& lookup(const PredictionBatch& preds, const std::string& name) {
  auto it = preds.find(name);
  if (it == preds.end()) throw std::invalid_argument("prediction batch is missing objective '" + name + "'");
  return it->second;
}

}  // namespace

double mean_log_likelihood(const Matrix& y, const Matrix& yhat) {
  require_same_shape(y, yhat);
  double total = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto yr = y.row(i);
    auto pr = yhat.row(i);
    double row = 0.0;
    for (std::size_t j = 0; j < yr.size(); ++j) {
      if (yr[j] != 0.0) row += yr[j] * std::log(std::max(pr[j], kLogFloor));
    }
    total += row;
  }
  return total / static_cast<double>(y.rows());
}

double cross_entropy(const Matrix& y, const Matrix& yhat) { return -mean_log_likelihood(y, yhat); }

double encoder_loss(const PredictionBatch& preds, const GameConfig& cfg) {
  cfg.validate();
  double loss = 0.0;
  for (const auto* o : cfg.objectives()) {
    const auto& p = lookup(preds, o->name);
    loss += encoder_coefficient(cfg, *o) * cross_entropy(p.y, p.yhat);
  }
  return loss;
}

double minimax_score(const PredictionBatch& preds, const GameConfig& cfg) {
  cfg.validate();
  double score = 0.0;
  for (const auto* o : cfg.objectives()) {
    const auto& p = lookup(preds, o->name);
    score += encoder_coefficient(cfg, *o) * mean_log_likelihood(p.y, p.yhat);
  }
  return score;
}

GameConfig combine_node_games(const std::vector<GameConfig>& nodes) {
  if (nodes.empty()) throw ConfigError("combine_node_games: no nodes");
  const double k = static_cast<double>(nodes.size());
  GameConfig out = nodes.front();
  out.allies.clear();
  out.adversaries.clear();
  out.alpha.reset();
  auto merge = [&](std::vector<ObjectiveSpec>& dst, const ObjectiveSpec& src) {
    for (auto& d : dst) {
      if (d.name == src.name) {
        d.weight += src.weight / k;
        return;
      }
    }
    ObjectiveSpec s = src;
    s.weight = src.weight / k;
    dst.push_back(s);
  };
  for (const auto& g : nodes) {
    if (g.loss_form != LossForm::normalized) throw ConfigError("combine_node_games: normalized weights required");
    for (const auto& a : g.allies) merge(out.allies, a);
    for (const auto& v : g.adversaries) merge(out.adversaries, v);
  }
  return out;
}

bool OverlapDecomposition::any_degenerate() const {
  return std::any_of(shared.begin(), shared.end(), [](const SharedTerm& t) { return t.degenerate; });
}

OverlapDecomposition overlap_decomposition(const std::vector<LabeledObjective>& allies,
                                           const std::vector<LabeledObjective>& adversaries) {
  OverlapDecomposition out;
  for (const auto& a : allies) {
    for (const auto& v : adversaries) {
      std::set<std::string> common;
      std::set_intersection(a.labels.begin(), a.labels.end(), v.labels.begin(), v.labels.end(),
                            std::inserter(common, common.end()));
      DisjointTerm d{a.name, v.name, {}, {}, a.weight, v.weight};
      std::set_difference(a.labels.begin(), a.labels.end(), common.begin(), common.end(),
                          std::inserter(d.ally_labels, d.ally_labels.end()));
      std::set_difference(v.labels.begin(), v.labels.end(), common.begin(), common.end(),
                          std::inserter(d.adversary_labels, d.adversary_labels.end()));
      if (!common.empty()) {
        SharedTerm s;
        s.ally = a.name;
        s.adversary = v.name;
        s.labels = std::move(common);
        s.coefficient = a.weight - v.weight;
        s.degenerate = std::abs(s.coefficient) <= 1e-12;
        if (!s.degenerate) s.favored = s.coefficient > 0.0 ? Role::ally : Role::adversary;
        out.shared.push_back(std::move(s));
      }
      if (!d.ally_labels.empty() || !d.adversary_labels.empty()) out.disjoint.push_back(std::move(d));
    }
  }
  return out;
}

BestResponse best_response_closed_form(const BestResponseInput& in) {
  if (in.other_scales.size() != in.other_predictions.size()) {
    throw std::invalid_argument("best_response_closed_form: scales and predictions differ in length");
  }
  const double adv = in.adversary_weight * in.adversary_label;
  const double ally = in.ally_weight * in.ally_label;
  const double tol = 1e-12 * std::max({1.0, std::abs(adv), std::abs(ally)});
  if (std::abs(adv - ally) <= tol) return {BestResponseRegime::degenerate, 0.0};
  if (adv > ally) return {BestResponseRegime::uniform, 0.0};
  double others = 0.0;
  for (std::size_t j = 0; j < in.other_scales.size(); ++j) others += in.other_scales[j] * in.other_predictions[j];
  const double value = others / (ally * in.own_scale) / (1.0 / adv - 1.0 / ally);
  return {BestResponseRegime::interior, value};
}

}  // namespace prl
