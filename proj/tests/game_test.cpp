#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "prl/errors.hpp"
#include "prl/game.hpp"
#include "prl/rng.hpp"

namespace prl {
namespace {

// Prediction whose CE against a fixed one-hot label is exactly `ce`:
// the true class gets probability exp(−ce), the rest is split evenly.
Prediction with_ce(double ce, std::size_t classes = 2) {
  const double p = std::exp(-ce);
  Matrix yhat(1, classes, (1.0 - p) / double(classes - 1));
  yhat(0, 0) = p;
  Matrix y(1, classes);
  y(0, 0) = 1.0;
  return {yhat, y};
}

Prediction random_prediction(RngStream& rng, std::size_t rows, std::size_t classes) {
  Prediction p{Matrix(rows, classes), Matrix(rows, classes)};
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += p.yhat(r, c) = rng.uniform(1e-3, 1.0);
    for (std::size_t c = 0; c < classes; ++c) p.yhat(r, c) /= s;
    p.y(r, rng.uniform_index(classes)) = 1.0;
  }
  return p;
}

TEST(CrossEntropy, Examples) {
  EXPECT_EQ(cross_entropy(Matrix{{1, 0}}, Matrix{{1, 0}}), 0.0);
  EXPECT_NEAR(cross_entropy(Matrix{{1, 0}}, Matrix{{0.5, 0.5}}), std::log(2.0), 1e-15);
  for (std::size_t c : {2u, 3u, 7u}) {
    Matrix y(3, c), yhat(3, c, 1.0 / double(c));
    for (std::size_t r = 0; r < 3; ++r) y(r, (r * 5) % c) = 1.0;
    EXPECT_NEAR(cross_entropy(y, yhat), std::log(double(c)), 1e-12);
  }
  // clamped log keeps a confident miss finite
  EXPECT_NEAR(cross_entropy(Matrix{{1, 0}}, Matrix{{0, 1}}), -std::log(kLogFloor), 1e-9);
  EXPECT_THROW(cross_entropy(Matrix{{1, 0}}, Matrix{{1, 0, 0}}), ShapeError);
  EXPECT_THROW(cross_entropy(Matrix(0, 2), Matrix(0, 2)), ShapeError);
}

TEST(CrossEntropy, NonNegative) {
  RngStream rng(1, 0);
  for (int t = 0; t < 200; ++t) {
    auto p = random_prediction(rng, 5, 1 + 1 + rng.uniform_index(5));
    EXPECT_GE(cross_entropy(p.y, p.yhat), 0.0);
  }
}

TEST(EncoderLoss, SingleAllySingleAdversary) {
  const auto cfg = make_game(0.5, {{"a", 2}}, {{"v", 2}});
  PredictionBatch preds{{"a", with_ce(0.2)}, {"v", with_ce(0.7)}};
  EXPECT_NEAR(encoder_loss(preds, cfg), -0.25, 1e-12);
}

TEST(EncoderLoss, ExplicitWeights) {
  GameConfig cfg;
  cfg.allies = {{"a1", Role::ally, 2, 0.3}, {"a2", Role::ally, 2, 0.3}};
  cfg.adversaries = {{"v", Role::adversary, 2, 0.4}};
  PredictionBatch preds{{"a1", with_ce(0.2)}, {"a2", with_ce(0.4)}, {"v", with_ce(0.7)}};
  EXPECT_NEAR(encoder_loss(preds, cfg), -0.10, 1e-12);
}

TEST(EncoderLoss, AlphaLimits) {
  PredictionBatch preds{{"a1", with_ce(0.3)}, {"a2", with_ce(0.5)}, {"v", with_ce(0.9)}};
  const auto hi = make_game(1.0 - 1e-9, {{"a1", 2}, {"a2", 2}}, {{"v", 2}});
  const auto lo = make_game(1e-9, {{"a1", 2}, {"a2", 2}}, {{"v", 2}});
  EXPECT_NEAR(encoder_loss(preds, hi), 0.4, 1e-8);
  EXPECT_NEAR(encoder_loss(preds, lo), -0.9, 1e-8);
}

TEST(EncoderLoss, LinearInEachObjectiveCe) {
  RngStream rng(2, 0);
  for (int t = 0; t < 50; ++t) {
    const double alpha = rng.uniform(0.05, 0.95);
    auto cfg = make_game(alpha, {{"a1", 2}, {"a2", 2}}, {{"v1", 2}, {"v2", 2}, {"v3", 2}});
    if (t % 2 == 1) cfg.loss_form = LossForm::printed;
    PredictionBatch base;
    for (const auto* o : cfg.objectives()) base[o->name] = with_ce(rng.uniform(0.05, 2.0));
    const double l0 = encoder_loss(base, cfg);
    for (const auto* o : cfg.objectives()) {
      const double ce = cross_entropy(base[o->name].y, base[o->name].yhat);
      auto moved = base;
      const double d = 0.25;
      moved[o->name] = with_ce(ce + d);
      const double slope = (encoder_loss(moved, cfg) - l0) / d;
      const double expected = cfg.loss_form == LossForm::printed
                                  ? (o->role == Role::ally ? 1.0 : -alpha)
                                  : (o->role == Role::ally ? alpha / 2 : -(1 - alpha) / 3);
      EXPECT_NEAR(slope, expected, 1e-9) << o->name;
    }
  }
}

TEST(EncoderLoss, PrintedForm) {
  auto cfg = make_game(0.3, {{"a1", 2}, {"a2", 2}}, {{"v", 2}});
  cfg.loss_form = LossForm::printed;
  PredictionBatch preds{{"a1", with_ce(0.2)}, {"a2", with_ce(0.4)}, {"v", with_ce(0.7)}};
  EXPECT_NEAR(encoder_loss(preds, cfg), 0.2 + 0.4 - 0.3 * 0.7, 1e-12);
  cfg.alpha.reset();
  EXPECT_THROW(encoder_loss(preds, cfg), ConfigError);
}

TEST(EncoderLoss, Errors) {
  const auto cfg = make_game(0.5, {{"a", 2}}, {{"v", 2}});
  EXPECT_THROW(encoder_loss({{"a", with_ce(0.1)}}, cfg), std::invalid_argument);
  auto bad = cfg;
  bad.allies[0].weight = 0.6;
  EXPECT_THROW(encoder_loss({{"a", with_ce(0.1)}, {"v", with_ce(0.1)}}, bad), ConfigError);
}

TEST(MinimaxScore, DualityOnRandomBatches) {
  RngStream rng(3, 0);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.uniform_index(3), m = 1 + rng.uniform_index(3);
    std::vector<std::pair<std::string, std::size_t>> allies, advs;
    for (std::size_t i = 0; i < n; ++i) allies.push_back({"a" + std::to_string(i), 2 + rng.uniform_index(4)});
    for (std::size_t j = 0; j < m; ++j) advs.push_back({"v" + std::to_string(j), 2 + rng.uniform_index(4)});
    const auto cfg = make_game(rng.uniform(0.01, 0.99), allies, advs);
    PredictionBatch preds;
    const std::size_t rows = 1 + rng.uniform_index(16);
    for (const auto* o : cfg.objectives()) preds[o->name] = random_prediction(rng, rows, o->num_classes);
    EXPECT_NEAR(minimax_score(preds, cfg) + encoder_loss(preds, cfg), 0.0, 1e-12);
  }
}

TEST(MinimaxScore, PerfectAlliesUniformAdversaries) {
  const auto cfg = make_game(0.4, {{"a", 2}}, {{"v1", 3}, {"v2", 5}});
  Matrix y3(1, 3), y5(1, 5);
  y3(0, 1) = 1;
  y5(0, 4) = 1;
  PredictionBatch preds{{"a", {Matrix{{0, 1}}, Matrix{{0, 1}}}},
                        {"v1", {Matrix(1, 3, 1.0 / 3), y3}},
                        {"v2", {Matrix(1, 5, 0.2), y5}}};
  EXPECT_NEAR(minimax_score(preds, cfg), 0.3 * std::log(3.0) + 0.3 * std::log(5.0), 1e-12);
}

TEST(MinimaxScore, BetterAllyRaisesScore) {
  const auto cfg = make_game(0.5, {{"a", 2}}, {{"v", 2}});
  double prev = -1e9;
  for (double ce : {1.5, 1.0, 0.6, 0.3, 0.1}) {
    const double u = minimax_score({{"a", with_ce(ce)}, {"v", with_ce(0.69)}}, cfg);
    EXPECT_GT(u, prev);
    prev = u;
  }
}

TEST(GameConfig, ScalarAlphaWeightsSumToOne) {
  RngStream rng(4, 0);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::pair<std::string, std::size_t>> allies, advs;
    const std::size_t n = 1 + rng.uniform_index(6), m = 1 + rng.uniform_index(6);
    for (std::size_t i = 0; i < n; ++i) allies.push_back({"a" + std::to_string(i), 2});
    for (std::size_t j = 0; j < m; ++j) advs.push_back({"v" + std::to_string(j), 2});
    const double alpha = rng.uniform(0.001, 0.999);
    const auto cfg = make_game(alpha, allies, advs);
    double total = 0.0;
    for (const auto* o : cfg.objectives()) total += o->weight;
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(cfg.allies[0].weight, alpha / double(n));
    EXPECT_DOUBLE_EQ(cfg.adversaries[0].weight, (1 - alpha) / double(m));
    EXPECT_NO_THROW(cfg.validate());
  }
}

TEST(GameConfig, ValidationErrors) {
  EXPECT_THROW(make_game(1.0, {{"a", 2}}, {{"v", 2}}), ConfigError);
  EXPECT_THROW(make_game(0.0, {{"a", 2}}, {{"v", 2}}), ConfigError);
  EXPECT_THROW(make_game(0.5, {}, {{"v", 2}}), ConfigError);
  EXPECT_THROW(make_game(0.5, {{"a", 2}}, {}), ConfigError);

  const auto ok = make_game(0.5, {{"a", 2}}, {{"v", 2}});
  auto g = ok;
  g.adversaries[0].name = "a";
  EXPECT_THROW(g.validate(), ConfigError);
  g = ok;
  g.allies[0].num_classes = 1;
  EXPECT_THROW(g.validate(), ConfigError);
  g = ok;
  g.allies[0].weight = -0.5;
  g.adversaries[0].weight = 1.5;
  EXPECT_THROW(g.validate(), ConfigError);
  g = ok;
  g.batch_size = 0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = ok;
  g.lr_ally = -1;
  EXPECT_THROW(g.validate(), ConfigError);
  g = ok;
  g.encoder_dim = 0;
  EXPECT_THROW(g.validate(), ConfigError);
}

// Two nodes share ally A; node 1 carries adversary V1, node 2 carries V2.
TEST(CombineNodeGames, AverageOfNodeLossesEqualsScaledGame) {
  RngStream rng(5, 0);
  for (int t = 0; t < 100; ++t) {
    const auto g1 = make_game(rng.uniform(0.05, 0.95), {{"A", 2}}, {{"V1", 2}});
    const auto g2 = make_game(rng.uniform(0.05, 0.95), {{"A", 2}}, {{"V2", 3}});
    PredictionBatch preds{{"A", random_prediction(rng, 8, 2)},
                          {"V1", random_prediction(rng, 8, 2)},
                          {"V2", random_prediction(rng, 8, 3)}};
    const double avg = 0.5 * (encoder_loss({{"A", preds["A"]}, {"V1", preds["V1"]}}, g1) +
                              encoder_loss({{"A", preds["A"]}, {"V2", preds["V2"]}}, g2));
    const auto combined = combine_node_games({g1, g2});
    EXPECT_NEAR(encoder_loss(preds, combined), avg, 1e-12);
    EXPECT_NEAR(combined.find("V1")->weight, g1.adversaries[0].weight / 2, 1e-15);
    EXPECT_NEAR(combined.find("A")->weight, (g1.allies[0].weight + g2.allies[0].weight) / 2, 1e-15);
  }
  EXPECT_THROW(combine_node_games({}), ConfigError);
}

TEST(OverlapDecomposition, Examples) {
  const auto disjoint = overlap_decomposition({{"a", {"x0", "x1"}, 0.5}}, {{"v", {"y0", "y1"}, 0.5}});
  EXPECT_FALSE(disjoint.has_overlap());
  ASSERT_EQ(disjoint.disjoint.size(), 1u);

  const auto favored = overlap_decomposition({{"a", {"c0", "c1"}, 0.6}}, {{"v", {"c0", "c1"}, 0.4}});
  ASSERT_EQ(favored.shared.size(), 1u);
  EXPECT_NEAR(favored.shared[0].coefficient, 0.2, 1e-15);
  EXPECT_EQ(favored.shared[0].favored, Role::ally);
  EXPECT_FALSE(favored.any_degenerate());
  EXPECT_TRUE(favored.disjoint.empty());

  const auto equal = overlap_decomposition({{"a", {"c0", "c1"}, 0.5}}, {{"v", {"c0", "c1"}, 0.5}});
  ASSERT_EQ(equal.shared.size(), 1u);
  EXPECT_EQ(equal.shared[0].coefficient, 0.0);
  EXPECT_TRUE(equal.shared[0].degenerate);
  EXPECT_FALSE(equal.shared[0].favored.has_value());

  const auto partial = overlap_decomposition({{"a", {"c0", "c1", "c2"}, 0.3}}, {{"v", {"c1", "c3"}, 0.7}});
  ASSERT_EQ(partial.shared.size(), 1u);
  EXPECT_EQ(partial.shared[0].labels, (std::set<std::string>{"c1"}));
  EXPECT_EQ(partial.shared[0].favored, Role::adversary);
  ASSERT_EQ(partial.disjoint.size(), 1u);
  EXPECT_EQ(partial.disjoint[0].ally_labels, (std::set<std::string>{"c0", "c2"}));
  EXPECT_EQ(partial.disjoint[0].adversary_labels, (std::set<std::string>{"c3"}));
}

// Oracle: stationary point of U(ŷn) = αA·YA·log(S + wn·ŷn) − αV·YV·log ŷn,
// S = Σ_{j≠n} wj·ŷj, located by bisection on dU/dŷn.
double best_response_oracle(const BestResponseInput& in) {
  double s = 0.0;
  for (std::size_t j = 0; j < in.other_scales.size(); ++j) s += in.other_scales[j] * in.other_predictions[j];
  const double a = in.ally_weight * in.ally_label, v = in.adversary_weight * in.adversary_label;
  auto deriv = [&](double y) { return a * in.own_scale / (s + in.own_scale * y) - v / y; };
  double lo = 1e-12, hi = 1.0;
  while (deriv(hi) < 0) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(BestResponse, InteriorMatchesStationaryPoint) {
  BestResponseInput in{0.6, 1.0, 0.4, 1.0, 1.0, {1.0}, {0.3}};
  const auto r = best_response_closed_form(in);
  ASSERT_EQ(r.regime, BestResponseRegime::interior);
  EXPECT_NEAR(r.value, 0.6, 1e-12);  // 0.4·0.3 / (1·0.2)
  EXPECT_NEAR(r.value, best_response_oracle(in), 1e-9);

  RngStream rng(6, 0);
  for (int t = 0; t < 100; ++t) {
    BestResponseInput q;
    q.ally_weight = rng.uniform(0.3, 0.9);
    q.ally_label = rng.uniform(0.5, 2.0);
    q.adversary_weight = rng.uniform(0.05, 0.3);
    q.adversary_label = rng.uniform(0.1, 0.9);
    q.own_scale = rng.uniform(0.2, 2.0);
    for (int j = 0; j < 2; ++j) {
      q.other_scales.push_back(rng.uniform(0.2, 2.0));
      q.other_predictions.push_back(rng.uniform(0.05, 1.0));
    }
    const auto got = best_response_closed_form(q);
    ASSERT_EQ(got.regime, BestResponseRegime::interior);
    EXPECT_NEAR(got.value, best_response_oracle(q), 1e-8 * std::max(1.0, got.value));
  }
}

TEST(BestResponse, Regimes) {
  EXPECT_EQ(best_response_closed_form({0.5, 1.0, 0.5, 1.0, 1.0, {1.0}, {0.5}}).regime,
            BestResponseRegime::degenerate);
  EXPECT_EQ(best_response_closed_form({0.3, 1.0, 0.7, 1.0, 1.0, {1.0}, {0.5}}).regime, BestResponseRegime::uniform);
  EXPECT_THROW(best_response_closed_form({0.6, 1.0, 0.4, 1.0, 1.0, {1.0, 2.0}, {0.5}}), std::invalid_argument);
}

TEST(Role, Names) {
  EXPECT_EQ(to_string(Role::ally), "ally");
  EXPECT_EQ(to_string(Role::adversary), "adversary");
}

}  // namespace
}  // namespace prl
