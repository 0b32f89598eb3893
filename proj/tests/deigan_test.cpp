#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "prl/datasets.hpp"
#include "prl/deigan.hpp"
#include "prl/errors.hpp"

namespace prl {
namespace {

SparseUpdate dense_update(std::size_t node, std::vector<double> v) {
  std::vector<std::size_t> all(v.size());
  std::iota(all.begin(), all.end(), 0);
  return make_update(node, v, all);
}

EiganConfig small_config() {
  EiganConfig cfg;
  cfg.game = make_game(0.5, {{"color", 2}}, {{"shape", 2}});
  cfg.game.epochs = 3;
  return cfg;
}

LabeledDataset quadrant_train(std::uint64_t seed = 1) { return split(gen_quadrant(60, 0.5, seed), 0.7, seed).train; }

TEST(Aggregate, Examples) {
  const std::vector<std::size_t> equal{5, 5};
  EXPECT_EQ(server_aggregate({dense_update(0, {2, 4}), dense_update(1, {0, 0})}, equal, 2),
            (std::vector<double>{1, 2}));
  EXPECT_EQ(server_aggregate({make_update(0, std::vector<double>{2, 4}, {0}),
                              make_update(1, std::vector<double>{6, 8}, {1})},
                             equal, 2),
            (std::vector<double>{1, 4}));
  const std::vector<double> theta{0.1, -0.0, 3e-300, -7.5};
  const std::vector<std::size_t> one{17};
  const auto same = server_aggregate({dense_update(0, theta)}, one, 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(std::signbit(same[i]), std::signbit(theta[i]));
  EXPECT_EQ(same, theta);
}

TEST(Aggregate, ShardWeighting) {
  const std::vector<std::size_t> sizes{1, 3};
  const auto g = server_aggregate({dense_update(0, {4, 0}), dense_update(1, {0, 8})}, sizes, 2);
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_DOUBLE_EQ(g[1], 6.0);
}

TEST(Aggregate, ConsensusIsIdentity) {
  RngStream rng(1, 0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> theta(30);
    for (auto& v : theta) v = rng.uniform(-2, 2);
    std::vector<SparseUpdate> ups;
    std::vector<std::size_t> sizes;
    for (std::size_t k = 0; k < 4; ++k) {
      ups.push_back(dense_update(k, theta));
      sizes.push_back(1 + rng.uniform_index(50));
    }
    const auto g = server_aggregate(ups, sizes, theta.size());
    for (std::size_t q = 0; q < theta.size(); ++q) EXPECT_NEAR(g[q], theta[q], 1e-15);
  }
}

TEST(Aggregate, RenormalizedRule) {
  const std::vector<std::size_t> sizes{1, 3};
  const std::vector<double> prev{9, 9, 9};
  const auto g = server_aggregate({make_update(0, std::vector<double>{4, 1, 0}, {0, 1}),
                                   make_update(1, std::vector<double>{8, 2, 0}, {0})},
                                  sizes, 3, Aggregation::renormalized, prev);
  EXPECT_DOUBLE_EQ(g[0], 7.0);  // (1·4 + 3·8)/4
  EXPECT_DOUBLE_EQ(g[1], 1.0);  // only node 0 uploaded it
  EXPECT_DOUBLE_EQ(g[2], 9.0);  // nobody did: keep the previous value
  EXPECT_THROW(server_aggregate({dense_update(0, {1, 2, 3})}, std::vector<std::size_t>{1}, 3,
                                Aggregation::renormalized),
               ShapeError);
}

TEST(Aggregate, Errors) {
  const std::vector<std::size_t> one{1}, two{1, 1}, zero{0};
  EXPECT_THROW(server_aggregate({}, {}, 2), ShapeError);
  EXPECT_THROW(server_aggregate({dense_update(0, {1, 2})}, two, 2), ShapeError);
  EXPECT_THROW(server_aggregate({dense_update(0, {1, 2})}, zero, 2), ShapeError);
  EXPECT_THROW(server_aggregate({dense_update(0, {1, 2, 3})}, one, 2), ShapeError);
  EXPECT_THROW(make_update(0, std::vector<double>{1, 2}, {1, 0}), ShapeError);
  EXPECT_THROW(make_update(0, std::vector<double>{1, 2}, {2}), ShapeError);
}

TEST(Mask, SizeIsCeiling) {
  EXPECT_EQ(mask_size(10, 0.3), 3u);
  EXPECT_EQ(mask_size(10, 0.31), 4u);
  EXPECT_EQ(mask_size(10, 1.0), 10u);
  EXPECT_EQ(mask_size(7, 0.5), 4u);
  EXPECT_EQ(mask_size(1, 1e-9), 1u);
  for (std::size_t count : {1u, 9u, 100u, 173u})
    for (double phi : {0.1, 0.2, 0.25, 0.4, 0.6, 0.7, 0.8, 0.9}) {
      const auto k = mask_size(count, phi);
      // ceil(φ·count) with exact rational arithmetic on φ = p/100
      const auto p = static_cast<std::size_t>(std::llround(phi * 100));
      EXPECT_EQ(k, (p * count + 99) / 100) << count << " " << phi;
    }
  EXPECT_THROW(mask_size(10, 0.0), ConfigError);
  EXPECT_THROW(mask_size(10, 1.5), ConfigError);
}

TEST(Mask, SortedUniqueAndFull) {
  RngStream rng(2, 0);
  const auto full = sample_mask(rng, 12, 1.0);
  std::vector<std::size_t> all(12);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(full, all);
  for (int t = 0; t < 100; ++t) {
    const auto m = sample_mask(rng, 50, 0.37);
    ASSERT_EQ(m.size(), 19u);
    for (std::size_t i = 1; i < m.size(); ++i) EXPECT_LT(m[i - 1], m[i]);
    EXPECT_LT(m.back(), 50u);
  }
}

TEST(Mask, InclusionFrequencyIsUniform) {
  RngStream rng(3, 0);
  const std::size_t count = 40, rounds = 10000;
  const double phi = 0.3;
  std::vector<double> hits(count);
  for (std::size_t r = 0; r < rounds; ++r)
    for (auto q : sample_mask(rng, count, phi)) hits[q] += 1;
  for (auto h : hits) EXPECT_NEAR(h / double(rounds), phi, 0.02);
}

TEST(Download, OverwritesOnlyMaskedEntries) {
  RngStream rng(4, 0);
  const auto cfg = small_config();
  Network enc = make_encoder(cfg, 2, rng);
  const auto before = flatten_params(enc);
  std::vector<double> global(before.size());
  for (auto& g : global) g = rng.uniform(5, 6);

  Network none = enc;
  node_download(none, global, {});
  EXPECT_TRUE(bitwise_equal(none, enc));

  const std::vector<std::size_t> a{0, 3, 5}, b{1, 2, 7};
  Network twice = enc;
  node_download(twice, global, a);
  node_download(twice, global, b);
  const auto after = flatten_params(twice);
  for (std::size_t q = 0; q < after.size(); ++q) {
    const bool covered = q == 0 || q == 1 || q == 2 || q == 3 || q == 5 || q == 7;
    EXPECT_EQ(after[q], covered ? global[q] : before[q]);
  }

  std::vector<std::size_t> all(before.size());
  std::iota(all.begin(), all.end(), 0);
  Network full = enc;
  node_download(full, global, all);
  EXPECT_EQ(flatten_params(full), global);

  const std::vector<std::size_t> bad{before.size()};
  EXPECT_THROW(node_download(full, global, bad), ShapeError);
  EXPECT_THROW(node_download(full, std::vector<double>(3), a), ShapeError);
}

TEST(Federated, SingleNodeReplaysCentralizedTraining) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto cfg = small_config();
    const auto data = quadrant_train(seed);
    const auto central = train(cfg, data, seed);
    FedConfig fed;
    fed.nodes = 1;
    fed.rounds = cfg.game.epochs;
    fed.seed = seed;
    const auto dist = train_federated(fed, {{data, cfg}});
    EXPECT_TRUE(bitwise_equal(dist.encoder, central.encoder)) << "seed " << seed;
    EXPECT_TRUE(bitwise_equal(dist.nodes[0].discriminators[1], central.state.discriminators[1]));
  }
}

std::vector<NodeSetup> iid_nodes(std::size_t k, std::uint64_t seed) {
  ShardPlan plan;
  plan.nodes = k;
  std::vector<NodeSetup> out;
  for (auto& part : shard(quadrant_train(seed), plan, seed)) out.push_back({part, small_config()});
  return out;
}

TEST(Federated, ParallelMatchesSequential) {
  FedConfig fed;
  fed.nodes = 4;
  fed.rounds = 3;
  fed.delta = 2;
  fed.phi = 0.6;
  fed.seed = 5;
  const auto nodes = iid_nodes(4, 5);
  fed.parallel = true;
  const auto par = train_federated(fed, nodes);
  fed.parallel = false;
  const auto seq = train_federated(fed, nodes);
  EXPECT_TRUE(bitwise_equal(par.encoder, seq.encoder));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_TRUE(bitwise_equal(par.nodes[k].encoder, seq.nodes[k].encoder));
}

TEST(Federated, HistoryAndMaskSizes) {
  FedConfig fed;
  fed.nodes = 3;
  fed.rounds = 2;
  fed.delta = 2;
  fed.phi = 0.5;
  fed.seed = 6;
  const auto r = train_federated(fed, iid_nodes(3, 6));
  ASSERT_EQ(r.history.size(), 6u);
  const auto count = r.encoder.parameter_count();
  for (const auto& h : r.history) {
    EXPECT_EQ(h.upload_size, mask_size(count, 0.5));
    EXPECT_EQ(h.download_size, mask_size(count, 0.5));
    EXPECT_EQ(h.epochs.size(), 2u);
  }
  EXPECT_EQ(r.history[3].round, 2u);
  EXPECT_EQ(r.history[3].node, 0u);
  for (const auto& n : r.nodes) EXPECT_EQ(n.epoch, 4u);
}

TEST(Federated, SharedDownloadMaskGivesIdenticalWrites) {
  FedConfig fed;
  fed.nodes = 2;
  fed.rounds = 1;
  fed.phi = 0.5;
  fed.seed = 7;
  fed.download_mask = DownloadMask::shared;
  const auto nodes = iid_nodes(2, 7);
  const auto r = train_federated(fed, nodes);
  // coordinates written by the shared download agree across nodes
  const auto a = flatten_params(r.nodes[0].encoder), b = flatten_params(r.nodes[1].encoder);
  std::size_t agree = 0;
  for (std::size_t q = 0; q < a.size(); ++q) agree += a[q] == b[q];
  EXPECT_GE(agree, mask_size(a.size(), 0.5));
  EXPECT_EQ(parse_download_mask(to_string(DownloadMask::shared)), DownloadMask::shared);
  EXPECT_EQ(parse_aggregation(to_string(Aggregation::renormalized)), Aggregation::renormalized);
  EXPECT_THROW(parse_download_mask("global"), ConfigError);
  EXPECT_THROW(parse_aggregation("mean"), ConfigError);
}

TEST(Federated, ConfigErrors) {
  FedConfig fed;
  fed.nodes = 2;
  const auto nodes = iid_nodes(2, 8);
  EXPECT_THROW(train_federated(fed, {nodes[0]}), ConfigError);
  for (auto mutate : std::vector<void (*)(FedConfig&)>{[](FedConfig& f) { f.delta = 0; },
                                                       [](FedConfig& f) { f.rounds = 0; },
                                                       [](FedConfig& f) { f.phi = 0.0; },
                                                       [](FedConfig& f) { f.phi = 1.01; }}) {
    FedConfig bad = fed;
    mutate(bad);
    EXPECT_THROW(bad.validate(), ConfigError);
  }
  auto mixed = nodes;
  mixed[1].cfg.game.encoder_dim = 3;
  EXPECT_THROW(train_federated(fed, mixed), ConfigError);
}

TEST(Federated, DivergenceNamesTheNode) {
  FedConfig fed;
  fed.nodes = 2;
  auto nodes = iid_nodes(2, 9);
  nodes[1].data.X(0, 0) = std::nan("");
  try {
    train_federated(fed, nodes);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.player(), "node 1 encoder");
  }
}

}  // namespace
}  // namespace prl
