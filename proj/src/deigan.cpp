#include "prl/deigan.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "prl/errors.hpp"
#include "prl/kernels.hpp"

namespace prl {

std::string_view to_string(DownloadMask m) { return m == DownloadMask::per_node ? "per_node" : "shared"; }

DownloadMask parse_download_mask(std::string_view s) {
  if (s == "per_node") return DownloadMask::per_node;
  if (s == "shared") return DownloadMask::shared;
  throw ConfigError("unknown download mask '" + std::string(s) + "'");
}

std::string_view to_string(Aggregation a) { return a == Aggregation::zero_fill ? "zero_fill" : "renormalized"; }

Aggregation parse_aggregation(std::string_view s) {
  if (s == "zero_fill") return Aggregation::zero_fill;
  if (s == "renormalized") return Aggregation::renormalized;
  throw ConfigError("unknown aggregation '" + std::string(s) + "'");
}

void FedConfig::validate() const {
  if (nodes == 0) throw ConfigError("fed.nodes must be at least 1");
  if (delta == 0) throw ConfigError("fed.delta must be at least 1");
  if (rounds == 0) throw ConfigError("fed.rounds must be at least 1");
  if (!(phi > 0.0 && phi <= 1.0)) throw ConfigError("fed.phi must lie in (0, 1]");
}

std::size_t mask_size(std::size_t count, double phi) {
  if (!(phi > 0.0 && phi <= 1.0)) throw ConfigError("phi must lie in (0, 1]");
  const double raw = phi * static_cast<double>(count);
  const double nearest = std::round(raw);
  // 0.3·10 evaluates to 3.0000000000000004; treat such products as exact
  const double k = nearest >= 1.0 && std::abs(raw - nearest) <= 1e-12 * raw ? nearest : std::ceil(raw);
  return std::min(count, static_cast<std::size_t>(k));
}

std::vector<std::size_t> sample_mask(RngStream& rng, std::size_t count, double phi) {
  const std::size_t k = mask_size(count, phi);
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  if (k < count) {
    // partial Fisher-Yates: the first k slots are a uniform k-subset
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.uniform_index(count - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

std::vector<double> SparseUpdate::recovered(std::size_t count) const {
  std::vector<double> out(count, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) out.at(indices[i]) = values[i];
  return out;
}

SparseUpdate make_update(std::size_t node, std::span<const double> params, std::vector<std::size_t> indices) {
  SparseUpdate u;
  u.node = node;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= params.size()) throw ShapeError("update index out of range");
    if (i > 0 && indices[i] <= indices[i - 1]) throw ShapeError("update indices must be sorted and unique");
    u.values.push_back(params[indices[i]]);
  }
  u.indices = std::move(indices);
  return u;
}

std::vector<double> server_aggregate(const std::vector<SparseUpdate>& updates, std::span<const std::size_t> shard_sizes,
                                     std::size_t param_count, Aggregation rule, std::span<const double> previous) {
  if (updates.empty()) throw ShapeError("server_aggregate: no updates");
  if (updates.size() != shard_sizes.size()) throw ShapeError("server_aggregate: one shard size per update required");
  std::size_t total = 0;
  for (auto n : shard_sizes) {
    if (n == 0) throw ShapeError("server_aggregate: shard sizes must be positive");
    total += n;
  }
  for (const auto& u : updates) {
    if (u.indices.size() != u.values.size()) throw ShapeError("server_aggregate: malformed update");
    for (auto q : u.indices)
      if (q >= param_count) throw ShapeError("server_aggregate: index out of range");
  }
  std::vector<double> out(param_count, 0.0);
  if (rule == Aggregation::zero_fill) {
    std::vector<std::vector<double>> dense;
    std::vector<std::span<const double>> views;
    std::vector<double> weights;
    for (std::size_t k = 0; k < updates.size(); ++k) {
      dense.push_back(updates[k].recovered(param_count));
      weights.push_back(static_cast<double>(shard_sizes[k]) / static_cast<double>(total));
    }
    for (const auto& d : dense) views.emplace_back(d);
    kernels::weighted_sum(views, weights, out);
    return out;
  }
  if (previous.size() != param_count) throw ShapeError("server_aggregate: renormalized rule needs the previous vector");
  std::vector<double> mass(param_count, 0.0);
  for (std::size_t k = 0; k < updates.size(); ++k) {
    const double nk = static_cast<double>(shard_sizes[k]);
    for (std::size_t i = 0; i < updates[k].indices.size(); ++i) {
      out[updates[k].indices[i]] += nk * updates[k].values[i];
      mass[updates[k].indices[i]] += nk;
    }
  }
  for (std::size_t q = 0; q < param_count; ++q) out[q] = mass[q] > 0.0 ? out[q] / mass[q] : previous[q];
  return out;
}

void node_download(Network& encoder, std::span<const double> global, std::span<const std::size_t> indices) {
  auto params = flatten_params(encoder);
  if (global.size() != params.size()) throw ShapeError("node_download: global vector has the wrong length");
  for (auto q : indices) {
    if (q >= params.size()) throw ShapeError("node_download: index out of range");
    params[q] = global[q];
  }
  unflatten_params(encoder, params);
}

FederatedResult train_federated(const FedConfig& fed, const std::vector<NodeSetup>& nodes) {
  fed.validate();
  if (nodes.size() != fed.nodes)
    throw ConfigError("fed.nodes is " + std::to_string(fed.nodes) + " but " + std::to_string(nodes.size()) +
                      " node setups were given");
  const auto& ref = nodes.front();
  for (const auto& n : nodes) {
    n.cfg.game.validate();
    if (n.cfg.game.encoder_dim != ref.cfg.game.encoder_dim || n.cfg.arch.encoder_hidden != ref.cfg.arch.encoder_hidden ||
        n.cfg.arch.dropout != ref.cfg.arch.dropout || n.cfg.arch.l2 != ref.cfg.arch.l2 || n.data.dim() != ref.data.dim())
      throw ConfigError("all nodes must share the encoder architecture and feature dimension");
    if (n.data.size() == 0) throw DataError("every node needs at least one sample");
  }

  RngStream init(fed.seed, streams::kEncoderInit);
  const Network initial = make_encoder(ref.cfg, ref.data.dim(), init);
  const std::size_t k_nodes = nodes.size();
  const std::size_t param_count = initial.parameter_count();

  std::vector<TrainerState> states;
  std::vector<RngStream> upload_rng;
  std::vector<std::size_t> sizes;
  for (std::size_t k = 0; k < k_nodes; ++k) {
    states.push_back(init_trainer(nodes[k].cfg, initial, RngStream(fed.seed, streams::node(k))));
    upload_rng.emplace_back(fed.seed, streams::upload(k));
    sizes.push_back(nodes[k].data.size());
  }
  RngStream server(fed.seed, streams::kServer);
  std::vector<double> global = flatten_params(initial);

  FederatedResult result;
  for (std::size_t round = 1; round <= fed.rounds; ++round) {
    std::vector<std::exception_ptr> errors(k_nodes);
    const auto count = static_cast<std::int64_t>(k_nodes);
#pragma omp parallel for schedule(dynamic, 1) if (fed.parallel)
    for (std::int64_t i = 0; i < count; ++i) {
      const auto k = static_cast<std::size_t>(i);
      try {
        for (std::size_t e = 0; e < fed.delta; ++e) train_epoch(states[k], nodes[k].data);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
    for (std::size_t k = 0; k < k_nodes; ++k) {
      if (!errors[k]) continue;
      try {
        std::rethrow_exception(errors[k]);
      } catch (const DivergenceError& e) {
        throw DivergenceError("node " + std::to_string(k) + " " + e.player(), e.value(),
                              "node " + std::to_string(k) + ", round " + std::to_string(round) + ": " + e.what());
      }
    }

    std::vector<SparseUpdate> updates;
    for (std::size_t k = 0; k < k_nodes; ++k)
      updates.push_back(make_update(k, flatten_params(states[k].encoder),
                                    sample_mask(upload_rng[k], param_count, fed.phi)));
    global = server_aggregate(updates, sizes, param_count, fed.aggregation, global);

    std::vector<std::size_t> shared_mask;
    if (fed.download_mask == DownloadMask::shared) shared_mask = sample_mask(server, param_count, fed.phi);
    for (std::size_t k = 0; k < k_nodes; ++k) {
      const auto mask =
          fed.download_mask == DownloadMask::shared ? shared_mask : sample_mask(server, param_count, fed.phi);
      node_download(states[k].encoder, global, mask);
      RoundRecord rec;
      rec.round = round;
      rec.node = k;
      rec.upload_size = updates[k].indices.size();
      rec.download_size = mask.size();
      const auto& h = states[k].history;
      rec.epochs.assign(h.end() - static_cast<std::ptrdiff_t>(fed.delta), h.end());
      result.history.push_back(std::move(rec));
    }
  }

  std::vector<SparseUpdate> final_updates;
  std::vector<std::size_t> all(param_count);
  for (std::size_t q = 0; q < param_count; ++q) all[q] = q;
  for (std::size_t k = 0; k < k_nodes; ++k) final_updates.push_back(make_update(k, flatten_params(states[k].encoder), all));
  result.encoder = initial;
  unflatten_params(result.encoder, server_aggregate(final_updates, sizes, param_count));
  result.nodes = std::move(states);
  return result;
}

}  // namespace prl
