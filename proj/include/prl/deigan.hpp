#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "prl/datasets.hpp"
#include "prl/eigan.hpp"

namespace prl {

/// Download masks: an independent index set per node (default) or one set
/// shared by all nodes in a round.
enum class DownloadMask { per_node, shared };
/// zero_fill: θ = Σ (N_k/N)·θ̃_k with un-uploaded coordinates counted as 0.
/// renormalized: each coordinate averages only the nodes that uploaded it,
/// keeping the previous global value when nobody did.
enum class Aggregation { zero_fill, renormalized };

std::string_view to_string(DownloadMask m);
DownloadMask parse_download_mask(std::string_view s);
std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view s);

struct FedConfig {
  std::size_t nodes = 1;
  std::size_t delta = 1;  // local epochs between aggregations
  double phi = 1.0;       // fraction of encoder parameters exchanged
  std::size_t rounds = 1;
  std::uint64_t seed = 0;
  DownloadMask download_mask = DownloadMask::per_node;
  Aggregation aggregation = Aggregation::zero_fill;
  /// Run node phases on OpenMP threads. Results do not depend on it.
  bool parallel = true;

  void validate() const;
};

/// ceil(phi·count), computed without floating-point drift at exact multiples.
std::size_t mask_size(std::size_t count, double phi);

/// Uniform sample without replacement of mask_size(count, phi) indices, sorted.
std::vector<std::size_t> sample_mask(RngStream& rng, std::size_t count, double phi);

struct SparseUpdate {
  std::size_t node = 0;
  std::vector<std::size_t> indices;  // sorted, duplicate-free
  std::vector<double> values;        // parameter values at `indices`

  /// Dense vector with the uploaded values and zeros elsewhere.
  std::vector<double> recovered(std::size_t count) const;
};

SparseUpdate make_update(std::size_t node, std::span<const double> params, std::vector<std::size_t> indices);

/// Shard-size-weighted combination of the updates. `previous` is the current
/// global vector, consulted only by the renormalized rule.
std::vector<double> server_aggregate(const std::vector<SparseUpdate>& updates, std::span<const std::size_t> shard_sizes,
                                     std::size_t param_count, Aggregation rule = Aggregation::zero_fill,
                                     std::span<const double> previous = {});

/// Overwrites the encoder parameters listed in `indices` with the global values.
void node_download(Network& encoder, std::span<const double> global, std::span<const std::size_t> indices);

struct NodeSetup {
  LabeledDataset data;
  /// Node-local game; the architecture and encoder dimension must agree
  /// across nodes, the objectives may differ.
  EiganConfig cfg;
};

struct RoundRecord {
  std::size_t round = 0;
  std::size_t node = 0;
  std::size_t upload_size = 0;
  std::size_t download_size = 0;
  std::vector<EpochRecord> epochs;  // the node's local epochs in this round
};

struct FederatedResult {
  Network encoder;  // terminal full-precision aggregate
  std::vector<RoundRecord> history;
  std::vector<TrainerState> nodes;
};

/// Federated loop: per round, δ local epochs on every node, sparse upload,
/// aggregation, sparse download. A final φ=1 aggregation produces the
/// returned encoder. Node k draws from stream node(k), its upload masks from
/// upload(k) and the server from kServer, so one node with φ=1 and δ=1
/// replays centralized training exactly.
FederatedResult train_federated(const FedConfig& fed, const std::vector<NodeSetup>& nodes);

}  // namespace prl
