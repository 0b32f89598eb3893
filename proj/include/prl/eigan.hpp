#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prl/datasets.hpp"
#include "prl/game.hpp"
#include "prl/neural.hpp"
#include "prl/rng.hpp"

namespace prl {

struct ArchitectureConfig {
  std::vector<std::size_t> encoder_hidden{16};
  std::vector<std::size_t> discriminator_hidden{16};
  double dropout = 0.2;
  double l2 = 1e-4;
};

/// Which encodings the discriminators train on within a minibatch: those of
/// the encoder after its update (default) or the ones computed before it.
enum class DiscriminatorInput { post_update, pre_update };

std::string_view to_string(DiscriminatorInput d);
DiscriminatorInput parse_discriminator_input(std::string_view s);

struct EiganConfig {
  GameConfig game;
  ArchitectureConfig arch;
  DiscriminatorInput discriminator_input = DiscriminatorInput::post_update;
};

/// Minibatch-averaged losses of one epoch. encoder_loss is the game loss
/// seen by the encoder step; objective_loss holds each discriminator's own CE
/// from its update.
struct EpochRecord {
  std::size_t epoch = 0;
  double encoder_loss = 0.0;
  std::map<std::string, double> objective_loss;
};

struct TrainerState {
  EiganConfig cfg;
  Network encoder;
  /// Aligned with cfg.game.objectives(): allies first, then adversaries.
  std::vector<Network> discriminators;
  std::size_t epoch = 0;
  RngStream rng;
  std::vector<EpochRecord> history;

  const Network& discriminator(const std::string& objective) const;
};

/// Losses above this bound (or non-finite) abort training.
inline constexpr double kDivergenceBound = 1e6;

Network make_encoder(const EiganConfig& cfg, std::size_t input_dim, RngStream& rng);
Network make_discriminator(const EiganConfig& cfg, std::size_t num_classes, RngStream& rng);

/// Fresh trainer for `seed`: the encoder comes from stream kEncoderInit, the
/// discriminators and all later randomness from stream node(0).
TrainerState init_trainer(const EiganConfig& cfg, std::size_t input_dim, std::uint64_t seed);
/// Trainer around an existing encoder; discriminators are drawn from `rng`,
/// which the trainer then keeps.
TrainerState init_trainer(const EiganConfig& cfg, Network encoder, RngStream rng);

/// One shuffled pass over `data`. Each minibatch takes one encoder step
/// against the frozen discriminators, then one step per discriminator on its
/// own cross-entropy. Throws DivergenceError naming the offending player.
void train_epoch(TrainerState& state, const LabeledDataset& data);

struct TrainResult {
  Network encoder;
  std::vector<EpochRecord> history;
  TrainerState state;
};

TrainResult train(const EiganConfig& cfg, const LabeledDataset& data, std::uint64_t seed);

/// Eval-mode encoder forward.
Matrix encode(const Network& encoder, const Matrix& X);

/// Encoder loss of `encoder` on `data` against the state's discriminators,
/// everything in eval mode.
double game_loss(const TrainerState& state, const Network& encoder, const LabeledDataset& data);

}  // namespace prl
