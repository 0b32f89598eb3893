#include "prl/eigan.hpp"

#include <cmath>

#include "prl/errors.hpp"

namespace prl {

std::string_view to_string(DiscriminatorInput d) {
  return d == DiscriminatorInput::post_update ? "post_update" : "pre_update";
}

DiscriminatorInput parse_discriminator_input(std::string_view s) {
  if (s == "post_update") return DiscriminatorInput::post_update;
  if (s == "pre_update") return DiscriminatorInput::pre_update;
  throw ConfigError("unknown discriminator input '" + std::string(s) + "'");
}

const Network& TrainerState::discriminator(const std::string& objective) const {
  const auto objs = cfg.game.objectives();
  for (std::size_t i = 0; i < objs.size(); ++i)
    if (objs[i]->name == objective) return discriminators.at(i);
  throw std::invalid_argument("no discriminator for objective '" + objective + "'");
}

Network make_encoder(const EiganConfig& cfg, std::size_t input_dim, RngStream& rng) {
  return init_network(mlp_layers(input_dim, cfg.arch.encoder_hidden, cfg.game.encoder_dim, Activation::relu,
                                 Activation::tanh, cfg.arch.dropout),
                      cfg.arch.l2, rng);
}

Network make_discriminator(const EiganConfig& cfg, std::size_t num_classes, RngStream& rng) {
  return init_network(mlp_layers(cfg.game.encoder_dim, cfg.arch.discriminator_hidden, num_classes, Activation::relu,
                                 Activation::softmax, cfg.arch.dropout),
                      cfg.arch.l2, rng);
}

TrainerState init_trainer(const EiganConfig& cfg, Network encoder, RngStream rng) {
  cfg.game.validate();
  if (encoder.output_dim() != cfg.game.encoder_dim)
    throw ConfigError("encoder output dimension does not match game.encoder_dim");
  TrainerState s;
  s.cfg = cfg;
  s.encoder = std::move(encoder);
  s.rng = rng;
  for (const auto* o : cfg.game.objectives()) s.discriminators.push_back(make_discriminator(cfg, o->num_classes, s.rng));
  return s;
}

TrainerState init_trainer(const EiganConfig& cfg, std::size_t input_dim, std::uint64_t seed) {
  cfg.game.validate();
  RngStream init(seed, streams::kEncoderInit);
  Network encoder = make_encoder(cfg, input_dim, init);
  return init_trainer(cfg, std::move(encoder), RngStream(seed, streams::node(0)));
}

namespace {

void check_loss(const std::string& player, double value, std::size_t epoch) {
  if (!std::isfinite(value) || std::abs(value) > kDivergenceBound) {
    throw DivergenceError(player, value,
                          "training diverged: " + player + " loss " + std::to_string(value) + " at epoch " +
                              std::to_string(epoch));
  }
}

// ŷ − y scaled by s: the logits gradient of s·CE for a softmax output.
Matrix softmax_ce_grad(const Matrix& yhat, const Matrix& y, double s) {
  Matrix g(yhat.rows(), yhat.cols());
  auto gd = g.data();
  auto ph = yhat.data();
  auto py = y.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] = s * (ph[i] - py[i]);
  return g;
}

}  // namespace

void train_epoch(TrainerState& state, const LabeledDataset& data) {
  const auto objs = state.cfg.game.objectives();
  const auto& game = state.cfg.game;
  if (data.dim() != state.encoder.input_dim())
    throw DataError("training data has " + std::to_string(data.dim()) + " features, encoder expects " +
                    std::to_string(state.encoder.input_dim()));
  if (data.size() == 0) throw DataError("training data is empty");
  std::vector<const Matrix*> labels;
  for (const auto* o : objs) {
    if (!data.has_label(o->name)) throw DataError("training data lacks labels for objective '" + o->name + "'");
    const auto& ls = data.label(o->name);
    if (ls.num_classes() != o->num_classes)
      throw DataError("objective '" + o->name + "' has " + std::to_string(ls.num_classes()) + " classes, game expects " +
                      std::to_string(o->num_classes));
    labels.push_back(&ls.onehot);
  }

  const std::size_t n = data.size();
  const std::size_t epoch = state.epoch + 1;
  const auto order = state.rng.permutation(n);
  EpochRecord rec;
  rec.epoch = epoch;
  std::vector<double> disc_loss(objs.size(), 0.0);

  for (std::size_t start = 0; start < n; start += game.batch_size) {
    const std::size_t end = std::min(n, start + game.batch_size);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    const double b = static_cast<double>(idx.size());
    const Matrix xb = select_rows(data.X, idx);
    std::vector<Matrix> yb;
    for (const auto* m : labels) yb.push_back(select_rows(*m, idx));

    // encoder step against frozen discriminators
    auto enc = forward(state.encoder, xb, Mode::train, &state.rng);
    Matrix dz(enc.output.rows(), enc.output.cols());
    double loss_e = 0.0;
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const double coef = encoder_coefficient(game, *objs[i]);
      auto fd = forward(state.discriminators[i], enc.output, Mode::eval);
      loss_e += coef * cross_entropy(yb[i], fd.output);
      auto gd = backward(state.discriminators[i], fd.tape, softmax_ce_grad(fd.output, yb[i], coef / b),
                         Upstream::logits);
      axpy_inplace(dz, 1.0, gd.input);
    }
    check_loss("encoder", loss_e, epoch);
    if (game.lr_encoder > 0.0) sgd_step(state.encoder, backward(state.encoder, enc.tape, dz), game.lr_encoder);
    rec.encoder_loss += loss_e * b;

    // discriminator steps on fixed encodings
    const Matrix z = state.cfg.discriminator_input == DiscriminatorInput::post_update ? predict(state.encoder, xb)
                                                                                       : enc.output;
    for (std::size_t i = 0; i < objs.size(); ++i) {
      auto fd = forward(state.discriminators[i], z, Mode::train, &state.rng);
      const double ce = cross_entropy(yb[i], fd.output);
      check_loss(objs[i]->name, ce, epoch);
      disc_loss[i] += ce * b;
      const double lr = objs[i]->role == Role::ally ? game.lr_ally : game.lr_adversary;
      if (lr > 0.0) {
        sgd_step(state.discriminators[i],
                 backward(state.discriminators[i], fd.tape, softmax_ce_grad(fd.output, yb[i], 1.0 / b),
                          Upstream::logits),
                 lr);
      }
    }
  }

  const double total = static_cast<double>(n);
  rec.encoder_loss /= total;
  for (std::size_t i = 0; i < objs.size(); ++i) rec.objective_loss[objs[i]->name] = disc_loss[i] / total;
  state.epoch = epoch;
  state.history.push_back(std::move(rec));
}

TrainResult train(const EiganConfig& cfg, const LabeledDataset& data, std::uint64_t seed) {
  if (cfg.game.epochs == 0) throw ConfigError("epochs must be at least 1");
  auto state = init_trainer(cfg, data.dim(), seed);
  for (std::size_t e = 0; e < cfg.game.epochs; ++e) train_epoch(state, data);
  TrainResult r{state.encoder, state.history, std::move(state)};
  return r;
}

Matrix encode(const Network& encoder, const Matrix& X) {
  if (X.cols() != encoder.input_dim())
    throw ShapeError("encode: input " + X.shape_string() + " vs encoder input dim " +
                     std::to_string(encoder.input_dim()));
  return predict(encoder, X);
}

double game_loss(const TrainerState& state, const Network& encoder, const LabeledDataset& data) {
  const Matrix z = encode(encoder, data.X);
  PredictionBatch preds;
  const auto objs = state.cfg.game.objectives();
  for (std::size_t i = 0; i < objs.size(); ++i)
    preds[objs[i]->name] = {predict(state.discriminators[i], z), data.label(objs[i]->name).onehot};
  return encoder_loss(preds, state.cfg.game);
}

}  // namespace prl
