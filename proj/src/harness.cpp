#include "prl/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "prl/digest.hpp"
#include "prl/errors.hpp"

namespace prl {

namespace fs = std::filesystem;
using nlohmann::json;

std::pair<int, std::string> classify_exception(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError&) {
    return {kExitConfig, "config"};
  } catch (const DivergenceError&) {
    return {kExitDivergence, "divergence"};
  } catch (const DataError&) {
    return {kExitData, "data"};
  } catch (...) {
    return {kExitFailure, "failure"};
  }
}

ProbeSpec ProbeSpec::from(const EvalSpec& e) {
  ProbeSpec p;
  p.hidden = e.probe_hidden;
  p.epochs = e.probe_epochs;
  p.lr = e.probe_lr;
  p.batch_size = e.probe_batch;
  return p;
}

Network train_probe(const Matrix& Z, const Matrix& Y, const ProbeSpec& spec, RngStream& rng) {
  if (Z.rows() != Y.rows() || Z.rows() == 0) throw ShapeError("train_probe: features and labels disagree");
  Network net =
      init_network(mlp_layers(Z.cols(), spec.hidden, Y.cols(), Activation::relu, Activation::softmax, 0.0), 0.0, rng);
  const std::size_t n = Z.rows();
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    const auto order = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += spec.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(n, start + spec.batch_size) - start);
      const Matrix zb = select_rows(Z, idx);
      const Matrix yb = select_rows(Y, idx);
      auto f = forward(net, zb, Mode::train);
      Matrix g = scale(sub(f.output, yb), 1.0 / static_cast<double>(idx.size()));
      sgd_step(net, backward(net, f.tape, g, Upstream::logits), spec.lr);
    }
  }
  return net;
}

namespace {

ObjectiveMetrics score(const Matrix& y, const Matrix& yhat) {
  return {cross_entropy(y, yhat), accuracy(y, yhat), f1_score(y, yhat)};
}

}  // namespace

EvalResult evaluate_encoder(const Transform& transform, const LabeledDataset& train, const LabeledDataset& test,
                            const std::vector<std::string>& objectives, const ProbeSpec& probes, std::uint64_t seed) {
  return evaluate_encoded(transform(train.X), transform(test.X), train, test, objectives, probes, seed);
}

EvalResult evaluate_encoded(const Matrix& ztrain, const Matrix& ztest, const LabeledDataset& train,
                            const LabeledDataset& test, const std::vector<std::string>& objectives,
                            const ProbeSpec& probes, std::uint64_t seed) {
  if (ztrain.rows() != train.size() || ztest.rows() != test.size())
    throw ShapeError("evaluate_encoded: encodings and datasets disagree in row count");
  if (!all_finite(ztrain) || !all_finite(ztest)) throw DataError("encoded data is not finite");
  // probes see encodings standardized by train statistics, so a heavily
  // scaled transform (Laplace at small epsilon) cannot blow up their SGD
  const auto stats = fit_normalization(ztrain);
  const Matrix ntrain = normalize(ztrain, stats);
  const Matrix ntest = normalize(ztest, stats);
  RngStream rng(seed, streams::kProbe);
  EvalResult r;
  for (const auto& name : objectives) {
    const auto& ytr = train.label(name).onehot;
    const auto& yte = test.label(name).onehot;
    const Network probe = train_probe(ntrain, ytr, probes, rng);
    r.train[name] = score(ytr, predict(probe, ntrain));
    r.test[name] = score(yte, predict(probe, ntest));
  }
  return r;
}

EvalResult evaluate_encoder(const Network& encoder, const LabeledDataset& train, const LabeledDataset& test,
                            const std::vector<std::string>& objectives, const ProbeSpec& probes, std::uint64_t seed) {
  return evaluate_encoder([&](const Matrix& X) { return encode(encoder, X); }, train, test, objectives, probes, seed);
}

LabeledDataset load_source(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.source == "csv") return load_csv(spec.path, spec.csv);
  if (spec.source == "cache") return load_dataset(spec.path);
  if (spec.generator == "quadrant") return gen_quadrant(spec.n_per_cluster, spec.sigma, seed);
  if (spec.generator == "circle")
    return gen_circle(spec.n_per_cluster, spec.circle_inner, spec.circle_outer, spec.sigma, seed);
  if (spec.generator == "octant") {
    const auto roles = spec.octant_roles == "one_ally_two_adversaries" ? OctantRoles::one_ally_two_adversaries
                                                                        : OctantRoles::two_allies_one_adversary;
    return gen_octant(spec.n_per_cluster, spec.sigma, seed, roles);
  }
  if (spec.generator == "overlap") return gen_overlap_grid(spec.n_per_cluster, spec.ally_sigma, spec.adv_sigma, seed);
  throw ConfigError("unknown dataset.generator '" + spec.generator + "'");
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.data_seed();
  PreparedData out;
  const auto mode = parse_shard_mode(cfg.fed.shard);
  if (mode == ShardMode::variance_ramp) {
    ShardPlan plan;
    plan.nodes = cfg.fed.nodes;
    plan.mode = mode;
    plan.ramp_n_per_class = cfg.dataset.n_per_cluster;
    const auto shards = shard(LabeledDataset{}, plan, seed);
    LabeledDataset pooled_train, pooled_test;
    std::vector<LabeledDataset> node_train;
    for (const auto& s : shards) {
      auto sp = split(s, cfg.dataset.split_fraction, seed, false);
      pooled_train = concat(pooled_train, sp.train);
      pooled_test = concat(pooled_test, sp.test);
      node_train.push_back(std::move(sp.train));
    }
    const auto stats = fit_normalization(pooled_train.X);
    auto apply = [&](LabeledDataset& d) {
      d.X = normalize(d.X, stats);
      d.normalization = stats;
    };
    apply(pooled_train);
    apply(pooled_test);
    for (auto& d : node_train) apply(d);
    out.train = std::move(pooled_train);
    out.test = std::move(pooled_test);
    if (cfg.trainer == "deigan") out.nodes = std::move(node_train);
    return out;
  }
  LabeledDataset full;
  if (cfg.dataset.source == "csv") {
    CsvReport rep;
    full = load_csv(cfg.dataset.path, cfg.dataset.csv, &rep);
    out.csv_report = rep;
  } else {
    full = load_source(cfg.dataset, seed);
  }
  auto sp = split(full, cfg.dataset.split_fraction, seed, true);
  out.train = std::move(sp.train);
  out.test = std::move(sp.test);
  if (cfg.trainer == "deigan") {
    ShardPlan plan;
    plan.nodes = cfg.fed.nodes;
    plan.mode = mode;
    plan.dirichlet_concentration = cfg.fed.dirichlet;
    if (!cfg.game.allies.empty()) plan.skew_objective = cfg.game.allies.front();
    out.nodes = shard(out.train, plan, seed);
  }
  return out;
}

std::vector<std::string> ally_names(const ExperimentConfig& cfg, const LabeledDataset& ds) {
  auto names = cfg.game.allies.empty() ? ds.names_with_role(Role::ally) : cfg.game.allies;
  if (names.empty()) throw ConfigError("no ally objectives configured and none suggested by the dataset");
  return names;
}

std::vector<std::string> adversary_names(const ExperimentConfig& cfg, const LabeledDataset& ds) {
  auto names = cfg.game.adversaries.empty() ? ds.names_with_role(Role::adversary) : cfg.game.adversaries;
  if (names.empty()) throw ConfigError("no adversary objectives configured and none suggested by the dataset");
  return names;
}

GameConfig build_game(const ExperimentConfig& cfg, const LabeledDataset& ds,
                      const std::optional<std::vector<std::string>>& adversaries) {
  auto with_classes = [&](const std::vector<std::string>& names) {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& n : names) {
      if (!ds.has_label(n)) throw ConfigError("objective '" + n + "' is not present in the dataset");
      out.emplace_back(n, ds.label(n).num_classes());
    }
    return out;
  };
  GameConfig g = make_game(cfg.game.alpha, with_classes(ally_names(cfg, ds)),
                           with_classes(adversaries ? *adversaries : adversary_names(cfg, ds)));
  if (!cfg.game.weights.empty()) {
    for (auto* list : {&g.allies, &g.adversaries}) {
      for (auto& o : *list) {
        auto it = cfg.game.weights.find(o.name);
        if (it == cfg.game.weights.end()) throw ConfigError("game.weights lacks objective '" + o.name + "'");
        o.weight = it->second;
      }
    }
  }
  g.loss_form = cfg.game.loss_form == "printed" ? LossForm::printed : LossForm::normalized;
  g.lr_encoder = cfg.game.lr_encoder;
  g.lr_ally = cfg.game.lr_ally;
  g.lr_adversary = cfg.game.lr_adversary;
  g.batch_size = cfg.game.batch_size;
  g.epochs = cfg.game.epochs;
  g.encoder_dim = cfg.game.encoder_dim;
  g.validate();
  return g;
}

EiganConfig build_eigan(const ExperimentConfig& cfg, const LabeledDataset& ds) {
  EiganConfig e;
  e.game = build_game(cfg, ds);
  e.arch = cfg.arch;
  e.discriminator_input = parse_discriminator_input(cfg.game.discriminator_update);
  return e;
}

FedConfig build_fed(const ExperimentConfig& cfg) {
  FedConfig f;
  f.nodes = cfg.fed.nodes;
  f.delta = cfg.fed.delta;
  f.phi = cfg.fed.phi;
  f.rounds = cfg.fed.rounds > 0 ? cfg.fed.rounds : (cfg.game.epochs + cfg.fed.delta - 1) / cfg.fed.delta;
  f.seed = cfg.seed;
  f.download_mask = parse_download_mask(cfg.fed.download_mask);
  f.aggregation = parse_aggregation(cfg.fed.aggregation);
  f.parallel = cfg.fed.parallel;
  f.validate();
  return f;
}

std::vector<NodeSetup> build_nodes(const ExperimentConfig& cfg, const PreparedData& data) {
  if (data.nodes.size() != cfg.fed.nodes) throw ConfigError("prepared data has the wrong number of node shards");
  const auto adversaries = adversary_names(cfg, data.train);
  const std::size_t k_nodes = data.nodes.size();
  if (cfg.fed.node_adversaries == "split" && adversaries.size() > k_nodes)
    throw ConfigError("split adversaries need at least as many nodes as adversaries");
  std::vector<NodeSetup> nodes;
  for (std::size_t k = 0; k < k_nodes; ++k) {
    NodeSetup n;
    n.data = data.nodes[k];
    n.cfg.arch = cfg.arch;
    n.cfg.discriminator_input = parse_discriminator_input(cfg.game.discriminator_update);
    if (cfg.fed.node_adversaries == "split") {
      // contiguous node blocks, one adversary per block
      const std::size_t j = k * adversaries.size() / k_nodes;
      n.cfg.game = build_game(cfg, data.train, std::vector<std::string>{adversaries[j]});
    } else {
      n.cfg.game = build_game(cfg, data.train);
    }
    nodes.push_back(std::move(n));
  }
  return nodes;
}

// ---------------------------------------------------------------------------
// Run bundles

namespace {

std::string short_hash(const std::string& h) { return h.substr(0, 12); }

struct Bundle {
  std::string dir;
  std::string hash;
  std::vector<std::pair<std::string, std::string>> artifacts;  // name, path

  std::string path(const std::string& name) const { return (fs::path(dir) / name).string(); }
};

Bundle open_bundle(const ExperimentConfig& cfg, const std::string& label) {
  Bundle b;
  b.hash = config_hash(cfg);
  b.dir = (fs::path(cfg.output_dir) / (label + "-" + short_hash(b.hash))).string();
  fs::create_directories(b.dir);
  return b;
}

void write_eval_rows(MetricsSink& sink, const std::string& hash, const EvalResult& r) {
  for (const auto* part : {&r.train, &r.test}) {
    const std::string split_name = part == &r.train ? "train" : "test";
    for (const auto& [name, m] : *part) {
      sink.append({hash, "eval", 0, name, "ce_loss", split_name, m.ce});
      sink.append({hash, "eval", 0, name, "accuracy", split_name, m.accuracy});
      sink.append({hash, "eval", 0, name, "f1", split_name, m.f1});
    }
  }
}

void write_history_rows(MetricsSink& sink, const std::string& hash, const std::vector<EpochRecord>& history,
                        const std::string& prefix = "") {
  for (const auto& rec : history) {
    sink.append({hash, "train", rec.epoch, prefix + "encoder", "ce_loss", "train", rec.encoder_loss});
    for (const auto& [name, v] : rec.objective_loss)
      sink.append({hash, "train", rec.epoch, prefix + name, "ce_loss", "train", v});
  }
}

json eval_summary(const EvalResult& r) {
  json j = json::object();
  for (const auto& [name, m] : r.test) j[name] = {{"test_ce", m.ce}, {"test_accuracy", m.accuracy}, {"test_f1", m.f1}};
  return j;
}

json data_summary(const PreparedData& d) {
  json j = {{"n_train", d.train.size()}, {"n_test", d.test.size()}, {"dim", d.train.dim()}};
  if (!d.nodes.empty()) {
    json sizes = json::array();
    for (const auto& n : d.nodes) sizes.push_back(n.size());
    j["node_sizes"] = sizes;
  }
  if (d.csv_report) {
    j["csv"] = {{"rows_read", d.csv_report->rows_read},
                {"dropped_missing_objective", d.csv_report->dropped_missing_objective},
                {"dropped_missing_feature", d.csv_report->dropped_missing_feature}};
  }
  return j;
}

std::string write_manifest(const Bundle& b, const ExperimentConfig& cfg, const std::string& subcommand,
                           RunOutcome& out, double seconds, json extra) {
  json artifacts = json::array();
  std::string listing;
  for (const auto& [name, path] : b.artifacts) {
    const auto digest = git_blob_sha1_file(path);
    artifacts.push_back({{"name", name}, {"path", path}, {"git_blob_sha1", digest}});
    listing += name + " " + digest + "\n";
  }
  json m;
  m["tool"] = "prl";
  m["subcommand"] = subcommand;
  m["experiment_hash"] = b.hash;
  m["config"] = json::parse(config_to_json(cfg));
  m["seeds"] = {{"seed", cfg.seed}, {"data_seed", cfg.data_seed()}};
  m["status"] = out.status;
  m["exit_code"] = out.exit_code;
  m["error"] = out.error.empty() ? json() : json(out.error);
  m["wall_time_seconds"] = seconds;
  m["artifacts"] = artifacts;
  m["content_digest"] = git_blob_sha1(listing);
  for (auto& [k, v] : extra.items()) m[k] = v;
  const std::string path = b.path("manifest.json");
  std::ofstream os(path);
  os << m.dump(2) << '\n';
  if (!os) throw DataError("cannot write manifest '" + path + "'");
  return path;
}

// Runs body, capturing failures into the outcome and the manifest.
template <class Body>
RunOutcome run_bundle(const ExperimentConfig& cfg, const std::string& subcommand, const std::string& label,
                      Body&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;
  Bundle b;
  json extra = json::object();
  std::string phase = "config";
  try {
    cfg.validate();
    b = open_bundle(cfg, label);
    out.dir = b.dir;
    out.experiment_hash = b.hash;
    body(b, out, extra, phase);
  } catch (...) {
    auto [code, kind] = classify_exception(std::current_exception());
    out.exit_code = code;
    out.status = "error";
    try {
      throw;
    } catch (const std::exception& e) {
      out.error = kind + " error during " + phase + ": " + e.what();
    }
    extra["error_phase"] = phase;
    extra["error_kind"] = kind;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (b.dir.empty()) {
    // config was unusable; still leave a manifest in the output root
    b.hash = "invalid";
    b.dir = cfg.output_dir.empty() ? "." : cfg.output_dir;
    std::error_code ec;
    fs::create_directories(b.dir, ec);
    b.dir = (fs::path(b.dir) / (label + "-invalid")).string();
    fs::create_directories(b.dir, ec);
    out.dir = b.dir;
  }
  try {
    out.manifest_path = write_manifest(b, cfg, subcommand, out, secs, extra);
  } catch (const std::exception& e) {
    if (out.exit_code == kExitOk) {
      out.exit_code = kExitData;
      out.status = "error";
      out.error = e.what();
    }
  }
  return out;
}

std::string checkpoint_network(Bundle& b, const std::string& name, const Network& net) {
  const auto path = b.path(name);
  save_network(path, net);
  b.artifacts.emplace_back(name, path);
  return path;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& subcommand) {
  return run_bundle(cfg, subcommand, cfg.trainer, [&](Bundle& b, RunOutcome& out, json& extra, std::string& phase) {
    phase = "data";
    const PreparedData data = prepare_data(cfg);
    extra["data"] = data_summary(data);
    const auto metrics_path = b.path("metrics.csv");
    fs::remove(metrics_path);
    MetricsSink sink(metrics_path);

    phase = "train";
    std::vector<std::string> objectives = ally_names(cfg, data.train);
    for (const auto& a : adversary_names(cfg, data.train)) objectives.push_back(a);
    const ProbeSpec probes = ProbeSpec::from(cfg.eval);
    Transform transform;
    if (cfg.trainer == "eigan") {
      auto res = train(build_eigan(cfg, data.train), data.train, cfg.seed);
      write_history_rows(sink, b.hash, res.history);
      checkpoint_network(b, "encoder.prlf", res.encoder);
      out.encoder = res.encoder;
      out.history = res.history;
      out.encoder_test_loss = game_loss(res.state, res.encoder, data.test);
    } else if (cfg.trainer == "deigan") {
      auto res = train_federated(build_fed(cfg), build_nodes(cfg, data));
      json rounds = json::array();
      for (const auto& r : res.history) {
        write_history_rows(sink, b.hash, r.epochs, "node" + std::to_string(r.node) + ":");
        rounds.push_back({{"round", r.round}, {"node", r.node}, {"upload", r.upload_size},
                          {"download", r.download_size}});
      }
      extra["aggregation_rounds"] = rounds;
      checkpoint_network(b, "encoder.prlf", res.encoder);
      out.encoder = res.encoder;
      // shard-weighted mean of the node games, each against its own discriminators
      double loss = 0.0, total = 0.0;
      for (std::size_t k = 0; k < res.nodes.size(); ++k) {
        const auto n = static_cast<double>(data.nodes[k].size());
        loss += n * game_loss(res.nodes[k], res.encoder, data.test);
        total += n;
      }
      out.encoder_test_loss = loss / total;
    } else if (cfg.trainer == "pca" || cfg.trainer == "autoencoder") {
      const PcaModel pca = pca_fit(data.train.X, cfg.baseline.variance);
      extra["pca_rank"] = pca.rank();
      if (cfg.trainer == "pca") {
        std::ofstream os(b.path("pca.prlp"), std::ios::binary);
        save_pca(os, pca);
        os.close();
        b.artifacts.emplace_back("pca.prlp", b.path("pca.prlp"));
        transform = [pca](const Matrix& X) { return pca_encode(pca, X); };
      } else {
        AutoencoderConfig ac;
        ac.latent_dim = pca.rank();
        ac.hidden = cfg.baseline.ae_hidden;
        ac.epochs = cfg.baseline.ae_epochs;
        ac.lr = cfg.baseline.ae_lr;
        auto ae = autoencoder_train(data.train.X, ac, cfg.seed);
        for (std::size_t e = 0; e < ae.mse_history.size(); ++e)
          sink.append({b.hash, "train", e + 1, "autoencoder", "mse", "train", ae.mse_history[e]});
        checkpoint_network(b, "encoder.prlf", ae.encoder);
        out.encoder = ae.encoder;
      }
    } else if (cfg.trainer == "laplace") {
      const LaplaceMech mech = laplace_fit(data.train.X, cfg.baseline.epsilon);
      std::ofstream os(b.path("laplace.prll"), std::ios::binary);
      save_laplace(os, mech);
      os.close();
      b.artifacts.emplace_back("laplace.prll", b.path("laplace.prll"));
      auto rng = std::make_shared<RngStream>(cfg.seed, streams::kBaseline);
      transform = [mech, rng](const Matrix& X) { return laplace_encode(mech, X, *rng); };
    } else {
      transform = [](const Matrix& X) { return X; };
    }

    phase = "evaluate";
    out.eval = out.encoder ? evaluate_encoder(*out.encoder, data.train, data.test, objectives, probes, cfg.seed)
                           : evaluate_encoder(transform, data.train, data.test, objectives, probes, cfg.seed);
    write_eval_rows(sink, b.hash, out.eval);
    if (out.encoder_test_loss) {
      sink.append({b.hash, "eval", 0, "encoder", "game_loss", "test", *out.encoder_test_loss});
      extra["encoder_test_loss"] = *out.encoder_test_loss;
    }
    b.artifacts.emplace_back("metrics.csv", metrics_path);
    extra["summary"] = eval_summary(out.eval);
    phase = "write";
  });
}

RunOutcome run_generate_data(const ExperimentConfig& cfg) {
  return run_bundle(cfg, "generate-data", "data", [&](Bundle& b, RunOutcome&, json& extra, std::string& phase) {
    phase = "data";
    const PreparedData data = prepare_data(cfg);
    extra["data"] = data_summary(data);
    phase = "write";
    save_dataset(b.path("train.prld"), data.train);
    b.artifacts.emplace_back("train.prld", b.path("train.prld"));
    save_dataset(b.path("test.prld"), data.test);
    b.artifacts.emplace_back("test.prld", b.path("test.prld"));
    for (std::size_t k = 0; k < data.nodes.size(); ++k) {
      const auto name = "node-" + std::to_string(k) + ".prld";
      save_dataset(b.path(name), data.nodes[k]);
      b.artifacts.emplace_back(name, b.path(name));
    }
  });
}

RunOutcome run_evaluate(const ExperimentConfig& cfg, const std::string& encoder_path) {
  return run_bundle(cfg, "evaluate", "evaluate", [&](Bundle& b, RunOutcome& out, json& extra, std::string& phase) {
    phase = "data";
    const PreparedData data = prepare_data(cfg);
    extra["data"] = data_summary(data);
    std::vector<std::string> objectives = ally_names(cfg, data.train);
    for (const auto& a : adversary_names(cfg, data.train)) objectives.push_back(a);
    phase = "evaluate";
    if (!encoder_path.empty()) {
      out.encoder = load_network(encoder_path);
      extra["encoder"] = {{"path", encoder_path}, {"git_blob_sha1", git_blob_sha1_file(encoder_path)}};
      out.eval = evaluate_encoder(*out.encoder, data.train, data.test, objectives, ProbeSpec::from(cfg.eval), cfg.seed);
    } else {
      out.eval = evaluate_encoder([](const Matrix& X) { return X; }, data.train, data.test, objectives,
                                  ProbeSpec::from(cfg.eval), cfg.seed);
    }
    const auto metrics_path = b.path("metrics.csv");
    fs::remove(metrics_path);
    {
      MetricsSink sink(metrics_path);
      write_eval_rows(sink, b.hash, out.eval);
    }
    b.artifacts.emplace_back("metrics.csv", metrics_path);
    extra["summary"] = eval_summary(out.eval);
  });
}

// ---------------------------------------------------------------------------
// Sweeps

ExperimentConfig sweep_point(const ExperimentConfig& cfg, double value, std::size_t repetition) {
  ExperimentConfig c = cfg;
  const auto& axis = cfg.sweep.axis;
  auto as_count = [&](const char* what) {
    if (!(value >= 1.0) || value != std::floor(value))
      throw ConfigError(std::string("sweep value for ") + what + " must be a positive integer");
    return static_cast<std::size_t>(value);
  };
  if (axis == "alpha") c.game.alpha = value;
  else if (axis == "phi") c.fed.phi = value;
  else if (axis == "delta") c.fed.delta = as_count("delta");
  else if (axis == "nodes") c.fed.nodes = as_count("nodes");
  else if (axis == "encoder_dim") c.game.encoder_dim = as_count("encoder_dim");
  else if (axis == "ally_sigma") c.dataset.ally_sigma = value;
  else if (axis == "adv_sigma") c.dataset.adv_sigma = value;
  else throw ConfigError("unknown sweep.axis '" + axis + "'");
  c.dataset.seed = cfg.data_seed();
  c.seed = cfg.seed + repetition;
  c.sweep = SweepSpec{};
  c.validate();
  return c;
}

SweepOutcome run_sweep(const ExperimentConfig& cfg) {
  SweepOutcome res;
  res.values = cfg.sweep.values;
  RunOutcome parent = run_bundle(cfg, "sweep", "sweep", [&](Bundle& b, RunOutcome&, json& extra, std::string& phase) {
    if (cfg.sweep.axis.empty() || cfg.sweep.values.empty())
      throw ConfigError("sweep needs sweep.axis and a non-empty sweep.values");
    std::vector<ExperimentConfig> children;
    for (double v : cfg.sweep.values)
      for (std::size_t r = 0; r < cfg.sweep.repetitions; ++r) {
        children.push_back(sweep_point(cfg, v, r));
        children.back().output_dir = b.dir;
      }
    phase = "train";
    std::vector<RunOutcome> outcomes(children.size());
    const auto count = static_cast<std::int64_t>(children.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      outcomes[idx] = run_experiment(children[idx], "sweep-point");
    }

    phase = "write";
    res.csv_path = b.path("sweep.csv");
    std::ofstream csv(res.csv_path);
    csv << "axis,axis_value,repetition,experiment_hash,objective,metric,split,value\n";
    json kids = json::array();
    res.runs.assign(cfg.sweep.values.size(), {});
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const std::size_t vi = i / cfg.sweep.repetitions, rep = i % cfg.sweep.repetitions;
      const auto& o = outcomes[i];
      kids.push_back({{"axis_value", cfg.sweep.values[vi]}, {"repetition", rep}, {"manifest", o.manifest_path},
                      {"status", o.status}, {"exit_code", o.exit_code}});
      if (o.exit_code != kExitOk && res.exit_code == kExitOk) res.exit_code = o.exit_code;
      for (const auto* part : {&o.eval.train, &o.eval.test}) {
        const char* split_name = part == &o.eval.train ? "train" : "test";
        for (const auto& [name, m] : *part) {
          const std::pair<const char*, double> ms[] = {{"ce_loss", m.ce}, {"accuracy", m.accuracy}, {"f1", m.f1}};
          for (const auto& [metric, v] : ms) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g,%zu,", cfg.sweep.values[vi], rep);
            char val[64];
            std::snprintf(val, sizeof val, "%.17g", v);
            csv << cfg.sweep.axis << ',' << buf << o.experiment_hash << ',' << name << ',' << metric << ','
                << split_name << ',' << val << '\n';
          }
        }
      }
      res.runs[vi].push_back(o);
    }
    csv.close();
    b.artifacts.emplace_back("sweep.csv", res.csv_path);
    extra["children"] = kids;
  });
  res.dir = parent.dir;
  res.manifest_path = parent.manifest_path;
  if (parent.exit_code != kExitOk) res.exit_code = parent.exit_code;
  return res;
}

// ---------------------------------------------------------------------------
// DP ε tuning

double laplace_probe_ce(const LabeledDataset& train, const LabeledDataset& test, const std::string& objective,
                        double epsilon, const ProbeSpec& probes, std::uint64_t seed) {
  const LaplaceMech mech = laplace_fit(train.X, epsilon);
  RngStream noise(seed, streams::kBaseline);
  const Matrix ztrain = laplace_encode(mech, train.X, noise);
  const Matrix ztest = laplace_encode(mech, test.X, noise);
  auto r = evaluate_encoded(ztrain, ztest, train, test, {objective}, probes, seed);
  return r.test.at(objective).ce;
}

TuneResult tune_dp_epsilon(const LabeledDataset& train, const LabeledDataset& test, const std::string& objective,
                           double target_ce, double tolerance, const ProbeSpec& probes, std::uint64_t seed,
                           double eps_lo, double eps_hi) {
  if (!(eps_lo > 0.0 && eps_lo < eps_hi)) throw ConfigError("tune_dp_epsilon needs 0 < eps_lo < eps_hi");
  if (!(tolerance > 0.0)) throw ConfigError("tune_dp_epsilon tolerance must be positive");
  TuneResult r;
  auto f = [&](double eps) {
    const double ce = laplace_probe_ce(train, test, objective, eps, probes, seed);
    r.trace.emplace_back(eps, ce);
    if (!std::isfinite(ce)) throw DivergenceError("probe", ce, "probe CE is not finite at epsilon " + std::to_string(eps));
    return ce;
  };
  // CE falls as ε grows (less noise)
  const double f_hi = f(eps_hi);
  if (std::abs(f_hi - target_ce) <= tolerance) {
    r.epsilon = eps_hi;
    r.achieved_ce = f_hi;
    r.converged = true;
    return r;
  }
  if (f_hi > target_ce + tolerance) {
    r.bracket_failure = true;  // even the least noise leaks less than the target allows
    r.epsilon = eps_hi;
    r.achieved_ce = f_hi;
    return r;
  }
  const double f_lo = f(eps_lo);
  if (std::abs(f_lo - target_ce) <= tolerance) {
    r.epsilon = eps_lo;
    r.achieved_ce = f_lo;
    r.converged = true;
    return r;
  }
  if (f_lo < target_ce - tolerance) {
    r.bracket_failure = true;
    r.epsilon = eps_lo;
    r.achieved_ce = f_lo;
    return r;
  }
  double lo = std::log(eps_lo), hi = std::log(eps_hi);
  while (r.iterations < kMaxBisections) {
    ++r.iterations;
    const double mid = 0.5 * (lo + hi);
    const double ce = f(std::exp(mid));
    r.epsilon = std::exp(mid);
    r.achieved_ce = ce;
    if (std::abs(ce - target_ce) <= tolerance) {
      r.converged = true;
      return r;
    }
    if (ce > target_ce) lo = mid;
    else hi = mid;
  }
  return r;
}

RunOutcome run_tune_dp(const ExperimentConfig& cfg) {
  return run_bundle(cfg, "tune-dp", "tune-dp", [&](Bundle& b, RunOutcome& out, json& extra, std::string& phase) {
    phase = "data";
    const PreparedData data = prepare_data(cfg);
    extra["data"] = data_summary(data);
    const auto adversaries = adversary_names(cfg, data.train);
    const std::string objective = cfg.tune.objective.empty() ? adversaries.front() : cfg.tune.objective;
    if (!data.train.has_label(objective)) throw ConfigError("tune.objective '" + objective + "' not in dataset");
    const ProbeSpec probes = ProbeSpec::from(cfg.eval);
    double target = cfg.tune.target_ce;
    if (target <= 0.0) {
      phase = "train";
      auto res = train(build_eigan(cfg, data.train), data.train, cfg.seed);
      auto ev = evaluate_encoder(res.encoder, data.train, data.test, {objective}, probes, cfg.seed);
      target = ev.test.at(objective).ce;
      extra["target_source"] = "eigan";
    }
    phase = "tune";
    const auto t = tune_dp_epsilon(data.train, data.test, objective, target, cfg.tune.tolerance, probes, cfg.seed,
                                   cfg.tune.eps_lo, cfg.tune.eps_hi);
    json trace = json::array();
    for (const auto& [e, ce] : t.trace) trace.push_back({{"epsilon", e}, {"ce", ce}});
    extra["tune"] = {{"objective", objective},   {"target_ce", target},         {"epsilon", t.epsilon},
                     {"achieved_ce", t.achieved_ce}, {"iterations", t.iterations}, {"converged", t.converged},
                     {"bracket_failure", t.bracket_failure}, {"trace", trace}};
    if (t.bracket_failure) out.status = "bracket_failure";
    else if (!t.converged) out.status = "not_converged";

    phase = "evaluate";
    std::vector<std::string> objectives = ally_names(cfg, data.train);
    for (const auto& a : adversaries) objectives.push_back(a);
    const LaplaceMech mech = laplace_fit(data.train.X, t.epsilon);
    auto rng = std::make_shared<RngStream>(cfg.seed, streams::kBaseline);
    out.eval = evaluate_encoder([mech, rng](const Matrix& X) { return laplace_encode(mech, X, *rng); }, data.train,
                                data.test, objectives, probes, cfg.seed);
    const auto metrics_path = b.path("metrics.csv");
    fs::remove(metrics_path);
    {
      MetricsSink sink(metrics_path);
      write_eval_rows(sink, b.hash, out.eval);
    }
    b.artifacts.emplace_back("metrics.csv", metrics_path);
    extra["summary"] = eval_summary(out.eval);
  });
}

void write_encoded_csv(const std::string& path, const Matrix& Z, const LabeledDataset& ds) {
  if (Z.rows() != ds.size()) throw ShapeError("write_encoded_csv: row count mismatch");
  std::ofstream os(path);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < Z.cols(); ++j) os << (j ? "," : "") << 'z' << j;
  for (const auto& l : ds.labels) os << ',' << l.name;
  os << '\n';
  std::vector<std::vector<std::size_t>> cls;
  for (const auto& l : ds.labels) cls.push_back(class_indices(l.onehot));
  char buf[64];
  for (std::size_t r = 0; r < Z.rows(); ++r) {
    for (std::size_t j = 0; j < Z.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", Z(r, j));
      os << (j ? "," : "") << buf;
    }
    for (std::size_t i = 0; i < ds.labels.size(); ++i) os << ',' << ds.labels[i].class_names[cls[i][r]];
    os << '\n';
  }
}

}  // namespace prl
