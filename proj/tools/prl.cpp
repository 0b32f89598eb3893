// prl: command-line front end for data generation, training, evaluation,
// sweeps and DP tuning. Every subcommand writes a run bundle and prints the
// path of its manifest.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prl/errors.hpp"
#include "prl/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment config (JSON, dotted keys)")->required();
  sub->add_option("--seed", c.seed, "override the experiment seed");
  sub->add_option("--set", c.overrides, "override one config key, e.g. --set game.alpha=0.3");
}

prl::ExperimentConfig load(const Common& c) {
  auto cfg = prl::load_config(c.config);
  for (const auto& o : c.overrides) prl::apply_override(cfg, o);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

int report(const prl::RunOutcome& r) {
  if (!r.error.empty()) std::cerr << "prl: " << r.error << '\n';
  if (!r.manifest_path.empty()) std::cout << r.manifest_path << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving representation learning experiments"};
  app.require_subcommand(1);

  Common gen, eigan, deigan, base, eval, enc, sweep, tune;
  std::string baseline_kind = "pca";
  std::string encoder_path, input_path, output_path;
  std::string eval_encoder;

  auto* s_gen = app.add_subcommand("generate-data", "generate, split and shard a dataset");
  add_common(s_gen, gen);
  auto* s_eigan = app.add_subcommand("train-eigan", "train a centralized encoder and evaluate it");
  add_common(s_eigan, eigan);
  auto* s_deigan = app.add_subcommand("train-deigan", "train a federated encoder and evaluate it");
  add_common(s_deigan, deigan);
  auto* s_base = app.add_subcommand("baseline", "fit and evaluate a baseline transform");
  add_common(s_base, base);
  s_base->add_option("--kind", baseline_kind, "pca | autoencoder | laplace | unencoded")
      ->check(CLI::IsMember({"pca", "autoencoder", "laplace", "unencoded"}));
  auto* s_eval = app.add_subcommand("evaluate", "train probes on encoded data (raw features without --encoder)");
  add_common(s_eval, eval);
  s_eval->add_option("--encoder", eval_encoder, "encoder checkpoint (.prlf)");
  auto* s_enc = app.add_subcommand("encode", "apply an encoder to a dataset and write CSV");
  add_common(s_enc, enc);
  s_enc->add_option("--encoder", encoder_path, "encoder checkpoint (.prlf)")->required();
  s_enc->add_option("--input", input_path, "dataset cache (.prld); default: the config's test split");
  s_enc->add_option("--output", output_path, "output CSV path")->required();
  auto* s_sweep = app.add_subcommand("sweep", "run one experiment per sweep.values entry");
  add_common(s_sweep, sweep);
  auto* s_tune = app.add_subcommand("tune-dp", "bisect the Laplace epsilon to match a target adversary CE");
  add_common(s_tune, tune);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*s_gen) return report(prl::run_generate_data(load(gen)));
    if (*s_eigan) {
      auto cfg = load(eigan);
      cfg.trainer = "eigan";
      return report(prl::run_experiment(cfg, "train-eigan"));
    }
    if (*s_deigan) {
      auto cfg = load(deigan);
      cfg.trainer = "deigan";
      return report(prl::run_experiment(cfg, "train-deigan"));
    }
    if (*s_base) {
      auto cfg = load(base);
      cfg.trainer = baseline_kind;
      return report(prl::run_experiment(cfg, "baseline"));
    }
    if (*s_eval) return report(prl::run_evaluate(load(eval), eval_encoder));
    if (*s_enc) {
      auto cfg = load(enc);
      const auto encoder = prl::load_network(encoder_path);
      const prl::LabeledDataset ds = input_path.empty() ? prl::prepare_data(cfg).test : prl::load_dataset(input_path);
      prl::write_encoded_csv(output_path, prl::encode(encoder, ds.X), ds);
      std::cout << output_path << '\n';
      return prl::kExitOk;
    }
    if (*s_sweep) {
      const auto r = prl::run_sweep(load(sweep));
      if (r.exit_code != prl::kExitOk) std::cerr << "prl: sweep finished with failures\n";
      if (!r.manifest_path.empty()) std::cout << r.manifest_path << '\n';
      return r.exit_code;
    }
    if (*s_tune) return report(prl::run_tune_dp(load(tune)));
  } catch (const std::exception& e) {
    std::cerr << "prl: " << e.what() << '\n';
    return prl::classify_exception(std::current_exception()).first;
  }
  return prl::kExitFailure;
}
