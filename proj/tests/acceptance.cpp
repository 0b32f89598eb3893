// Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prl/baselines.hpp"
#include "prl/deigan.hpp"
#include "prl/eigan.hpp"
#include "prl/errors.hpp"
#include "prl/game.hpp"
#include "prl/harness.hpp"
#include "prl/neural.hpp"

namespace fs = std::filesystem;
using namespace prl;

namespace {

struct Verdict {
  enum { pass, fail, skip } status = fail;
  std::string detail;
};

Verdict check(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

fs::path out_root() {
  const char* env = std::getenv("PRL_ACCEPT_OUT");
  return env ? fs::path(env) : fs::temp_directory_path() / "prl-acceptance";
}

ExperimentConfig base_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.output_dir = (out_root() / name).string();
  return cfg;
}

RunOutcome run_ok(const ExperimentConfig& cfg) {
  auto r = run_experiment(cfg, "acceptance");
  if (r.exit_code != kExitOk) throw std::runtime_error("run failed: " + r.error);
  return r;
}

double test_acc(const RunOutcome& r, const std::string& name) { return r.eval.test.at(name).accuracy; }

// ---------------------------------------------------------------------------
// 1. Finite-difference gradients on random networks

double fd_loss(const Network& net, const Matrix& x, const Matrix& r, const Matrix& y) {
  const Matrix out = predict(net, x);
  double s = 0.0;
  if (net.layers().back().activation == Activation::softmax) s = cross_entropy(y, out);
  else
    for (std::size_t i = 0; i < out.size(); ++i) s += r.data()[i] * out.data()[i];
  return s + l2_penalty(net);
}

Verdict gradient_correctness() {
  RngStream rng(101, 0);
  const Activation kinds[] = {Activation::linear, Activation::relu, Activation::tanh, Activation::sigmoid};
  double worst = 0.0;
  std::set<Activation> seen;
  for (int t = 0; t < 20; ++t) {
    const std::size_t depth = 2 + rng.uniform_index(3);
    const std::size_t in = 2 + rng.uniform_index(4), out = 2 + rng.uniform_index(3);
    std::vector<std::size_t> hidden;
    for (std::size_t l = 1; l < depth; ++l) hidden.push_back(2 + rng.uniform_index(5));
    // cycle through hidden and output kinds so every activation appears
    const Activation h = kinds[t % 4];
    const Activation f = t % 5 == 4 ? Activation::softmax : kinds[(t / 4 + t) % 4];
    seen.insert(h);
    seen.insert(f);
    Network net = init_network(mlp_layers(in, hidden, out, h, f, 0.0), t % 2 ? 1e-3 : 0.0, rng);
    for (std::size_t l = 0; l < net.depth(); ++l)
      net.mutable_bias(l) = rng_uniform(rng, 1, net.layers()[l].out_dim, -0.5, 0.5);
    const std::size_t batch = 1 + rng.uniform_index(6);
    const Matrix x = rng_uniform(rng, batch, in, -1.5, 1.5);
    const Matrix r = rng_uniform(rng, batch, out, -1, 1);
    Matrix y(batch, out);
    for (std::size_t i = 0; i < batch; ++i) y(i, rng.uniform_index(out)) = 1.0;

    auto fwd = forward(net, x, Mode::eval);
    const Gradients g = f == Activation::softmax
                            ? backward(net, fwd.tape, scale(sub(fwd.output, y), 1.0 / double(batch)), Upstream::logits)
                            : backward(net, fwd.tape, r);
    std::vector<double> analytic;
    for (std::size_t l = 0; l < net.depth(); ++l) {
      analytic.insert(analytic.end(), g.weights[l].data().begin(), g.weights[l].data().end());
      analytic.insert(analytic.end(), g.biases[l].data().begin(), g.biases[l].data().end());
    }
    auto params = flatten_params(net);
    const double step = 1e-5;
    for (std::size_t q = 0; q < params.size(); ++q) {
      const double orig = params[q];
      params[q] = orig + step;
      unflatten_params(net, params);
      const double up = fd_loss(net, x, r, y);
      params[q] = orig - step;
      unflatten_params(net, params);
      const double down = fd_loss(net, x, r, y);
      params[q] = orig;
      unflatten_params(net, params);
      const double fd = (up - down) / (2 * step);
      const double err = std::abs(fd - analytic[q]) / std::max({std::abs(fd), std::abs(analytic[q]), 1e-6});
      worst = std::max(worst, err);
    }
  }
  return check(worst <= 1e-4 && seen.size() == 5, fmt("max relative error %.3g over 20 networks", worst));
}

// ---------------------------------------------------------------------------
// 2. minimax_score = -encoder_loss

Prediction random_prediction(RngStream& rng, std::size_t rows, std::size_t classes) {
  Prediction p{Matrix(rows, classes), Matrix(rows, classes)};
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += p.yhat(i, c) = rng.uniform(1e-3, 1.0);
    for (std::size_t c = 0; c < classes; ++c) p.yhat(i, c) /= s;
    p.y(i, rng.uniform_index(classes)) = 1.0;
  }
  return p;
}

Verdict duality_identity() {
  RngStream rng(102, 0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::pair<std::string, std::size_t>> allies, advs;
    for (std::size_t i = 0, n = 1 + rng.uniform_index(3); i < n; ++i)
      allies.push_back({"a" + std::to_string(i), 2 + rng.uniform_index(4)});
    for (std::size_t j = 0, m = 1 + rng.uniform_index(3); j < m; ++j)
      advs.push_back({"v" + std::to_string(j), 2 + rng.uniform_index(4)});
    auto game = make_game(rng.uniform(0.01, 0.99), allies, advs);
    if (t % 2) game.loss_form = LossForm::printed;
    PredictionBatch preds;
    const std::size_t rows = 1 + rng.uniform_index(32);
    for (const auto* o : game.objectives()) preds[o->name] = random_prediction(rng, rows, o->num_classes);
    worst = std::max(worst, std::abs(minimax_score(preds, game) + encoder_loss(preds, game)));
  }
  return check(worst <= 1e-12, fmt("max |score + loss| %.3g over 1000 batches", worst));
}

// ---------------------------------------------------------------------------
// 3. K=1, phi=1, delta=1 replays centralized training

Verdict protocol_collapse() {
  int identical = 0;
  for (std::uint64_t seed : {11, 22, 33, 44, 55}) {
    auto cfg = base_config("collapse");
    cfg.seed = seed;
    cfg.game.epochs = 40;
    const auto central = run_ok(cfg);
    cfg.trainer = "deigan";
    cfg.fed.nodes = 1;
    cfg.fed.phi = 1.0;
    cfg.fed.delta = 1;
    const auto fed = run_ok(cfg);
    identical += bitwise_equal(*central.encoder, *fed.encoder);
  }
  return check(identical == 5, fmt("%d of 5 seeds bitwise identical", identical));
}

// ---------------------------------------------------------------------------
// 4. Octant with two allies and one adversary

Verdict octant_behavior() {
  auto cfg = base_config("octant");
  cfg.dataset.generator = "octant";
  cfg.dataset.n_per_cluster = 1000;
  cfg.game.alpha = 0.5;
  cfg.game.epochs = 300;
  cfg.seed = 4;
  const auto r = run_ok(cfg);
  const auto& adv = r.eval.test.at("axis_z");
  const double ax = test_acc(r, "axis_x"), ay = test_acc(r, "axis_y");
  const bool ok = adv.accuracy >= 0.45 && adv.accuracy <= 0.60 && std::abs(adv.ce - std::log(2.0)) <= 0.05 &&
                  ax >= 0.90 && ay >= 0.90;
  return check(ok, fmt("adversary acc %.3f ce %.3f (ln2 %.3f), allies %.3f / %.3f", adv.accuracy, adv.ce,
                       std::log(2.0), ax, ay));
}

// ---------------------------------------------------------------------------
// 5. Overlap sweep against unencoded probes

Verdict overlap_sweep() {
  bool ok = true;
  std::string detail;
  for (double sigma : {0.3, 0.5, 0.7, 0.9}) {
    std::vector<double> e_adv, e_ally, u_adv, u_ally;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto cfg = base_config("overlap");
      cfg.dataset.generator = "overlap";
      cfg.dataset.ally_sigma = sigma;
      cfg.dataset.adv_sigma = 0.5;
      cfg.game.epochs = 600;
      cfg.seed = seed;
      const auto e = run_ok(cfg);
      cfg.trainer = "unencoded";
      const auto u = run_ok(cfg);
      e_adv.push_back(test_acc(e, "shape"));
      e_ally.push_back(test_acc(e, "color"));
      u_adv.push_back(test_acc(u, "shape"));
      u_ally.push_back(test_acc(u, "color"));
    }
    const double ea = median(e_adv), el = median(e_ally), ua = median(u_adv), ul = median(u_ally);
    ok = ok && ea <= ua - 0.08 && el >= ul - 0.10;
    detail += fmt("s%.1f adv %.3f/%.3f ally %.3f/%.3f; ", sigma, ea, ua, el, ul);
  }
  return check(ok, detail + "(eigan/unencoded medians)");
}

// ---------------------------------------------------------------------------
// 6. Node count with variance-ramp shards

Verdict node_count() {
  bool ok = true;
  std::string detail;
  for (std::size_t k : {2, 5, 10}) {
    std::vector<double> d_ally, d_adv;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto cfg = base_config("nodes");
      cfg.dataset.generator = "overlap";
      cfg.dataset.n_per_cluster = 100;
      cfg.fed.shard = "variance_ramp";
      cfg.fed.nodes = k;
      // both trainers must reach the adversary-at-chance regime before the
      // comparison means anything; mid-game adversary accuracy swings widely
      cfg.game.epochs = 800;
      cfg.game.lr_encoder = cfg.game.lr_ally = cfg.game.lr_adversary = 0.05;
      cfg.seed = seed;
      const auto e = run_ok(cfg);
      cfg.trainer = "deigan";
      const auto d = run_ok(cfg);
      d_ally.push_back(std::abs(test_acc(d, "color") - test_acc(e, "color")));
      d_adv.push_back(std::abs(test_acc(d, "shape") - test_acc(e, "shape")));
    }
    const double ga = median(d_ally), gv = median(d_adv);
    ok = ok && ga <= 0.05 && gv <= 0.05;
    detail += fmt("K=%zu |dAlly| %.3f |dAdv| %.3f; ", k, ga, gv);
  }
  return check(ok, detail);
}

// ---------------------------------------------------------------------------
// 7 and 8. Split objectives on label-skewed nodes

ExperimentConfig split_setting(std::uint64_t seed) {
  auto cfg = base_config("split");
  cfg.trainer = "deigan";
  cfg.dataset.generator = "octant";
  cfg.dataset.octant_roles = "one_ally_two_adversaries";
  // zero-fill aggregation shrinks every coordinate a node does not upload, so
  // nodes need enough local steps per round to make up the loss
  cfg.dataset.n_per_cluster = 1000;
  cfg.game.lr_encoder = cfg.game.lr_ally = cfg.game.lr_adversary = 0.05;
  cfg.fed.nodes = 10;
  cfg.fed.phi = 0.8;
  cfg.fed.delta = 2;
  cfg.fed.shard = "label_skew";
  cfg.fed.node_adversaries = "split";
  cfg.game.epochs = 200;
  cfg.seed = seed;
  return cfg;
}

Verdict split_objectives() {
  bool ok = true;
  std::string detail;
  std::map<std::string, std::vector<double>> gaps;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto cfg = split_setting(seed);
    const auto split = run_ok(cfg);
    cfg.fed.node_adversaries = "all";
    const auto all = run_ok(cfg);
    for (const auto& [name, m] : split.eval.test) gaps[name].push_back(std::abs(m.accuracy - test_acc(all, name)));
  }
  for (const auto& [name, g] : gaps) {
    const double worst = *std::max_element(g.begin(), g.end());
    ok = ok && worst <= 0.05;
    detail += fmt("%s |d| %.3f; ", name.c_str(), worst);
  }
  return check(ok, detail + "(worst of 3 seeds)");
}

Verdict phi_delta_robustness() {
  auto ally_median = [](auto mutate) {
    std::vector<double> acc;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto cfg = split_setting(seed);
      mutate(cfg);
      acc.push_back(test_acc(run_ok(cfg), "axis_x"));
    }
    return median(acc);
  };
  std::vector<double> by_delta, by_phi;
  std::string detail = "delta:";
  for (std::size_t d : {1, 2, 4, 8}) {
    by_delta.push_back(ally_median([d](ExperimentConfig& c) {
      c.fed.delta = d;
      c.fed.phi = 0.8;
    }));
    detail += fmt(" %.3f", by_delta.back());
  }
  detail += "; phi:";
  for (double p : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    by_phi.push_back(ally_median([p](ExperimentConfig& c) {
      c.fed.delta = 2;
      c.fed.phi = p;
    }));
    detail += fmt(" %.3f", by_phi.back());
  }
  auto spread = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end()); };
  const double sd = spread(by_delta), sp = spread(by_phi);
  const double dip = by_phi[3] - by_phi[4];
  detail += fmt("; spreads %.3f / %.3f; phi=1 vs 0.8 %s by %.3f", sd, sp, dip > 0 ? "lower" : "not lower", std::abs(dip));
  return check(sd <= 0.07 && sp <= 0.07, detail);
}

// ---------------------------------------------------------------------------
// 9. Adult census table

Verdict adult_reproduction() {
  const fs::path path = "data/adult/adult.csv";
  if (!fs::exists(path)) return {Verdict::skip, "data not present (" + path.string() + ")"};
  auto cfg = load_config("configs/adult.json");
  cfg.output_dir = (out_root() / "adult").string();
  const auto unencoded = [&] {
    auto c = cfg;
    c.trainer = "unencoded";
    return run_ok(c);
  }();
  const double u_inc = test_acc(unencoded, "income"), u_gen = test_acc(unencoded, "gender");
  // larger alpha favours the ally, so adversary accuracy rises with alpha
  double lo = 0.05, hi = 0.95, alpha = 0.5;
  RunOutcome best;
  bool hit = false;
  for (int it = 0; it < 8 && !hit; ++it) {
    alpha = 0.5 * (lo + hi);
    cfg.game.alpha = alpha;
    best = run_ok(cfg);
    const double g = test_acc(best, "gender");
    if (std::abs(g - 0.67) <= 0.03) hit = true;
    else if (g > 0.67) hi = alpha;
    else lo = alpha;
  }
  const double inc = test_acc(best, "income"), gen = test_acc(best, "gender");
  const bool ok = hit && inc >= 0.81 && std::abs(u_inc - 0.85) <= 0.02 && std::abs(u_gen - 0.85) <= 0.02;
  return check(ok, fmt("alpha %.3f: income %.3f gender %.3f; unencoded %.3f / %.3f", alpha, inc, gen, u_inc, u_gen));
}

// ---------------------------------------------------------------------------
// 10. Baseline statistics

Verdict baseline_statistics() {
  std::string detail;
  // Laplace: column range 4, epsilon 2, so b = 2 and std = 2·sqrt(2)
  Matrix X(2, 1);
  X(1, 0) = 4.0;
  const auto mech = laplace_fit(X, 2.0);
  RngStream rng(110, 0);
  const Matrix zeros(1000000, 1);
  const Matrix noisy = laplace_encode(mech, zeros, rng);
  double m = 0.0, s2 = 0.0;
  for (double v : noisy.data()) m += v;
  m /= double(noisy.size());
  for (double v : noisy.data()) s2 += (v - m) * (v - m);
  const double sd = std::sqrt(s2 / double(noisy.size() - 1)), expect = std::sqrt(2.0) * 2.0;
  const bool lap_ok = std::abs(sd / expect - 1.0) <= 0.02;
  detail += fmt("laplace std %.4f vs %.4f; ", sd, expect);

  // 12 columns driven by 4 latent factors plus small noise, so the retained
  // rank is well below the dimension
  Matrix P(2000, 12);
  {
    const Matrix W = rng_uniform(rng, 4, 12, -1, 1);
    for (std::size_t i = 0; i < P.rows(); ++i) {
      double u[4];
      for (double& x : u) x = rng.normal();
      for (std::size_t j = 0; j < P.cols(); ++j) {
        P(i, j) = 0.05 * rng.normal();
        for (std::size_t k = 0; k < 4; ++k) P(i, j) += u[k] * W(k, j);
      }
    }
  }
  const auto pca = pca_fit(P, 0.99);
  std::vector<double> mean(P.cols(), 0.0);
  for (std::size_t i = 0; i < P.rows(); ++i)
    for (std::size_t j = 0; j < P.cols(); ++j) mean[j] += P(i, j) / double(P.rows());
  const Matrix cov = covariance(P, mean);
  Eigen::MatrixXd C(cov.rows(), cov.cols());
  for (std::size_t i = 0; i < cov.rows(); ++i)
    for (std::size_t j = 0; j < cov.cols(); ++j) C(long(i), long(j)) = cov(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  const auto mine = symmetric_eigen(cov);
  double eig_err = 0.0;
  for (std::size_t i = 0; i < mine.values.size(); ++i)
    eig_err = std::max(eig_err, std::abs(mine.values[i] - es.eigenvalues()(long(mine.values.size() - 1 - i))));
  const bool pca_ok = pca.retained_variance() >= 0.99 && eig_err <= 1e-8;
  detail += fmt("pca rank %zu retains %.4f, eigen error %.2g; ", pca.rank(), pca.retained_variance(), eig_err);

  const auto s = split(gen_quadrant(250, 0.5, 110), 0.7, 110);
  ProbeSpec probes;
  const double f_lo = laplace_probe_ce(s.train, s.test, "shape", 1e-2, probes, 110);
  const double f_hi = laplace_probe_ce(s.train, s.test, "shape", 1e3, probes, 110);
  const double target = 0.5 * (f_lo + f_hi);
  const auto t = tune_dp_epsilon(s.train, s.test, "shape", target, 0.02, probes, 110, 1e-2, 1e3);
  const bool tune_ok = t.converged && t.iterations <= 20;
  detail += fmt("tune target %.3f reached %.3f at eps %.3g in %zu bisections", target, t.achieved_ce, t.epsilon,
                t.iterations);
  return check(lap_ok && pca_ok && tune_ok, detail);
}

// ---------------------------------------------------------------------------
// 11. Two nodes sharing an ally: mean node loss equals the combined game

Verdict node_game_identity() {
  RngStream rng(111, 0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto g1 = make_game(rng.uniform(0.05, 0.95), {{"A", 2}}, {{"V1", 2}});
    const auto g2 = make_game(rng.uniform(0.05, 0.95), {{"A", 2}}, {{"V2", 2}});
    const std::size_t rows = 1 + rng.uniform_index(16);
    const auto a = random_prediction(rng, rows, 2), v1 = random_prediction(rng, rows, 2),
               v2 = random_prediction(rng, rows, 2);
    const double avg = 0.5 * (encoder_loss({{"A", a}, {"V1", v1}}, g1) + encoder_loss({{"A", a}, {"V2", v2}}, g2));
    const double joint = encoder_loss({{"A", a}, {"V1", v1}, {"V2", v2}}, combine_node_games({g1, g2}));
    worst = std::max(worst, std::abs(avg - joint));
  }
  return check(worst <= 1e-12, fmt("max difference %.3g over 100 settings", worst));
}

// ---------------------------------------------------------------------------
// 12. Overlapping objectives fail to settle

LabeledDataset overlap_task(const LabeledDataset& oct, const std::string& adversary_axis) {
  LabeledDataset d;
  d.X = oct.X;
  d.feature_names = oct.feature_names;
  const auto x = class_indices(oct.label("axis_x").onehot), y = class_indices(oct.label("axis_y").onehot);
  std::vector<std::size_t> xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xy[i] = 2 * x[i] + y[i];
  d.labels.push_back({"xy", onehot_from_indices(xy, 4), {"00", "01", "10", "11"}, Role::ally});
  auto adv = oct.label(adversary_axis);
  adv.name = "bit";
  adv.role = Role::adversary;
  d.labels.push_back(adv);
  return d;
}

double last_quartile_variance(const std::vector<EpochRecord>& h) {
  std::vector<double> tail;
  for (std::size_t e = h.size() - h.size() / 4; e < h.size(); ++e) tail.push_back(h[e].encoder_loss);
  double m = 0.0, v = 0.0;
  for (double x : tail) m += x;
  m /= double(tail.size());
  for (double x : tail) v += (x - m) * (x - m);
  return v / double(tail.size() - 1);
}

// A single run is a noisy witness (either game can wander in a given seed),
// so the variances are compared as medians over five seeds.
Verdict degenerate_overlap() {
  std::vector<double> over, ctrl;
  std::string detail = "per-seed ratios";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto oct = gen_octant(250, 0.5, seed, OctantRoles::two_allies_one_adversary);
    oct.X = normalize(oct.X, fit_normalization(oct.X));
    EiganConfig cfg;
    cfg.game = make_game(0.5, {{"xy", 4}}, {{"bit", 2}});
    cfg.game.epochs = 400;
    over.push_back(last_quartile_variance(train(cfg, overlap_task(oct, "axis_x"), seed).history));
    ctrl.push_back(last_quartile_variance(train(cfg, overlap_task(oct, "axis_z"), seed).history));
    detail += fmt(" %.3g", over.back() / ctrl.back());
  }
  const double vo = median(over), vc = median(ctrl);
  return check(vo >= 2.0 * vc,
               fmt("median last-quartile variance %.3g vs control %.3g (ratio %.2f); ", vo, vc, vo / vc) + detail);
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "gradient correctness", 60, gradient_correctness},
      {2, "duality identity", 60, duality_identity},
      {3, "protocol collapse", 120, protocol_collapse},
      {4, "octant adversary at chance", 600, octant_behavior},
      {5, "overlap sweep", 1800, overlap_sweep},
      {6, "node-count robustness", 1800, node_count},
      {7, "split-objective robustness", 1800, split_objectives},
      {8, "phi/delta robustness", 2700, phi_delta_robustness},
      {9, "adult table", 1200, adult_reproduction},
      {10, "baseline statistics", 300, baseline_statistics},
      {11, "node game identity", 60, node_game_identity},
      {12, "degenerate overlap detection", 600, degenerate_overlap},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (v.status == Verdict::pass && secs > c.budget_seconds) {
      v.status = Verdict::fail;
      v.detail += fmt(" [over the %.0f s budget]", c.budget_seconds);
    }
    const char* tag = v.status == Verdict::pass ? "PASS" : v.status == Verdict::skip ? "SKIP" : "FAIL";
    failures += v.status == Verdict::fail;
    std::printf("criterion %2d %s: %s (%.1f s) %s\n", c.id, c.name, tag, secs, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
