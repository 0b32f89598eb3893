#include "prl/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "prl/digest.hpp"
#include "prl/errors.hpp"

namespace prl {

using nlohmann::json;

namespace {

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};
template <class T>
struct is_map : std::false_type {};
template <class T>
struct is_map<std::map<std::string, T>> : std::true_type {};

template <class T>
T checked_get(const json& j, const std::string& key) {
  auto fail = [&](const char* want) -> T {
    throw ConfigError("config key '" + key + "' expects " + want + ", got " + j.dump());
  };
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) return fail("a boolean");
    return j.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_unsigned()) return fail("a non-negative integer");
    return j.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) return fail("a number");
    return j.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) return fail("a string");
    return j.get<std::string>();
  } else if constexpr (is_vector<T>::value) {
    if (!j.is_array()) return fail("an array");
    T out;
    for (const auto& e : j) out.push_back(checked_get<typename T::value_type>(e, key));
    return out;
  } else if constexpr (is_map<T>::value) {
    if (!j.is_object()) return fail("an object");
    T out;
    for (const auto& [k, v] : j.items()) out[k] = checked_get<typename T::mapped_type>(v, key + "." + k);
    return out;
  } else {
    static_assert(sizeof(T) == 0, "unsupported config type");
  }
}

struct Binding {
  std::function<void(ExperimentConfig&, const json&, const std::string&)> set;
  std::function<json(const ExperimentConfig&)> get;
};

template <class Acc>
Binding field(Acc acc) {
  return {[acc](ExperimentConfig& c, const json& j, const std::string& key) {
            auto& ref = acc(c);
            ref = checked_get<std::decay_t<decltype(ref)>>(j, key);
          },
          [acc](const ExperimentConfig& c) { return json(acc(c)); }};
}

std::string role_string(const std::optional<Role>& r) { return r ? std::string(to_string(*r)) : std::string(); }

std::optional<Role> parse_role(const std::string& s, const std::string& key) {
  if (s.empty()) return std::nullopt;
  if (s == "ally") return Role::ally;
  if (s == "adversary") return Role::adversary;
  throw ConfigError("config key '" + key + "': unknown role '" + s + "'");
}

json objectives_to_json(const std::vector<CsvObjective>& objs) {
  json arr = json::array();
  for (const auto& o : objs) {
    json e;
    e["name"] = o.name;
    e["column"] = o.column;
    e["role"] = role_string(o.role);
    e["classes"] = o.classes;
    arr.push_back(e);
  }
  return arr;
}

std::vector<CsvObjective> objectives_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config key '" + key + "' expects an array of objects");
  std::vector<CsvObjective> out;
  for (const auto& e : j) {
    if (!e.is_object()) throw ConfigError("config key '" + key + "' expects an array of objects");
    CsvObjective o;
    for (const auto& [k, v] : e.items()) {
      if (k == "name") o.name = checked_get<std::string>(v, key + ".name");
      else if (k == "column") o.column = checked_get<std::string>(v, key + ".column");
      else if (k == "role") o.role = parse_role(checked_get<std::string>(v, key + ".role"), key);
      else if (k == "classes") o.classes = checked_get<std::map<std::string, std::string>>(v, key + ".classes");
      else throw ConfigError("config key '" + key + "': unknown objective field '" + k + "'");
    }
    if (o.name.empty()) throw ConfigError("config key '" + key + "': objective needs a name");
    if (o.column.empty()) o.column = o.name;
    out.push_back(std::move(o));
  }
  return out;
}

const std::map<std::string, Binding>& bindings() {
  static const std::map<std::string, Binding> table = [] {
    std::map<std::string, Binding> t;
    t["output.dir"] = field([](auto& c) -> auto& { return c.output_dir; });
    t["trainer"] = field([](auto& c) -> auto& { return c.trainer; });
    t["seed"] = field([](auto& c) -> auto& { return c.seed; });

    t["dataset.source"] = field([](auto& c) -> auto& { return c.dataset.source; });
    t["dataset.generator"] = field([](auto& c) -> auto& { return c.dataset.generator; });
    t["dataset.n_per_cluster"] = field([](auto& c) -> auto& { return c.dataset.n_per_cluster; });
    t["dataset.sigma"] = field([](auto& c) -> auto& { return c.dataset.sigma; });
    t["dataset.ally_sigma"] = field([](auto& c) -> auto& { return c.dataset.ally_sigma; });
    t["dataset.adv_sigma"] = field([](auto& c) -> auto& { return c.dataset.adv_sigma; });
    t["dataset.octant_roles"] = field([](auto& c) -> auto& { return c.dataset.octant_roles; });
    t["dataset.circle_inner"] = field([](auto& c) -> auto& { return c.dataset.circle_inner; });
    t["dataset.circle_outer"] = field([](auto& c) -> auto& { return c.dataset.circle_outer; });
    t["dataset.path"] = field([](auto& c) -> auto& { return c.dataset.path; });
    t["dataset.split_fraction"] = field([](auto& c) -> auto& { return c.dataset.split_fraction; });
    t["dataset.seed"] = {[](ExperimentConfig& c, const json& j, const std::string& key) {
                           if (j.is_null()) c.dataset.seed.reset();
                           else c.dataset.seed = checked_get<std::uint64_t>(j, key);
                         },
                         [](const ExperimentConfig& c) { return c.dataset.seed ? json(*c.dataset.seed) : json(); }};
    t["dataset.csv.numeric"] = field([](auto& c) -> auto& { return c.dataset.csv.numeric; });
    t["dataset.csv.categorical"] = field([](auto& c) -> auto& { return c.dataset.csv.categorical; });
    t["dataset.csv.missing_tokens"] = field([](auto& c) -> auto& { return c.dataset.csv.missing_tokens; });
    t["dataset.csv.trim_whitespace"] = field([](auto& c) -> auto& { return c.dataset.csv.trim_whitespace; });
    t["dataset.csv.drop_missing_features"] =
        field([](auto& c) -> auto& { return c.dataset.csv.drop_missing_features; });
    t["dataset.csv.objectives"] = {
        [](ExperimentConfig& c, const json& j, const std::string& key) {
          c.dataset.csv.objectives = objectives_from_json(j, key);
        },
        [](const ExperimentConfig& c) { return objectives_to_json(c.dataset.csv.objectives); }};

    t["game.allies"] = field([](auto& c) -> auto& { return c.game.allies; });
    t["game.adversaries"] = field([](auto& c) -> auto& { return c.game.adversaries; });
    t["game.alpha"] = field([](auto& c) -> auto& { return c.game.alpha; });
    t["game.weights"] = field([](auto& c) -> auto& { return c.game.weights; });
    t["game.loss_form"] = field([](auto& c) -> auto& { return c.game.loss_form; });
    t["game.lr_encoder"] = field([](auto& c) -> auto& { return c.game.lr_encoder; });
    t["game.lr_ally"] = field([](auto& c) -> auto& { return c.game.lr_ally; });
    t["game.lr_adversary"] = field([](auto& c) -> auto& { return c.game.lr_adversary; });
    t["game.batch_size"] = field([](auto& c) -> auto& { return c.game.batch_size; });
    t["game.epochs"] = field([](auto& c) -> auto& { return c.game.epochs; });
    t["game.encoder_dim"] = field([](auto& c) -> auto& { return c.game.encoder_dim; });
    t["game.discriminator_update"] = field([](auto& c) -> auto& { return c.game.discriminator_update; });

    t["arch.encoder_hidden"] = field([](auto& c) -> auto& { return c.arch.encoder_hidden; });
    t["arch.discriminator_hidden"] = field([](auto& c) -> auto& { return c.arch.discriminator_hidden; });
    t["arch.dropout"] = field([](auto& c) -> auto& { return c.arch.dropout; });
    t["arch.l2"] = field([](auto& c) -> auto& { return c.arch.l2; });

    t["fed.nodes"] = field([](auto& c) -> auto& { return c.fed.nodes; });
    t["fed.delta"] = field([](auto& c) -> auto& { return c.fed.delta; });
    t["fed.phi"] = field([](auto& c) -> auto& { return c.fed.phi; });
    t["fed.rounds"] = field([](auto& c) -> auto& { return c.fed.rounds; });
    t["fed.shard"] = field([](auto& c) -> auto& { return c.fed.shard; });
    t["fed.dirichlet"] = field([](auto& c) -> auto& { return c.fed.dirichlet; });
    t["fed.download_mask"] = field([](auto& c) -> auto& { return c.fed.download_mask; });
    t["fed.aggregation"] = field([](auto& c) -> auto& { return c.fed.aggregation; });
    t["fed.node_adversaries"] = field([](auto& c) -> auto& { return c.fed.node_adversaries; });
    t["fed.parallel"] = field([](auto& c) -> auto& { return c.fed.parallel; });

    t["eval.probe_hidden"] = field([](auto& c) -> auto& { return c.eval.probe_hidden; });
    t["eval.probe_epochs"] = field([](auto& c) -> auto& { return c.eval.probe_epochs; });
    t["eval.probe_lr"] = field([](auto& c) -> auto& { return c.eval.probe_lr; });
    t["eval.probe_batch"] = field([](auto& c) -> auto& { return c.eval.probe_batch; });

    t["baseline.epsilon"] = field([](auto& c) -> auto& { return c.baseline.epsilon; });
    t["baseline.variance"] = field([](auto& c) -> auto& { return c.baseline.variance; });
    t["baseline.ae_epochs"] = field([](auto& c) -> auto& { return c.baseline.ae_epochs; });
    t["baseline.ae_lr"] = field([](auto& c) -> auto& { return c.baseline.ae_lr; });
    t["baseline.ae_hidden"] = field([](auto& c) -> auto& { return c.baseline.ae_hidden; });

    t["sweep.axis"] = field([](auto& c) -> auto& { return c.sweep.axis; });
    t["sweep.values"] = field([](auto& c) -> auto& { return c.sweep.values; });
    t["sweep.repetitions"] = field([](auto& c) -> auto& { return c.sweep.repetitions; });

    t["tune.target_ce"] = field([](auto& c) -> auto& { return c.tune.target_ce; });
    t["tune.tolerance"] = field([](auto& c) -> auto& { return c.tune.tolerance; });
    t["tune.objective"] = field([](auto& c) -> auto& { return c.tune.objective; });
    t["tune.eps_lo"] = field([](auto& c) -> auto& { return c.tune.eps_lo; });
    t["tune.eps_hi"] = field([](auto& c) -> auto& { return c.tune.eps_hi; });
    return t;
  }();
  return table;
}

json to_json_object(const ExperimentConfig& cfg) {
  json j = json::object();
  for (const auto& [key, b] : bindings()) j[key] = b.get(cfg);
  return j;
}

void set_key(ExperimentConfig& cfg, const std::string& key, const json& value) {
  auto it = bindings().find(key);
  if (it == bindings().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(cfg, value, key);
}

template <class F>
void require(bool ok, F&& msg) {
  if (!ok) throw ConfigError(msg());
}

}  // namespace

void ExperimentConfig::validate() const {
  static const std::vector<std::string> trainers{"eigan", "deigan", "pca", "autoencoder", "laplace", "unencoded"};
  require(std::find(trainers.begin(), trainers.end(), trainer) != trainers.end(),
          [&] { return "unknown trainer '" + trainer + "'"; });
  require(dataset.source == "generator" || dataset.source == "csv" || dataset.source == "cache",
          [&] { return "unknown dataset.source '" + dataset.source + "'"; });
  if (dataset.source == "generator") {
    const auto& g = dataset.generator;
    require(g == "quadrant" || g == "circle" || g == "octant" || g == "overlap",
            [&] { return "unknown dataset.generator '" + g + "'"; });
  } else {
    require(!dataset.path.empty(), [] { return std::string("dataset.path is required for csv/cache sources"); });
  }
  require(dataset.octant_roles == "two_allies_one_adversary" || dataset.octant_roles == "one_ally_two_adversaries",
          [&] { return "unknown dataset.octant_roles '" + dataset.octant_roles + "'"; });
  require(dataset.split_fraction > 0.0 && dataset.split_fraction < 1.0,
          [] { return std::string("dataset.split_fraction must lie in (0, 1)"); });
  require(game.alpha > 0.0 && game.alpha < 1.0, [] { return std::string("game.alpha must lie in (0, 1)"); });
  require(game.loss_form == "normalized" || game.loss_form == "printed",
          [&] { return "unknown game.loss_form '" + game.loss_form + "'"; });
  parse_discriminator_input(game.discriminator_update);
  require(game.batch_size > 0 && game.epochs > 0 && game.encoder_dim > 0,
          [] { return std::string("game.batch_size, game.epochs and game.encoder_dim must be positive"); });
  require(arch.dropout >= 0.0 && arch.dropout < 1.0, [] { return std::string("arch.dropout must lie in [0, 1)"); });
  require(arch.l2 >= 0.0, [] { return std::string("arch.l2 must be non-negative"); });
  require(fed.nodes >= 1 && fed.delta >= 1, [] { return std::string("fed.nodes and fed.delta must be positive"); });
  require(fed.phi > 0.0 && fed.phi <= 1.0, [] { return std::string("fed.phi must lie in (0, 1]"); });
  parse_shard_mode(fed.shard);
  parse_download_mask(fed.download_mask);
  parse_aggregation(fed.aggregation);
  require(fed.node_adversaries == "all" || fed.node_adversaries == "split",
          [&] { return "unknown fed.node_adversaries '" + fed.node_adversaries + "'"; });
  require(eval.probe_epochs > 0 && eval.probe_batch > 0 && eval.probe_lr > 0.0,
          [] { return std::string("eval probe epochs, batch and lr must be positive"); });
  require(baseline.epsilon > 0.0, [] { return std::string("baseline.epsilon must be positive"); });
  require(baseline.variance > 0.0 && baseline.variance <= 1.0,
          [] { return std::string("baseline.variance must lie in (0, 1]"); });
  require(tune.tolerance > 0.0 && tune.eps_lo > 0.0 && tune.eps_lo < tune.eps_hi,
          [] { return std::string("tune needs tolerance > 0 and 0 < eps_lo < eps_hi"); });
  if (!sweep.axis.empty()) {
    static const std::vector<std::string> axes{"alpha", "phi", "delta", "nodes", "encoder_dim", "ally_sigma",
                                               "adv_sigma"};
    require(std::find(axes.begin(), axes.end(), sweep.axis) != axes.end(),
            [&] { return "unknown sweep.axis '" + sweep.axis + "'"; });
    require(sweep.repetitions >= 1, [] { return std::string("sweep.repetitions must be positive"); });
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object of dotted keys");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) set_key(cfg, key, value);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str());
  if (const char* dir = std::getenv("PRL_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg, int indent) { return to_json_object(cfg).dump(indent); }

std::string config_hash(const ExperimentConfig& cfg) {
  // the output location does not change results
  ExperimentConfig c = cfg;
  c.output_dir.clear();
  return sha256_hex(to_json_object(c).dump());
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, b] : bindings()) keys.push_back(k);
  return keys;
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  // validated when the run starts, so overrides may pass through invalid states
  set_key(cfg, key, value);
}

}  // namespace prl
