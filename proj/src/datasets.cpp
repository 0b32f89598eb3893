#include "prl/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "prl/binary_io.hpp"
#include "prl/errors.hpp"
#include "prl/rng.hpp"

namespace prl {

bool LabeledDataset::has_label(const std::string& name) const {
  return std::any_of(labels.begin(), labels.end(), [&](const LabelSet& l) { return l.name == name; });
}

const LabelSet& LabeledDataset::label(const std::string& name) const {
  for (const auto& l : labels)
    if (l.name == name) return l;
  throw DataError("dataset has no objective named '" + name + "'");
}

std::vector<std::string> LabeledDataset::names_with_role(Role role) const {
  std::vector<std::string> out;
  for (const auto& l : labels)
    if (l.role && *l.role == role) out.push_back(l.name);
  return out;
}

void LabeledDataset::validate() const {
  if (!feature_names.empty() && feature_names.size() != dim()) throw DataError("feature name count does not match X");
  for (const auto& l : labels) {
    if (l.onehot.rows() != size()) throw DataError("objective '" + l.name + "' has wrong row count");
    if (l.class_names.size() != l.onehot.cols()) throw DataError("objective '" + l.name + "' class names mismatch");
    for (std::size_t r = 0; r < l.onehot.rows(); ++r) {
      double sum = 0.0;
      for (double v : l.onehot.row(r)) {
        if (v != 0.0 && v != 1.0) throw DataError("objective '" + l.name + "' is not one-hot");
        sum += v;
      }
      if (sum != 1.0) throw DataError("objective '" + l.name + "' is not one-hot");
    }
  }
}

LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> rows) {
  LabeledDataset out;
  out.X = select_rows(ds.X, rows);
  out.feature_names = ds.feature_names;
  out.normalization = ds.normalization;
  for (const auto& l : ds.labels) {
    LabelSet ls = l;
    ls.onehot = select_rows(l.onehot, rows);
    out.labels.push_back(std::move(ls));
  }
  return out;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.dim() != b.dim() || a.labels.size() != b.labels.size()) throw DataError("concat: incompatible datasets");
  LabeledDataset out = a;
  out.X = vstack(a.X, b.X);
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (a.labels[i].name != b.labels[i].name || a.labels[i].class_names != b.labels[i].class_names)
      throw DataError("concat: objective mismatch");
    out.labels[i].onehot = vstack(a.labels[i].onehot, b.labels[i].onehot);
  }
  return out;
}

std::vector<std::size_t> class_indices(const Matrix& onehot) { return argmax_rows(onehot); }

Matrix onehot_from_indices(std::span<const std::size_t> classes, std::size_t num_classes) {
  Matrix m(classes.size(), num_classes);
  for (std::size_t r = 0; r < classes.size(); ++r) {
    if (classes[r] >= num_classes) throw DataError("class index out of range");
    m(r, classes[r]) = 1.0;
  }
  return m;
}

std::vector<double> class_proportions(const Matrix& onehot) {
  std::vector<double> p(onehot.cols(), 0.0);
  if (onehot.rows() == 0) return p;
  for (std::size_t c : class_indices(onehot)) p[c] += 1.0;
  for (auto& v : p) v /= static_cast<double>(onehot.rows());
  return p;
}

namespace {

LabelSet make_labels(std::string name, std::vector<std::string> class_names, const std::vector<std::size_t>& idx,
                     std::optional<Role> role) {
  LabelSet ls;
  ls.name = std::move(name);
  ls.onehot = onehot_from_indices(idx, class_names.size());
  ls.class_names = std::move(class_names);
  ls.role = role;
  return ls;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace

LabeledDataset gen_quadrant(std::size_t n_per_cluster, double sigma, std::uint64_t seed) {
  require_positive(sigma, "quadrant sigma");
  if (n_per_cluster == 0) throw ConfigError("quadrant n_per_cluster must be positive");
  static constexpr double kMeans[4][2] = {{-0.5, -0.5}, {-0.5, 1.5}, {1.5, -1.5}, {1.5, 1.5}};
  RngStream rng(seed, streams::kData);
  const std::size_t n = 4 * n_per_cluster;
  LabeledDataset ds;
  ds.X = Matrix(n, 2);
  ds.feature_names = {"x", "y"};
  std::vector<std::size_t> color(n), shape(n);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < n_per_cluster; ++i) {
      const std::size_t r = c * n_per_cluster + i;
      ds.X(r, 0) = rng.normal(kMeans[c][0], sigma);
      ds.X(r, 1) = rng.normal(kMeans[c][1], sigma);
      color[r] = kMeans[c][0] > 0.5 ? 1 : 0;
      shape[r] = kMeans[c][1] > 0.5 ? 1 : 0;
    }
  }
  ds.labels.push_back(make_labels("color", {"left", "right"}, color, Role::ally));
  ds.labels.push_back(make_labels("shape", {"lower", "upper"}, shape, Role::adversary));
  return ds;
}

LabeledDataset gen_circle(std::size_t n_per_group, double inner_radius, double outer_radius, double sigma,
                          std::uint64_t seed) {
  require_positive(sigma, "circle sigma");
  require_positive(inner_radius, "circle inner radius");
  if (n_per_group == 0) throw ConfigError("circle n_per_group must be positive");
  if (!(outer_radius - inner_radius > 8.0 * sigma))
    throw ConfigError("circle radii must differ by more than 8 sigma so the rings stay separated");
  if (inner_radius <= 2.0 * sigma) throw ConfigError("circle inner radius must exceed 2 sigma");
  RngStream rng(seed, streams::kData);
  const std::size_t n = 4 * n_per_group;
  LabeledDataset ds;
  ds.X = Matrix(n, 2);
  ds.feature_names = {"x", "y"};
  std::vector<std::size_t> ring(n), half(n);
  std::size_t r = 0;
  for (std::size_t ring_id = 0; ring_id < 2; ++ring_id) {
    const double radius = ring_id == 0 ? inner_radius : outer_radius;
    for (std::size_t half_id = 0; half_id < 2; ++half_id) {
      // half 1 is the upper half-plane: angles in (0, π)
      const double base = half_id == 1 ? 0.0 : std::numbers::pi;
      for (std::size_t i = 0; i < n_per_group; ++i, ++r) {
        double theta = 0.0;
        do theta = base + rng.uniform() * std::numbers::pi;
        while (theta == base);
        double eps = 0.0;
        do eps = rng.normal(0.0, sigma);
        while (std::abs(eps) > 2.0 * sigma);
        ds.X(r, 0) = (radius + eps) * std::cos(theta);
        ds.X(r, 1) = (radius + eps) * std::sin(theta);
        ring[r] = ring_id;
        half[r] = half_id;
      }
    }
  }
  ds.labels.push_back(make_labels("ring", {"inner", "outer"}, ring, Role::ally));
  ds.labels.push_back(make_labels("half", {"lower", "upper"}, half, Role::adversary));
  return ds;
}

LabeledDataset gen_octant(std::size_t n_per_cluster, double sigma, std::uint64_t seed, OctantRoles roles,
                          double center) {
  require_positive(sigma, "octant sigma");
  require_positive(center, "octant center");
  if (n_per_cluster == 0) throw ConfigError("octant n_per_cluster must be positive");
  RngStream rng(seed, streams::kData);
  const std::size_t n = 8 * n_per_cluster;
  LabeledDataset ds;
  ds.X = Matrix(n, 3);
  ds.feature_names = {"x", "y", "z"};
  std::vector<std::vector<std::size_t>> bits(3, std::vector<std::size_t>(n));
  for (std::size_t b = 0; b < 8; ++b) {
    for (std::size_t i = 0; i < n_per_cluster; ++i) {
      const std::size_t r = b * n_per_cluster + i;
      for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t bit = (b >> a) & 1u;
        ds.X(r, a) = rng.normal(bit ? center : -center, sigma);
        bits[a][r] = bit;
      }
    }
  }
  const bool two_allies = roles == OctantRoles::two_allies_one_adversary;
  ds.labels.push_back(make_labels("axis_x", {"neg", "pos"}, bits[0], Role::ally));
  ds.labels.push_back(make_labels("axis_y", {"neg", "pos"}, bits[1], two_allies ? Role::ally : Role::adversary));
  ds.labels.push_back(make_labels("axis_z", {"neg", "pos"}, bits[2], Role::adversary));
  return ds;
}

LabeledDataset gen_overlap_grid(std::size_t n_per_class, double ally_sigma, double adv_sigma, std::uint64_t seed) {
  require_positive(ally_sigma, "overlap ally sigma");
  require_positive(adv_sigma, "overlap adversary sigma");
  if (n_per_class == 0) throw ConfigError("overlap n_per_class must be positive");
  RngStream rng(seed, streams::kData);
  const std::size_t n = 4 * n_per_class;
  LabeledDataset ds;
  ds.X = Matrix(n, 2);
  ds.feature_names = {"x", "y"};
  std::vector<std::size_t> color(n), shape(n);
  for (std::size_t c = 0; c < 4; ++c) {
    const std::size_t gx = c >> 1, gy = c & 1u;
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const std::size_t r = c * n_per_class + i;
      ds.X(r, 0) = rng.normal(1.0 + static_cast<double>(gx), ally_sigma);
      ds.X(r, 1) = rng.normal(1.0 + static_cast<double>(gy), adv_sigma);
      color[r] = gx;
      shape[r] = gy;
    }
  }
  ds.labels.push_back(make_labels("color", {"x1", "x2"}, color, Role::ally));
  ds.labels.push_back(make_labels("shape", {"y1", "y2"}, shape, Role::adversary));
  return ds;
}

NormalizationStats fit_normalization(const Matrix& X) {
  if (X.rows() == 0) throw DataError("cannot fit normalization on an empty matrix");
  NormalizationStats s;
  s.mean.assign(X.cols(), 0.0);
  s.stddev.assign(X.cols(), 0.0);
  const double n = static_cast<double>(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c) s.mean[c] += X(r, c);
  for (auto& m : s.mean) m /= n;
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c) {
      const double d = X(r, c) - s.mean[c];
      s.stddev[c] += d * d;
    }
  for (auto& v : s.stddev) {
    v = std::sqrt(v / n);
    if (v < 1e-12) v = 1.0;  // constant column: centre only
  }
  return s;
}

Matrix normalize(const Matrix& X, const NormalizationStats& stats) {
  if (stats.mean.size() != X.cols()) throw ShapeError("normalize: stats width " + std::to_string(stats.mean.size()) +
                                                      " vs " + X.shape_string());
  Matrix out(X.rows(), X.cols());
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c) out(r, c) = (X(r, c) - stats.mean[c]) / stats.stddev[c];
  return out;
}

Matrix denormalize(const Matrix& X, const NormalizationStats& stats) {
  if (stats.mean.size() != X.cols()) throw ShapeError("denormalize: stats width mismatch");
  Matrix out(X.rows(), X.cols());
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c) out(r, c) = X(r, c) * stats.stddev[c] + stats.mean[c];
  return out;
}

namespace {

const LabelSet& default_objective(const LabeledDataset& ds, const std::string& requested) {
  if (!requested.empty()) return ds.label(requested);
  if (ds.labels.empty()) throw DataError("dataset has no objectives");
  auto allies = ds.names_with_role(Role::ally);
  return allies.empty() ? ds.labels.front() : ds.label(allies.front());
}

}  // namespace

Split split(const LabeledDataset& ds, double train_fraction, std::uint64_t seed, bool normalize_features,
            const std::string& stratify_by) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  const auto classes = class_indices(default_objective(ds, stratify_by).onehot);
  const std::size_t num_classes = default_objective(ds, stratify_by).num_classes();
  RngStream rng(seed, streams::kData);
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t r = 0; r < classes.size(); ++r)
      if (classes[r] == c) members.push_back(r);
    const auto perm = rng.permutation(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < members.size(); ++i) (i < n_train ? train_rows : test_rows).push_back(members[perm[i]]);
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  if (train_rows.empty() || test_rows.empty()) throw DataError("split leaves an empty partition");
  Split s{subset(ds, train_rows), subset(ds, test_rows)};
  if (normalize_features) {
    auto stats = fit_normalization(s.train.X);
    s.train.X = normalize(s.train.X, stats);
    s.test.X = normalize(s.test.X, stats);
    s.train.normalization = stats;
    s.test.normalization = stats;
  }
  return s;
}

std::string_view to_string(ShardMode m) {
  switch (m) {
    case ShardMode::iid: return "iid";
    case ShardMode::label_skew: return "label_skew";
    case ShardMode::variance_ramp: return "variance_ramp";
  }
  return "?";
}

ShardMode parse_shard_mode(std::string_view s) {
  if (s == "iid") return ShardMode::iid;
  if (s == "label_skew") return ShardMode::label_skew;
  if (s == "variance_ramp") return ShardMode::variance_ramp;
  throw ConfigError("unknown shard mode '" + std::string(s) + "'");
}

std::vector<LabeledDataset> shard(const LabeledDataset& ds, const ShardPlan& plan, std::uint64_t seed) {
  const std::size_t k = plan.nodes;
  if (k == 0) throw ConfigError("shard: node count must be positive");
  std::vector<LabeledDataset> out;
  if (plan.mode == ShardMode::variance_ramp) {
    require_positive(plan.ramp_variance_step, "variance ramp step");
    for (std::size_t node = 1; node <= k; ++node) {
      const double sigma = std::sqrt(plan.ramp_variance_step * static_cast<double>(node));
      const std::uint64_t node_seed = seed ^ (0x9E3779B97F4A7C15ull * node);
      out.push_back(gen_overlap_grid(plan.ramp_n_per_class, sigma, sigma, node_seed));
    }
    return out;
  }
  if (ds.size() < k) throw DataError("shard: fewer rows than nodes");
  RngStream rng(seed, streams::kShard);
  std::vector<std::vector<std::size_t>> rows(k);
  if (plan.mode == ShardMode::iid) {
    const auto perm = rng.permutation(ds.size());
    for (std::size_t i = 0; i < perm.size(); ++i) rows[i % k].push_back(perm[i]);
  } else {
    require_positive(plan.dirichlet_concentration, "dirichlet concentration");
    const auto& obj = default_objective(ds, plan.skew_objective);
    const auto classes = class_indices(obj.onehot);
    for (std::size_t c = 0; c < obj.num_classes(); ++c) {
      std::vector<std::size_t> members;
      for (std::size_t r = 0; r < classes.size(); ++r)
        if (classes[r] == c) members.push_back(r);
      const auto perm = rng.permutation(members.size());
      const auto p = rng.dirichlet(k, plan.dirichlet_concentration);
      double cum = 0.0;
      std::size_t start = 0;
      for (std::size_t node = 0; node < k; ++node) {
        cum += p[node];
        const std::size_t end = node + 1 == k
                                    ? members.size()
                                    : std::min(members.size(), static_cast<std::size_t>(std::llround(
                                                                   cum * static_cast<double>(members.size()))));
        for (std::size_t i = start; i < std::max(start, end); ++i) rows[node].push_back(members[perm[i]]);
        start = std::max(start, end);
      }
    }
    // every node needs at least one row; borrow from the largest shard
    for (auto& r : rows) {
      if (!r.empty()) continue;
      auto& big = *std::max_element(rows.begin(), rows.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
      r.push_back(big.back());
      big.pop_back();
    }
  }
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    out.push_back(subset(ds, r));
  }
  return out;
}

void save_dataset(std::ostream& os, const LabeledDataset& ds) {
  io::write_header(os, "PRLD");
  io::write_u64(os, ds.size());
  io::write_u64(os, ds.dim());
  io::write_u32(os, static_cast<std::uint32_t>(ds.feature_names.size()));
  for (const auto& f : ds.feature_names) io::write_string(os, f);
  for (double v : ds.X.data()) io::write_f64(os, v);
  io::write_u32(os, static_cast<std::uint32_t>(ds.labels.size()));
  for (const auto& l : ds.labels) {
    io::write_string(os, l.name);
    io::write_u8(os, l.role ? (*l.role == Role::ally ? 1 : 2) : 0);
    io::write_u32(os, static_cast<std::uint32_t>(l.class_names.size()));
    for (const auto& c : l.class_names) io::write_string(os, c);
    for (std::size_t c : class_indices(l.onehot)) io::write_u32(os, static_cast<std::uint32_t>(c));
  }
  io::write_u8(os, ds.normalization ? 1 : 0);
  if (ds.normalization) {
    for (double v : ds.normalization->mean) io::write_f64(os, v);
    for (double v : ds.normalization->stddev) io::write_f64(os, v);
  }
  if (!os) throw DataError("failed writing dataset");
}

LabeledDataset load_dataset(std::istream& is) {
  io::read_header(is, "PRLD");
  LabeledDataset ds;
  const auto n = io::read_u64(is);
  const auto d = io::read_u64(is);
  const auto nf = io::read_u32(is);
  for (std::uint32_t i = 0; i < nf; ++i) ds.feature_names.push_back(io::read_string(is));
  ds.X = Matrix(n, d);
  for (auto& v : ds.X.data()) v = io::read_f64(is);
  const auto nl = io::read_u32(is);
  for (std::uint32_t i = 0; i < nl; ++i) {
    LabelSet l;
    l.name = io::read_string(is);
    const auto role = io::read_u8(is);
    if (role > 2) throw DataError("dataset cache: bad role tag");
    if (role) l.role = role == 1 ? Role::ally : Role::adversary;
    const auto nc = io::read_u32(is);
    for (std::uint32_t c = 0; c < nc; ++c) l.class_names.push_back(io::read_string(is));
    std::vector<std::size_t> idx(n);
    for (auto& c : idx) c = io::read_u32(is);
    l.onehot = onehot_from_indices(idx, nc);
    ds.labels.push_back(std::move(l));
  }
  if (io::read_u8(is)) {
    NormalizationStats s;
    s.mean.resize(d);
    s.stddev.resize(d);
    for (auto& v : s.mean) v = io::read_f64(is);
    for (auto& v : s.stddev) v = io::read_f64(is);
    ds.normalization = std::move(s);
  }
  ds.validate();
  return ds;
}

void save_dataset(const std::string& path, const LabeledDataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  save_dataset(os, ds);
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "'");
  return load_dataset(is);
}

}  // namespace prl
