#include "prl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prl/binary_io.hpp"
#include "prl/errors.hpp"

namespace prl {

namespace {

// Householder reduction of symmetric a to tridiagonal form; q accumulates
// the reflections so that a = q·T·qᵀ.
void tridiagonalize(Matrix& t, Matrix& q) {
  const std::size_t n = t.rows();
  std::vector<double> v(n), p(n), w(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;  // length of the reflected part
    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) norm = std::hypot(norm, t(k + 1 + i, k));
    if (norm == 0.0) continue;
    const double alpha = t(k + 1, k) > 0.0 ? -norm : norm;
    for (std::size_t i = 0; i < m; ++i) v[i] = t(k + 1 + i, k);
    v[0] -= alpha;
    double vv = 0.0;
    for (std::size_t i = 0; i < m; ++i) vv += v[i] * v[i];
    if (vv == 0.0) continue;
    const double beta = 2.0 / vv;

    double pv = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += t(k + 1 + i, k + 1 + j) * v[j];
      p[i] = beta * s;
      pv += p[i] * v[i];
    }
    const double kk = 0.5 * beta * pv;
    for (std::size_t i = 0; i < m; ++i) w[i] = p[i] - kk * v[i];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) t(k + 1 + i, k + 1 + j) -= v[i] * w[j] + w[i] * v[j];

    t(k + 1, k) = alpha;
    t(k, k + 1) = alpha;
    for (std::size_t i = 1; i < m; ++i) {
      t(k + 1 + i, k) = 0.0;
      t(k, k + 1 + i) = 0.0;
    }
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += q(r, k + 1 + i) * v[i];
      s *= beta;
      for (std::size_t i = 0; i < m; ++i) q(r, k + 1 + i) -= s * v[i];
    }
  }
}

void givens(double x, double z, double& c, double& s) {
  if (z == 0.0) {
    c = 1.0;
    s = 0.0;
  } else if (std::abs(z) > std::abs(x)) {
    const double tau = -x / z;
    s = 1.0 / std::sqrt(1.0 + tau * tau);
    c = s * tau;
  } else {
    const double tau = -z / x;
    c = 1.0 / std::sqrt(1.0 + tau * tau);
    s = c * tau;
  }
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("symmetric_eigen: matrix is " + a.shape_string());
  if (n == 0) return {};
  Matrix t = a;
  // symmetrize against rounding in the caller
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) t(i, j) = t(j, i) = 0.5 * (a(i, j) + a(j, i));
  Matrix q = Matrix::identity(n);
  tridiagonalize(t, q);

  std::vector<double> d(n), e(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i] = t(i, i);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = t(i + 1, i);

  const double eps = std::numeric_limits<double>::epsilon();
  std::size_t iterations = 0;
  const std::size_t max_iterations = 60 * n + 60;
  for (std::size_t hi = n - 1; hi > 0;) {
    if (std::abs(e[hi - 1]) <= eps * (std::abs(d[hi - 1]) + std::abs(d[hi]))) {
      e[hi - 1] = 0.0;
      --hi;
      continue;
    }
    if (++iterations > max_iterations) throw std::runtime_error("symmetric_eigen: QR iteration did not converge");
    std::size_t lo = hi - 1;
    while (lo > 0 && std::abs(e[lo - 1]) > eps * (std::abs(d[lo - 1]) + std::abs(d[lo]))) --lo;

    // Wilkinson shift from the trailing 2×2 block
    const double dd = 0.5 * (d[hi - 1] - d[hi]);
    const double eh = e[hi - 1];
    const double mu = d[hi] - eh * eh / (dd + std::copysign(std::hypot(dd, eh), dd == 0.0 ? 1.0 : dd));

    double x = d[lo] - mu;
    double z = e[lo];
    for (std::size_t k = lo; k < hi; ++k) {
      double c = 1.0, s = 0.0;
      givens(x, z, c, s);
      if (k > lo) e[k - 1] = c * x - s * z;
      const double ak = d[k], bk = e[k], ak1 = d[k + 1];
      d[k] = c * c * ak - 2.0 * c * s * bk + s * s * ak1;
      d[k + 1] = s * s * ak + 2.0 * c * s * bk + c * c * ak1;
      e[k] = c * s * (ak - ak1) + (c * c - s * s) * bk;
      if (k + 1 < hi) {
        z = -s * e[k + 1];
        e[k + 1] *= c;
      }
      x = e[k];
      for (std::size_t r = 0; r < n; ++r) {
        const double qk = q(r, k), qk1 = q(r, k + 1);
        q(r, k) = c * qk - s * qk1;
        q(r, k + 1) = s * qk + c * qk1;
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] > d[j]; });
  SymmetricEigen out;
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values.push_back(d[src]);
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(q(r, src)) > std::abs(q(arg, src))) arg = r;
    const double sign = q(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, j) = sign * q(r, src);
  }
  return out;
}

Matrix covariance(const Matrix& X, const std::vector<double>& mean) {
  if (X.rows() < 2) throw DataError("covariance needs at least two rows");
  if (mean.size() != X.cols()) throw ShapeError("covariance: mean length mismatch");
  Matrix c = X;
  for (std::size_t r = 0; r < c.rows(); ++r)
    for (std::size_t j = 0; j < c.cols(); ++j) c(r, j) -= mean[j];
  return scale(matmul_tn(c, c), 1.0 / static_cast<double>(X.rows() - 1));
}

double PcaModel::retained_variance() const {
  const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  if (total <= 0.0) return 1.0;
  return std::accumulate(eigenvalues.begin(), eigenvalues.begin() + static_cast<std::ptrdiff_t>(rank()), 0.0) / total;
}

PcaModel pca_fit(const Matrix& X, double variance_target) {
  if (!(variance_target > 0.0 && variance_target <= 1.0)) throw ConfigError("PCA variance target must lie in (0, 1]");
  if (X.rows() < 2 || X.cols() == 0) throw DataError("PCA needs at least two rows and one column");
  PcaModel m;
  m.variance_target = variance_target;
  m.mean.assign(X.cols(), 0.0);
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t j = 0; j < X.cols(); ++j) m.mean[j] += X(r, j);
  for (auto& v : m.mean) v /= static_cast<double>(X.rows());

  auto eig = symmetric_eigen(covariance(X, m.mean));
  for (auto& v : eig.values) v = v < kEigenFloor ? 0.0 : v;
  m.eigenvalues = eig.values;
  const double total = std::accumulate(eig.values.begin(), eig.values.end(), 0.0);
  std::size_t r = 1;
  if (total > 0.0) {
    double cum = 0.0;
    for (r = 0; r < eig.values.size();) {
      cum += eig.values[r++];
      if (cum / total >= variance_target - 1e-12) break;
    }
  }
  m.components = Matrix(X.cols(), r);
  for (std::size_t i = 0; i < X.cols(); ++i)
    for (std::size_t j = 0; j < r; ++j) m.components(i, j) = eig.vectors(i, j);
  return m;
}

Matrix pca_encode(const PcaModel& model, const Matrix& X) {
  if (X.cols() != model.mean.size()) throw ShapeError("pca_encode: input " + X.shape_string());
  Matrix c = X;
  for (std::size_t r = 0; r < c.rows(); ++r)
    for (std::size_t j = 0; j < c.cols(); ++j) c(r, j) -= model.mean[j];
  return matmul(c, model.components);
}

Matrix pca_reconstruct(const PcaModel& model, const Matrix& Z) {
  if (Z.cols() != model.rank()) throw ShapeError("pca_reconstruct: input " + Z.shape_string());
  Matrix x = matmul_nt(Z, model.components);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) x(r, j) += model.mean[j];
  return x;
}

double reconstruction_mse(const Network& encoder, const Network& decoder, const Matrix& X) {
  const Matrix out = predict(decoder, predict(encoder, X));
  double s = 0.0;
  auto a = out.data();
  auto b = X.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

AutoencoderResult autoencoder_train(const Matrix& X, const AutoencoderConfig& cfg, std::uint64_t seed) {
  if (cfg.latent_dim == 0) throw ConfigError("autoencoder latent dimension must be positive");
  if (cfg.batch_size == 0 || cfg.epochs == 0) throw ConfigError("autoencoder batch size and epochs must be positive");
  if (!(cfg.lr > 0.0)) throw ConfigError("autoencoder learning rate must be positive");
  if (X.rows() == 0) throw DataError("autoencoder needs data");
  const std::size_t d = X.cols();
  const std::vector<std::size_t> none;
  std::vector<std::size_t> rev(cfg.hidden.rbegin(), cfg.hidden.rend());
  const auto hidden_act = cfg.linear ? Activation::linear : Activation::relu;
  RngStream rng(seed, streams::kBaseline);
  AutoencoderResult res;
  res.encoder = init_network(
      mlp_layers(d, cfg.linear ? none : cfg.hidden, cfg.latent_dim, hidden_act, Activation::linear, 0.0), cfg.l2, rng);
  res.decoder =
      init_network(mlp_layers(cfg.latent_dim, cfg.linear ? none : rev, d, hidden_act, Activation::linear, 0.0), cfg.l2,
                   rng);
  const std::size_t n = X.rows();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const Matrix xb = select_rows(X, std::span<const std::size_t>(order.data() + start, end - start));
      auto fe = forward(res.encoder, xb, Mode::train);
      auto fd = forward(res.decoder, fe.output, Mode::train);
      Matrix g = sub(fd.output, xb);
      g = scale(g, 2.0 / static_cast<double>(g.size()));
      auto gd = backward(res.decoder, fd.tape, g);
      auto ge = backward(res.encoder, fe.tape, gd.input);
      sgd_step(res.decoder, gd, cfg.lr);
      sgd_step(res.encoder, ge, cfg.lr);
    }
    const double mse = reconstruction_mse(res.encoder, res.decoder, X);
    if (!std::isfinite(mse) || mse > 1e6) throw DivergenceError("autoencoder", mse, "autoencoder training diverged");
    res.mse_history.push_back(mse);
  }
  return res;
}

std::vector<double> LaplaceMech::scale() const {
  std::vector<double> b;
  for (double s : sensitivity) b.push_back(s / epsilon);
  return b;
}

LaplaceMech laplace_fit(const Matrix& X_train, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("Laplace epsilon must be positive");
  if (X_train.rows() == 0) throw DataError("Laplace sensitivity needs data");
  LaplaceMech m;
  m.epsilon = epsilon;
  for (std::size_t j = 0; j < X_train.cols(); ++j) {
    double lo = X_train(0, j), hi = X_train(0, j);
    for (std::size_t r = 1; r < X_train.rows(); ++r) {
      lo = std::min(lo, X_train(r, j));
      hi = std::max(hi, X_train(r, j));
    }
    m.sensitivity.push_back(hi - lo);
  }
  return m;
}

Matrix laplace_encode(const LaplaceMech& mech, const Matrix& X, RngStream& rng) {
  if (X.cols() != mech.sensitivity.size()) throw ShapeError("laplace_encode: input " + X.shape_string());
  if (!(mech.epsilon > 0.0)) throw ConfigError("Laplace epsilon must be positive");
  const auto b = mech.scale();
  Matrix out = X;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t j = 0; j < out.cols(); ++j) out(r, j) += rng.laplace(b[j]);
  return out;
}

void save_pca(std::ostream& os, const PcaModel& m) {
  io::write_header(os, "PRLP");
  io::write_f64(os, m.variance_target);
  io::write_u32(os, static_cast<std::uint32_t>(m.mean.size()));
  io::write_u32(os, static_cast<std::uint32_t>(m.rank()));
  for (double v : m.mean) io::write_f64(os, v);
  for (double v : m.eigenvalues) io::write_f64(os, v);
  for (double v : m.components.data()) io::write_f64(os, v);
}

PcaModel load_pca(std::istream& is) {
  io::read_header(is, "PRLP");
  PcaModel m;
  m.variance_target = io::read_f64(is);
  const auto d = io::read_u32(is);
  const auto r = io::read_u32(is);
  if (r == 0 || r > d) throw DataError("PCA checkpoint: bad rank");
  m.mean.resize(d);
  m.eigenvalues.resize(d);
  for (auto& v : m.mean) v = io::read_f64(is);
  for (auto& v : m.eigenvalues) v = io::read_f64(is);
  m.components = Matrix(d, r);
  for (auto& v : m.components.data()) v = io::read_f64(is);
  return m;
}

void save_laplace(std::ostream& os, const LaplaceMech& m) {
  io::write_header(os, "PRLL");
  io::write_f64(os, m.epsilon);
  io::write_u32(os, static_cast<std::uint32_t>(m.sensitivity.size()));
  for (double v : m.sensitivity) io::write_f64(os, v);
}

LaplaceMech load_laplace(std::istream& is) {
  io::read_header(is, "PRLL");
  LaplaceMech m;
  m.epsilon = io::read_f64(is);
  m.sensitivity.resize(io::read_u32(is));
  for (auto& v : m.sensitivity) v = io::read_f64(is);
  return m;
}

}  // namespace prl
