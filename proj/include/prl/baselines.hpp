#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "prl/neural.hpp"
#include "prl/rng.hpp"
#include "prl/tensor.hpp"

namespace prl {

/// Eigenpairs of a symmetric matrix, eigenvalues descending; column j of
/// `vectors` belongs to values[j] and has its largest-magnitude entry positive.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};

/// Householder tridiagonalization followed by implicit symmetric QR steps
/// with Wilkinson shifts. Throws ShapeError for non-square input.
SymmetricEigen symmetric_eigen(const Matrix& a);

/// Sample covariance (divisor N − 1) of the rows of X around `mean`.
Matrix covariance(const Matrix& X, const std::vector<double>& mean);

inline constexpr double kEigenFloor = 1e-12;

struct PcaModel {
  std::vector<double> mean;
  Matrix components;                // d×r, orthonormal columns
  std::vector<double> eigenvalues;  // all d, descending, floored at zero
  double variance_target = 0.99;

  std::size_t rank() const { return components.cols(); }
  /// Cumulative variance fraction carried by the retained components.
  double retained_variance() const;
};

/// r is the smallest count whose cumulative eigenvalue fraction reaches the
/// target. Eigenvalues below kEigenFloor count as zero.
PcaModel pca_fit(const Matrix& X, double variance_target = 0.99);
Matrix pca_encode(const PcaModel& model, const Matrix& X);
Matrix pca_reconstruct(const PcaModel& model, const Matrix& Z);

struct AutoencoderConfig {
  std::size_t latent_dim = 2;
  std::vector<std::size_t> hidden{16};
  /// No hidden layers and identity activations throughout.
  bool linear = false;
  std::size_t epochs = 100;
  double lr = 1e-2;
  std::size_t batch_size = 64;
  double l2 = 0.0;
};

struct AutoencoderResult {
  Network encoder;
  Network decoder;
  std::vector<double> mse_history;  // full-data reconstruction MSE after each epoch
};

/// Minimizes mean squared reconstruction error with minibatch SGD. The
/// latent layer is linear so the encoder can match PCA's output dimension.
AutoencoderResult autoencoder_train(const Matrix& X, const AutoencoderConfig& cfg, std::uint64_t seed);
double reconstruction_mse(const Network& encoder, const Network& decoder, const Matrix& X);

struct LaplaceMech {
  double epsilon = 1.0;
  std::vector<double> sensitivity;  // per-column range on the fitting data

  /// Per-column noise scale b = Δ/ε.
  std::vector<double> scale() const;
};

LaplaceMech laplace_fit(const Matrix& X_train, double epsilon);
/// Adds independent Laplace(0, b_col) noise to every entry.
Matrix laplace_encode(const LaplaceMech& mech, const Matrix& X, RngStream& rng);

void save_pca(std::ostream& os, const PcaModel& m);
PcaModel load_pca(std::istream& is);
void save_laplace(std::ostream& os, const LaplaceMech& m);
LaplaceMech load_laplace(std::istream& is);

}  // namespace prl
