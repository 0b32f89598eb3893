#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace prl {

/// Dense row-major matrix of doubles. Every batch, activation and parameter
/// block in the library is one of these.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::string shape_string() const;

  /// Value equality (IEEE comparison: -0.0 == 0.0, NaN != NaN).
  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// True when shapes match and every element has the identical bit pattern.
bool bitwise_equal(const Matrix& a, const Matrix& b);

inline constexpr double kLogFloor = 1e-12;

enum class ElementwiseOp { add, sub, mul, scale, exp, log_clamped };

/// Binary elementwise op (add, sub, mul). Throws ShapeError on shape mismatch.
Matrix elementwise(ElementwiseOp op, const Matrix& a, const Matrix& b);
/// Unary elementwise op (scale by `scalar`, exp, log_clamped).
Matrix elementwise(ElementwiseOp op, const Matrix& a, double scalar = 1.0);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix exp(const Matrix& a);
/// log(max(x, 1e-12)) elementwise.
Matrix log_clamped(const Matrix& a);

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Adds a 1×cols row to every row of `a` in place.
void add_row_inplace(Matrix& a, const Matrix& row);
/// a += s·b in place.
void axpy_inplace(Matrix& a, double s, const Matrix& b);
Matrix column_sums(const Matrix& a);
Matrix select_rows(const Matrix& a, std::span<const std::size_t> indices);
Matrix vstack(const Matrix& top, const Matrix& bottom);

std::vector<std::size_t> argmax_rows(const Matrix& a);
bool all_finite(const Matrix& a);
double max_abs(const Matrix& a);

}  // namespace prl
