#include "prl/kernels.hpp"

#include <algorithm>
#include <cstdint>

#ifdef PRL_HAVE_OPENMP
#include <omp.h>
#endif

namespace prl::kernels {
namespace {

// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

inline void gemm_row(const double* a_row, const double* b, double* c_row, std::size_t k, std::size_t n) {
  std::fill(c_row, c_row + n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double s = a_row[p];
    const double* b_row = b + p * n;
    for (std::size_t j = 0; j < n; ++j) c_row[j] += s * b_row[j];
  }
}

inline void gemm_tn_row(const double* a, const double* b, double* c_row, std::size_t i, std::size_t m,
                        std::size_t k, std::size_t n) {
  std::fill(c_row, c_row + n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double s = a[p * m + i];
    const double* b_row = b + p * n;
    for (std::size_t j = 0; j < n; ++j) c_row[j] += s * b_row[j];
  }
}

inline void gemm_nt_row(const double* a_row, const double* b, double* c_row, std::size_t k, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* b_row = b + j * k;
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
    c_row[j] = acc;
  }
}

}  // namespace

void gemm_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) gemm_row(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
  [[maybe_unused]] const bool big = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    gemm_row(a.data() + r * k, b.data(), c.data() + r * n, k, n);
  }
}

void gemm_tn_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                    std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) gemm_tn_row(a.data(), b.data(), c.data() + i * n, i, m, k, n);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
  [[maybe_unused]] const bool big = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    gemm_tn_row(a.data(), b.data(), c.data() + r * n, r, m, k, n);
  }
}

void gemm_nt_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                    std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) gemm_nt_row(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
  [[maybe_unused]] const bool big = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    gemm_nt_row(a.data() + r * k, b.data(), c.data() + r * n, k, n);
  }
}

void weighted_sum_serial(std::span<const std::span<const double>> vectors,
                         std::span<const double> weights, std::span<double> out) {
  for (std::size_t q = 0; q < out.size(); ++q) {
    double acc = weights[0] * vectors[0][q];
    for (std::size_t k = 1; k < vectors.size(); ++k) acc += weights[k] * vectors[k][q];
    out[q] = acc;
  }
}

void weighted_sum(std::span<const std::span<const double>> vectors,
                  std::span<const double> weights, std::span<double> out) {
  const auto len = static_cast<std::int64_t>(out.size());
  [[maybe_unused]] const bool big = out.size() * vectors.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < len; ++i) {
    const auto q = static_cast<std::size_t>(i);
    double acc = weights[0] * vectors[0][q];
    for (std::size_t k = 1; k < vectors.size(); ++k) acc += weights[k] * vectors[k][q];
    out[q] = acc;
  }
}

int max_threads() {
#ifdef PRL_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace prl::kernels
