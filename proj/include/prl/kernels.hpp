#pragma once

// Data-parallel inner loops. Every kernel has a `_serial` reference that the
// tests and the benchmark compare against. The parallel versions split work
// by output row, so each output element is accumulated in exactly the same
// order as the reference and results are bitwise identical.

#include <cstddef>
#include <span>

namespace prl::kernels {

// c (m×n) = a (m×k) · b (k×n)
void gemm_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t k, std::size_t n);
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n);

// c (m×n) = aᵀ · b, with a stored k×m and b stored k×n
void gemm_tn_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                    std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

// c (m×n) = a · bᵀ, with a stored m×k and b stored n×k
void gemm_nt_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                    std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

// out[q] = Σ_k weights[k] · vectors[k][q], accumulated in node order. The
// first term initializes the accumulator so a single unit-weight vector is
// reproduced bit for bit (including signed zeros).
void weighted_sum_serial(std::span<const std::span<const double>> vectors,
                         std::span<const double> weights, std::span<double> out);
void weighted_sum(std::span<const std::span<const double>> vectors,
                  std::span<const double> weights, std::span<double> out);

/// Number of threads the parallel kernels may use.
int max_threads();

}  // namespace prl::kernels
