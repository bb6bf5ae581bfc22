#pragma once

#include <cstddef>

// Dense inner-loop kernels. Every operation has a scalar reference
// implementation and an AVX2/FMA variant; the active backend is chosen at
// startup from CPUID and can be overridden with set_backend() or the
// GATEX_KERNELS environment variable ("scalar" / "avx2"). The two backends
// agree up to floating-point reassociation and are equivalence-tested.
namespace gatex::kern {

enum class Backend { scalar, avx2 };

Backend active_backend();
void set_backend(Backend b);
bool avx2_supported();

double dot(const double* a, const double* b, std::size_t n);
double reduce_add(const double* x, std::size_t n);
double reduce_sq(const double* x, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// C (m x n, row-major, leading dim ldc) += A (m x k, lda) * B (k x n, ldb)
void gemm_acc(std::size_t m, std::size_t n, std::size_t k,
              const double* a, std::size_t lda,
              const double* b, std::size_t ldb,
              double* c, std::size_t ldc);

// G (d x d, row-major, upper triangle) += sum_i w_i * x_i x_i^T over the n
// rows of X; w may be null (unit weights). Lower triangle is left untouched.
void syrk_upper(std::size_t n, std::size_t d,
                const double* x, std::size_t ldx,
                const double* w, double* g, std::size_t ldg);

} // namespace gatex::kern
