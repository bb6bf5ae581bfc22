// AVX2/FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; it must only be entered after a CPUID check.

#include "gatex/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace gatex::kern::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

} // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double reduce_add(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double reduce_sq(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

namespace {

// 4x8 register-blocked block update: C[4][8] += A[4][k-panel] * B
inline void micro_4x8(std::size_t k,
                      const double* a, std::size_t lda,
                      const double* b, std::size_t ldb,
                      double* c, std::size_t ldc) {
    __m256d c00 = _mm256_loadu_pd(c + 0 * ldc), c01 = _mm256_loadu_pd(c + 0 * ldc + 4);
    __m256d c10 = _mm256_loadu_pd(c + 1 * ldc), c11 = _mm256_loadu_pd(c + 1 * ldc + 4);
    __m256d c20 = _mm256_loadu_pd(c + 2 * ldc), c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
    __m256d c30 = _mm256_loadu_pd(c + 3 * ldc), c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
    for (std::size_t p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
        const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
        __m256d a0 = _mm256_broadcast_sd(a + 0 * lda + p);
        c00 = _mm256_fmadd_pd(a0, b0, c00);
        c01 = _mm256_fmadd_pd(a0, b1, c01);
        a0 = _mm256_broadcast_sd(a + 1 * lda + p);
        c10 = _mm256_fmadd_pd(a0, b0, c10);
        c11 = _mm256_fmadd_pd(a0, b1, c11);
        a0 = _mm256_broadcast_sd(a + 2 * lda + p);
        c20 = _mm256_fmadd_pd(a0, b0, c20);
        c21 = _mm256_fmadd_pd(a0, b1, c21);
        a0 = _mm256_broadcast_sd(a + 3 * lda + p);
        c30 = _mm256_fmadd_pd(a0, b0, c30);
        c31 = _mm256_fmadd_pd(a0, b1, c31);
    }
    _mm256_storeu_pd(c + 0 * ldc, c00); _mm256_storeu_pd(c + 0 * ldc + 4, c01);
    _mm256_storeu_pd(c + 1 * ldc, c10); _mm256_storeu_pd(c + 1 * ldc + 4, c11);
    _mm256_storeu_pd(c + 2 * ldc, c20); _mm256_storeu_pd(c + 2 * ldc + 4, c21);
    _mm256_storeu_pd(c + 3 * ldc, c30); _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

inline void edge_rows(std::size_t m, std::size_t n, std::size_t k,
                      const double* a, std::size_t lda,
                      const double* b, std::size_t ldb,
                      double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d va = _mm256_set1_pd(a[i * lda + p]);
            const double* bp = b + p * ldb;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                _mm256_storeu_pd(ci + j,
                                 _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + j), _mm256_loadu_pd(ci + j)));
            }
            const double as = a[i * lda + p];
            for (; j < n; ++j) ci[j] += as * bp[j];
        }
    }
}

} // namespace

void gemm_acc(std::size_t m, std::size_t n, std::size_t k,
              const double* a, std::size_t lda,
              const double* b, std::size_t ldb,
              double* c, std::size_t ldc) {
    const std::size_t mb = m - m % 4;
    const std::size_t nb = n - n % 8;
    for (std::size_t i = 0; i < mb; i += 4)
        for (std::size_t j = 0; j < nb; j += 8)
            micro_4x8(k, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
    if (nb < n)
        edge_rows(mb, n - nb, k, a, lda, b + nb, ldb, c + nb, ldc);
    if (mb < m)
        edge_rows(m - mb, n, k, a + mb * lda, lda, b, ldb, c + mb * ldc, ldc);
}

void syrk_upper(std::size_t n, std::size_t d,
                const double* x, std::size_t ldx,
                const double* w, double* g, std::size_t ldg) {
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x + r * ldx;
        const double wr = w ? w[r] : 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double f = wr * xr[i];
            const __m256d vf = _mm256_set1_pd(f);
            double* gi = g + i * ldg;
            std::size_t j = i;
            for (; j + 4 <= d; j += 4) {
                _mm256_storeu_pd(gi + j,
                                 _mm256_fmadd_pd(vf, _mm256_loadu_pd(xr + j), _mm256_loadu_pd(gi + j)));
            }
            for (; j < d; ++j) gi[j] += f * xr[j];
        }
    }
}

} // namespace gatex::kern::avx2

#endif // x86_64
