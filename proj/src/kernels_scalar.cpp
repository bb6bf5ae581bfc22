#include "gatex/kernels.hpp"

namespace gatex::kern::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double reduce_add(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double reduce_sq(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_acc(std::size_t m, std::size_t n, std::size_t k,
              const double* a, std::size_t lda,
              const double* b, std::size_t ldb,
              double* c, std::size_t ldc) {
    // i-k-j order keeps the inner loop contiguous over B and C
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * lda + p];
            const double* bp = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void syrk_upper(std::size_t n, std::size_t d,
                const double* x, std::size_t ldx,
                const double* w, double* g, std::size_t ldg) {
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x + r * ldx;
        const double wr = w ? w[r] : 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double f = wr * xr[i];
            double* gi = g + i * ldg;
            for (std::size_t j = i; j < d; ++j) gi[j] += f * xr[j];
        }
    }
}

} // namespace gatex::kern::scalar
