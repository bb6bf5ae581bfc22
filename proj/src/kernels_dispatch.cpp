#include "gatex/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace gatex::kern {

namespace scalar {
double dot(const double*, const double*, std::size_t);
double reduce_add(const double*, std::size_t);
double reduce_sq(const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void gemm_acc(std::size_t, std::size_t, std::size_t, const double*, std::size_t,
              const double*, std::size_t, double*, std::size_t);
void syrk_upper(std::size_t, std::size_t, const double*, std::size_t,
                const double*, double*, std::size_t);
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
double reduce_add(const double*, std::size_t);
double reduce_sq(const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void gemm_acc(std::size_t, std::size_t, std::size_t, const double*, std::size_t,
              const double*, std::size_t, double*, std::size_t);
void syrk_upper(std::size_t, std::size_t, const double*, std::size_t,
                const double*, double*, std::size_t);
} // namespace avx2
#endif

namespace {

struct Vtable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*reduce_add)(const double*, std::size_t);
    double (*reduce_sq)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*gemm_acc)(std::size_t, std::size_t, std::size_t, const double*, std::size_t,
                     const double*, std::size_t, double*, std::size_t);
    void (*syrk_upper)(std::size_t, std::size_t, const double*, std::size_t,
                       const double*, double*, std::size_t);
};

constexpr Vtable kScalar = {scalar::dot, scalar::reduce_add, scalar::reduce_sq,
                            scalar::axpy, scalar::gemm_acc, scalar::syrk_upper};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Vtable kAvx2 = {avx2::dot, avx2::reduce_add, avx2::reduce_sq,
                          avx2::axpy, avx2::gemm_acc, avx2::syrk_upper};
#endif

struct State {
    Backend backend;
    const Vtable* vt;
};

State init_state() {
    Backend b = avx2_supported() ? Backend::avx2 : Backend::scalar;
    if (const char* env = std::getenv("GATEX_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) b = Backend::scalar;
        else if (std::strcmp(env, "avx2") == 0 && avx2_supported()) b = Backend::avx2;
    }
#if defined(__x86_64__) || defined(_M_X64)
    return {b, b == Backend::avx2 ? &kAvx2 : &kScalar};
#else
    return {Backend::scalar, &kScalar};
#endif
}

State& state() {
    static State s = init_state();
    return s;
}

} // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return state().backend; }

void set_backend(Backend b) {
#if defined(__x86_64__) || defined(_M_X64)
    if (b == Backend::avx2 && !avx2_supported()) b = Backend::scalar;
    state() = {b, b == Backend::avx2 ? &kAvx2 : &kScalar};
#else
    (void)b;
    state() = {Backend::scalar, &kScalar};
#endif
}

double dot(const double* a, const double* b, std::size_t n) { return state().vt->dot(a, b, n); }
double reduce_add(const double* x, std::size_t n) { return state().vt->reduce_add(x, n); }
double reduce_sq(const double* x, std::size_t n) { return state().vt->reduce_sq(x, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { state().vt->axpy(alpha, x, y, n); }
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    state().vt->gemm_acc(m, n, k, a, lda, b, ldb, c, ldc);
}
void syrk_upper(std::size_t n, std::size_t d, const double* x, std::size_t ldx,
                const double* w, double* g, std::size_t ldg) {
    state().vt->syrk_upper(n, d, x, ldx, w, g, ldg);
}

} // namespace gatex::kern
