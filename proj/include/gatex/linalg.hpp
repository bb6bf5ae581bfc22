#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "gatex/errors.hpp"
#include "gatex/kernels.hpp"

namespace gatex {

// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j)
            t(j, i) = a(i, j);
    return t;
}

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols, 0.0);
    kern::gemm_acc(a.rows, b.cols, a.cols, a.data.data(), a.cols,
                   b.data.data(), b.cols, c.data.data(), c.cols);
    return c;
}

inline Matrix take_rows(const Matrix& a, const std::vector<std::uint32_t>& idx) {
    Matrix out(idx.size(), a.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* src = a.row(idx[i]);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < a.cols; ++j) dst[j] = src[j];
    }
    return out;
}

// Solves A x = b in place for symmetric positive definite A (upper triangle
// is read; full matrix gets overwritten by the factor).
inline std::vector<double> cholesky_solve(Matrix a, std::vector<double> b) {
    const std::size_t d = a.rows;
    if (a.cols != d || b.size() != d) throw Error("cholesky_solve: shape mismatch");
    // mirror upper to lower, then factor A = L L^T
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            a(j, i) = a(i, j);
    for (std::size_t j = 0; j < d; ++j) {
        double diag = a(j, j) - kern::dot(a.row(j), a.row(j), j);
        if (!(diag > 0.0)) throw Error("cholesky_solve: matrix not positive definite");
        diag = std::sqrt(diag);
        a(j, j) = diag;
        for (std::size_t i = j + 1; i < d; ++i)
            a(i, j) = (a(i, j) - kern::dot(a.row(i), a.row(j), j)) / diag;
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < d; ++i)
        b[i] = (b[i] - kern::dot(a.row(i), b.data(), i)) / a(i, i);
    for (std::size_t i = d; i-- > 0;) {
        double s = b[i];
        for (std::size_t jj = i + 1; jj < d; ++jj) s -= a(jj, i) * b[jj];
        b[i] = s / a(i, i);
    }
    return b;
}

} // namespace gatex
