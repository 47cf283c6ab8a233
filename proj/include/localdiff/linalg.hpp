#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace localdiff {

/// Dense row-major matrix. Small sizes only (design matrices are at most a
/// few thousand rows by ~70 columns), so no blocking or views.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

Matrix mat_mul(const Matrix& A, const Matrix& B);
Matrix transpose(const Matrix& A);

struct QrWls {
    std::vector<double> beta;
    std::vector<double> residuals; // on the original (unscaled) data
    Matrix R;                      // upper-triangular factor of sqrt(W)·X
};

/// Weighted least squares by Householder QR of the sqrt(w)-scaled system.
/// Throws analysis_error on non-finite inputs, non-positive weights, n < k,
/// or rank deficiency; when `col_names` is given the rank error names the
/// collinear columns.
QrWls qr_wls(const Matrix& X, const std::vector<double>& y, const std::vector<double>& w,
             const std::vector<std::string>* col_names = nullptr);

/// R factor alone (same checks), for covariance bread computation.
Matrix r_factor(const Matrix& X, const std::vector<double>& w,
                const std::vector<std::string>* col_names = nullptr);

/// (X'WX)^{-1} = R^{-1} R^{-T} from the triangular factor.
Matrix inverse_from_r(const Matrix& R);

} // namespace localdiff
