#include "localdiff/linalg.hpp"

#include "localdiff/errors.hpp"

#include <cmath>
#include <limits>

namespace localdiff {

Matrix mat_mul(const Matrix& A, const Matrix& B) {
    Matrix C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t l = 0; l < A.cols; ++l) {
            const double v = A(i, l);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < B.cols; ++j) C(i, j) += v * B(l, j);
        }
    return C;
}

Matrix transpose(const Matrix& A) {
    Matrix T(A.cols, A.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
    return T;
}

namespace {

void check_inputs(const Matrix& X, const std::vector<double>* y, const std::vector<double>& w) {
    if (X.rows < X.cols) throw analysis_error("least squares: fewer rows than columns");
    if (w.size() != X.rows) throw analysis_error("least squares: weight length mismatch");
    if (y && y->size() != X.rows) throw analysis_error("least squares: outcome length mismatch");
    for (double v : X.a)
        if (!std::isfinite(v)) throw analysis_error("least squares: non-finite design entry");
    for (double v : w) {
        if (!std::isfinite(v) || v <= 0.0)
            throw analysis_error("least squares: weights must be finite and positive");
    }
    if (y)
        for (double v : *y)
            if (!std::isfinite(v)) throw analysis_error("least squares: non-finite outcome");
}

// In-place Householder QR of A (n x k, n >= k); b, when present, is
// transformed to Q'b alongside. On return the upper triangle of A holds R.
void householder(Matrix& A, std::vector<double>* b) {
    const std::size_t n = A.rows, k = A.cols;
    std::vector<double> v(n);
    for (std::size_t j = 0; j < k; ++j) {
        double norm2 = 0.0;
        for (std::size_t i = j; i < n; ++i) norm2 += A(i, j) * A(i, j);
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) continue; // column already zero below and at the pivot
        const double ajj = A(j, j);
        const double alpha = ajj >= 0.0 ? -norm : norm;
        v[j] = ajj - alpha;
        double vtv = v[j] * v[j];
        for (std::size_t i = j + 1; i < n; ++i) {
            v[i] = A(i, j);
            vtv += v[i] * v[i];
        }
        if (vtv > 0.0) {
            for (std::size_t c = j + 1; c < k; ++c) {
                double s = 0.0;
                for (std::size_t i = j; i < n; ++i) s += v[i] * A(i, c);
                const double f = 2.0 * s / vtv;
                for (std::size_t i = j; i < n; ++i) A(i, c) -= f * v[i];
            }
            if (b) {
                double s = 0.0;
                for (std::size_t i = j; i < n; ++i) s += v[i] * (*b)[i];
                const double f = 2.0 * s / vtv;
                for (std::size_t i = j; i < n; ++i) (*b)[i] -= f * v[i];
            }
        }
        A(j, j) = alpha;
        for (std::size_t i = j + 1; i < n; ++i) A(i, j) = 0.0;
    }
}

void check_rank(const Matrix& R, const std::vector<std::string>* names) {
    const std::size_t k = R.cols;
    double max_diag = 0.0;
    for (std::size_t j = 0; j < k; ++j) max_diag = std::max(max_diag, std::fabs(R(j, j)));
    const double tol = static_cast<double>(std::max(R.rows, k)) *
                       std::numeric_limits<double>::epsilon() * max_diag;
    std::string bad;
    for (std::size_t j = 0; j < k; ++j) {
        if (std::fabs(R(j, j)) <= tol) {
            if (!bad.empty()) bad += ", ";
            bad += names && j < names->size() ? (*names)[j] : "column " + std::to_string(j);
        }
    }
    if (max_diag == 0.0 || !bad.empty())
        throw analysis_error("design matrix is rank deficient (collinear: " +
                             (bad.empty() ? std::string("all columns zero") : bad) + ")");
}

Matrix scaled_design(const Matrix& X, const std::vector<double>& w) {
    Matrix A = X;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double s = std::sqrt(w[i]);
        for (std::size_t j = 0; j < X.cols; ++j) A(i, j) *= s;
    }
    return A;
}

} // namespace

QrWls qr_wls(const Matrix& X, const std::vector<double>& y, const std::vector<double>& w,
             const std::vector<std::string>* col_names) {
    check_inputs(X, &y, w);
    const std::size_t n = X.rows, k = X.cols;
    Matrix A = scaled_design(X, w);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = std::sqrt(w[i]) * y[i];
    householder(A, &b);
    check_rank(A, col_names);

    QrWls out;
    out.beta.assign(k, 0.0);
    for (std::size_t jj = k; jj-- > 0;) {
        double s = b[jj];
        for (std::size_t c = jj + 1; c < k; ++c) s -= A(jj, c) * out.beta[c];
        out.beta[jj] = s / A(jj, jj);
    }
    out.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < k; ++j) fit += X(i, j) * out.beta[j];
        out.residuals[i] = y[i] - fit;
    }
    out.R = Matrix(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) out.R(i, j) = A(i, j);
    return out;
}

Matrix r_factor(const Matrix& X, const std::vector<double>& w,
                const std::vector<std::string>* col_names) {
    check_inputs(X, nullptr, w);
    Matrix A = scaled_design(X, w);
    householder(A, nullptr);
    check_rank(A, col_names);
    Matrix R(X.cols, X.cols);
    for (std::size_t i = 0; i < X.cols; ++i)
        for (std::size_t j = i; j < X.cols; ++j) R(i, j) = A(i, j);
    return R;
}

Matrix inverse_from_r(const Matrix& R) {
    const std::size_t k = R.cols;
    // Column-by-column back substitution of R * Rinv = I.
    Matrix Rinv(k, k);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t jj = k; jj-- > 0;) {
            double s = (jj == c) ? 1.0 : 0.0;
            for (std::size_t m = jj + 1; m < k; ++m) s -= R(jj, m) * Rinv(m, c);
            Rinv(jj, c) = s / R(jj, jj);
        }
    }
    Matrix out = mat_mul(Rinv, transpose(Rinv));
    // Exact symmetry by construction can still drift a few ulps; pin it.
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const double v = 0.5 * (out(i, j) + out(j, i));
            out(i, j) = out(j, i) = v;
        }
    return out;
}

} // namespace localdiff
