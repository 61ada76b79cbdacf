#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gravkit/error.hpp"

namespace gravkit {

/// Dense row-major matrix of doubles.  Minimal by design: storage,
/// indexing, and the handful of factorizations the estimators need.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    /// Pointer to the start of row i (contiguous, cols() entries).
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    bool all_finite() const noexcept {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline std::vector<double> matvec(const Matrix& A, const std::vector<double>& x) {
    if (x.size() != A.cols())
        throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> y(A.rows());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        const double* r = A.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols(); ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

namespace detail {

/// In-place Householder QR of A (n >= p).  On return the strict upper
/// triangle of A holds R above its diagonal, the returned vector holds
/// diag(R), and the columns below the diagonal hold the (unnormalized)
/// Householder vectors.  If b is non-null the same reflections are
/// applied to it, so b[0..p) becomes Qᵀb's leading block.
inline std::vector<double> householder_qr(Matrix& A, std::vector<double>* b) {
    const std::size_t n = A.rows(), p = A.cols();
    std::vector<double> rdiag(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
        // Scaled column norm below row k, guarding against over/underflow.
        double scale = 0.0;
        for (std::size_t i = k; i < n; ++i) scale = std::max(scale, std::fabs(A(i, k)));
        if (scale == 0.0) {
            rdiag[k] = 0.0; // exactly dependent column; caller raises the rank error
            continue;
        }
        double ssq = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            const double t = A(i, k) / scale;
            ssq += t * t;
        }
        const double norm = scale * std::sqrt(ssq);
        const double alpha = A(k, k) >= 0.0 ? -norm : norm; // becomes R(k,k)
        A(k, k) -= alpha;                                   // column k now holds v
        const double vtv = -2.0 * alpha * A(k, k);          // vᵀv, positive by construction
        for (std::size_t j = k + 1; j < p; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += A(i, k) * A(i, j);
            s *= 2.0 / vtv;
            for (std::size_t i = k; i < n; ++i) A(i, j) -= s * A(i, k);
        }
        if (b) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += A(i, k) * (*b)[i];
            s *= 2.0 / vtv;
            for (std::size_t i = k; i < n; ++i) (*b)[i] -= s * A(i, k);
        }
        rdiag[k] = alpha;
    }
    return rdiag;
}

/// Relative rank test on diag(R); names the first dependent column.
inline void check_full_rank(const std::vector<double>& rdiag,
                            const std::vector<std::string>* names) {
    double maxd = 0.0;
    for (double d : rdiag) maxd = std::max(maxd, std::fabs(d));
    const double threshold = 1e-10 * maxd;
    for (std::size_t j = 0; j < rdiag.size(); ++j) {
        if (std::fabs(rdiag[j]) <= threshold) {
            const std::string col =
                (names && j < names->size()) ? (*names)[j] : "column " + std::to_string(j);
            throw RankError("design matrix is rank-deficient: '" + col +
                                "' is linearly dependent on earlier columns",
                            col);
        }
    }
}

/// U = R⁻¹ (upper triangular) from a packed QR factorization.
inline Matrix r_inverse(const Matrix& A, const std::vector<double>& rdiag) {
    const std::size_t p = rdiag.size();
    Matrix U(p, p);
    for (std::size_t c = 0; c < p; ++c) {
        U(c, c) = 1.0 / rdiag[c];
        for (std::size_t i = c; i-- > 0;) {
            double s = 0.0;
            for (std::size_t k = i + 1; k <= c; ++k) s += A(i, k) * U(k, c);
            U(i, c) = -s / rdiag[i];
        }
    }
    return U;
}

/// Symmetric product U·Uᵀ for upper-triangular U.
inline Matrix upper_times_transpose(const Matrix& U) {
    const std::size_t p = U.rows();
    Matrix out(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double s = 0.0;
            for (std::size_t k = j; k < p; ++k) s += U(i, k) * U(j, k);
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return out;
}

/// Lower Cholesky factor of a symmetric matrix; DefinitenessError (with
/// the pivot index) if any pivot is non-positive.
inline Matrix cholesky_lower(const Matrix& A) {
    const std::size_t n = A.rows();
    if (A.cols() != n)
        throw std::invalid_argument("cholesky: matrix must be square");
    double maxabs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) maxabs = std::max(maxabs, std::fabs(A(i, j)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(A(i, j) - A(j, i)) > 1e-10 * (1.0 + maxabs))
                throw std::invalid_argument("cholesky: matrix is not symmetric");

    Matrix L(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = A(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
        if (!(d > 0.0)) // also catches NaN
            throw DefinitenessError("matrix is not positive definite (pivot " +
                                        std::to_string(j) + " = " + std::to_string(d) + ")",
                                    j);
        L(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = A(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / L(j, j);
        }
    }
    return L;
}

} // namespace detail

struct WlsSolution {
    std::vector<double> beta;
    Matrix xtwx_inv; ///< (XᵀWX)⁻¹, the unscaled coefficient covariance
};

/// Weighted least squares via Householder QR of √W·X — no normal
/// equations are ever formed, so conditioning is that of X itself.
/// Weights must be nonnegative and finite; n >= p >= 1.  Rank deficiency
/// raises RankError naming the offending column (names, when provided,
/// label X's columns).
inline WlsSolution solve_wls(const Matrix& X, const std::vector<double>& y,
                             const std::vector<double>& w,
                             const std::vector<std::string>* names = nullptr) {
    const std::size_t n = X.rows(), p = X.cols();
    if (y.size() != n || w.size() != n)
        throw std::invalid_argument("solve_wls: y and w must have X.rows() entries");
    if (p == 0 || n < p)
        throw std::invalid_argument("solve_wls: need n >= p >= 1");
    if (!X.all_finite())
        throw std::invalid_argument("solve_wls: X has non-finite entries");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(y[i]))
            throw std::invalid_argument("solve_wls: y has non-finite entries");
        if (!(w[i] >= 0.0) || !std::isfinite(w[i]))
            throw std::invalid_argument("solve_wls: weights must be nonnegative and finite");
    }

    Matrix A(n, p);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::sqrt(w[i]);
        for (std::size_t j = 0; j < p; ++j) A(i, j) = s * X(i, j);
        b[i] = s * y[i];
    }
    const auto rdiag = detail::householder_qr(A, &b);
    detail::check_full_rank(rdiag, names);

    WlsSolution sol;
    sol.beta.assign(p, 0.0);
    for (std::size_t i = p; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < p; ++k) s -= A(i, k) * sol.beta[k];
        sol.beta[i] = s / rdiag[i];
    }
    const Matrix U = detail::r_inverse(A, rdiag);
    sol.xtwx_inv = detail::upper_times_transpose(U);
    return sol;
}

/// (XᵀWX)⁻¹ alone, via the same QR route, without solving for
/// coefficients.  Used to evaluate a covariance at final weights.
inline Matrix weighted_gram_inverse(const Matrix& X, const std::vector<double>& w,
                                    const std::vector<std::string>* names = nullptr) {
    const std::size_t n = X.rows(), p = X.cols();
    if (w.size() != n)
        throw std::invalid_argument("weighted_gram_inverse: w must have X.rows() entries");
    if (p == 0 || n < p)
        throw std::invalid_argument("weighted_gram_inverse: need n >= p >= 1");
    Matrix A(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(w[i] >= 0.0) || !std::isfinite(w[i]))
            throw std::invalid_argument("weighted_gram_inverse: bad weight");
        const double s = std::sqrt(w[i]);
        for (std::size_t j = 0; j < p; ++j) A(i, j) = s * X(i, j);
    }
    const auto rdiag = detail::householder_qr(A, nullptr);
    detail::check_full_rank(rdiag, names);
    const Matrix U = detail::r_inverse(A, rdiag);
    return detail::upper_times_transpose(U);
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
/// The result is exactly symmetric by construction.
inline Matrix invert_spd(const Matrix& A) {
    const Matrix L = detail::cholesky_lower(A);
    const std::size_t n = L.rows();
    // M = L⁻¹ (lower triangular), column by column.
    Matrix M(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        M(j, j) = 1.0 / L(j, j);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = j; k < i; ++k) s += L(i, k) * M(k, j);
            M(i, j) = -s / L(i, i);
        }
    }
    // A⁻¹ = L⁻ᵀ·L⁻¹; fill both triangles from one dot product each.
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = j; k < n; ++k) s += M(k, i) * M(k, j);
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return out;
}

/// Solve A·x = b for symmetric positive-definite A (Cholesky, forward
/// then backward substitution).
inline std::vector<double> solve_spd(const Matrix& A, const std::vector<double>& b) {
    if (b.size() != A.rows())
        throw std::invalid_argument("solve_spd: dimension mismatch");
    const Matrix L = detail::cholesky_lower(A);
    const std::size_t n = L.rows();
    std::vector<double> x(b);
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * x[k];
        x[i] = s / L(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= L(k, i) * x[k];
        x[i] = s / L(i, i);
    }
    return x;
}

} // namespace gravkit
