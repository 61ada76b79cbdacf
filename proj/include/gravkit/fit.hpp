#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gravkit/linalg.hpp"

namespace gravkit {

/// Common result shape for every estimator.  `cov` is the full parameter
/// covariance (already scaled by any dispersion); `se` its diagonal
/// square roots.  `loglik` is absent for quasi-likelihood fits, which
/// have no true likelihood.
struct FitResult {
    std::vector<std::string> names;
    std::vector<double> beta;
    Matrix cov;
    std::vector<double> se;
    double dispersion = 1.0;
    std::optional<double> loglik;
    std::size_t n_obs = 0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> fitted_mu;
    std::vector<double> linear_predictor;
};

namespace detail {

inline std::vector<double> diagonal_sqrt(const Matrix& cov) {
    std::vector<double> se(cov.rows());
    for (std::size_t j = 0; j < cov.rows(); ++j) se[j] = std::sqrt(cov(j, j));
    return se;
}

/// Gaussian maximized log-likelihood: −n/2·(ln 2π + ln(RSS/n) + 1).
inline double gaussian_loglik(std::size_t n, double rss) {
    const double nn = static_cast<double>(n);
    return -0.5 * nn * (std::log(2.0 * std::numbers::pi * rss / nn) + 1.0);
}

} // namespace detail
} // namespace gravkit
