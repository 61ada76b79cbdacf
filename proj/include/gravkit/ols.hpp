#pragma once

#include <cstddef>
#include <vector>

#include "gravkit/fit.hpp"
#include "gravkit/linalg.hpp"
#include "gravkit/model.hpp"

namespace gravkit {

/// Ordinary least squares.  Covariance is s²·(XᵀX)⁻¹ with
/// s² = RSS/(n−p); that s² is reported as the dispersion.
inline FitResult fit_ols(const DesignMatrix& d) {
    const std::size_t n = d.n(), p = d.p();
    if (n <= p)
        throw FitError("fit_ols: need more observations than parameters (n=" +
                       std::to_string(n) + ", p=" + std::to_string(p) + ")");
    const std::vector<double> w(n, 1.0);
    WlsSolution sol = solve_wls(d.X, d.y, w, &d.names);

    FitResult fit;
    fit.names = d.names;
    fit.beta = std::move(sol.beta);
    fit.linear_predictor = matvec(d.X, fit.beta);
    fit.fitted_mu = fit.linear_predictor;

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = d.y[i] - fit.fitted_mu[i];
        rss += r * r;
    }
    fit.dispersion = rss / static_cast<double>(n - p);
    fit.cov = Matrix(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) fit.cov(i, j) = fit.dispersion * sol.xtwx_inv(i, j);
    fit.se = detail::diagonal_sqrt(fit.cov);
    fit.loglik = detail::gaussian_loglik(n, rss);
    fit.n_obs = n;
    fit.iterations = 1;
    fit.converged = true;
    return fit;
}

} // namespace gravkit
