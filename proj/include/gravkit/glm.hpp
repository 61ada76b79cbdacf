#pragma once

#include <cfloat>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gravkit/fit.hpp"
#include "gravkit/linalg.hpp"
#include "gravkit/model.hpp"

namespace gravkit {

/// Log-link GLM families.  quasi_poisson has Var(μ) = μ and a free
/// dispersion (Pearson χ²/df); gaussian_log has Var(μ) = 1 — a nonlinear
/// least-squares fit of y on exp(xᵀβ) — with dispersion RSS/(n−p).
enum class FamilyKind { quasi_poisson, gaussian_log };

struct Family {
    FamilyKind kind = FamilyKind::quasi_poisson;

    static Family quasi_poisson() { return {FamilyKind::quasi_poisson}; }
    static Family gaussian_log() { return {FamilyKind::gaussian_log}; }

    double variance(double mu) const {
        return kind == FamilyKind::quasi_poisson ? mu : 1.0;
    }

    /// Family deviance; convergence is declared on its relative change.
    double deviance(const std::vector<double>& y, const std::vector<double>& mu) const {
        double dev = 0.0;
        if (kind == FamilyKind::quasi_poisson) {
            for (std::size_t i = 0; i < y.size(); ++i) {
                // y·ln(y/μ) − (y−μ), with the y = 0 limit equal to μ.
                dev += 2.0 * (y[i] > 0.0 ? y[i] * std::log(y[i] / mu[i]) - (y[i] - mu[i])
                                         : mu[i]);
            }
        } else {
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double r = y[i] - mu[i];
                dev += r * r;
            }
        }
        return dev;
    }

    const char* name() const {
        return kind == FamilyKind::quasi_poisson ? "quasi-Poisson" : "Gaussian log-link";
    }
};

struct GlmOptions {
    std::size_t max_iter = 25;
    double eps = 1e-8; ///< relative deviance-change threshold
};

/// Iteratively reweighted least squares for a log-link GLM.  When `warm`
/// is non-null its linear predictor seeds the iteration (the route by
/// which the NLS column starts from the converged quasi-Poisson fit);
/// otherwise μ₀ = y + 0.1 (quasi-Poisson) or μ₀ = y (gaussian_log,
/// requiring strictly positive responses).
///
/// Each step solves the weighted least-squares problem in the working
/// response z = η + (y−μ)/μ with weights w = μ²/Var(μ), and convergence
/// is declared when |dev − dev_old| / (|dev| + 0.1) < eps.  Exhausting
/// max_iter raises ConvergenceError carrying the last iterate.
inline FitResult fit_glm_irls(const DesignMatrix& d, const Family& family,
                              const FitResult* warm = nullptr, GlmOptions opts = {}) {
    const std::size_t n = d.n(), p = d.p();
    if (n <= p)
        throw FitError("fit_glm_irls: need more observations than parameters (n=" +
                       std::to_string(n) + ", p=" + std::to_string(p) + ")");
    if (opts.max_iter == 0)
        throw std::invalid_argument("fit_glm_irls: max_iter must be at least 1");
    const std::vector<double>& y = d.y;
    if (family.kind == FamilyKind::quasi_poisson) {
        for (std::size_t i = 0; i < n; ++i)
            if (!(y[i] >= 0.0))
                throw DomainError("quasi-Poisson requires a nonnegative response (row " +
                                  std::to_string(i + 1) + ")");
    }

    std::vector<double> eta(n), mu(n);
    if (warm) {
        if (warm->linear_predictor.size() != n)
            throw std::invalid_argument(
                "fit_glm_irls: warm start has a linear predictor of the wrong length");
        eta = warm->linear_predictor;
    } else if (family.kind == FamilyKind::quasi_poisson) {
        for (std::size_t i = 0; i < n; ++i) eta[i] = std::log(y[i] + 0.1);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if (!(y[i] > 0.0))
                throw DomainError("gaussian log-link needs a warm start when the response "
                                  "has nonpositive values (row " +
                                  std::to_string(i + 1) + ")");
            eta[i] = std::log(y[i]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        mu[i] = std::exp(eta[i]);
        if (!std::isfinite(mu[i]))
            throw DivergenceError("starting linear predictor overflows exp()");
        if (mu[i] < DBL_MIN) mu[i] = DBL_MIN; // keep the working response finite
    }

    double dev = family.deviance(y, mu);
    std::vector<double> w(n), z(n), beta;
    std::size_t iterations = 0;
    bool converged = false;

    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = mu[i] * mu[i] / family.variance(mu[i]);
            z[i] = eta[i] + (y[i] - mu[i]) / mu[i];
            if (!std::isfinite(w[i]) || !std::isfinite(z[i]))
                throw DivergenceError("non-finite working quantities at iteration " +
                                      std::to_string(it));
        }
        WlsSolution sol = solve_wls(d.X, z, w, &d.names);
        beta = std::move(sol.beta);
        eta = matvec(d.X, beta);
        for (std::size_t i = 0; i < n; ++i) {
            mu[i] = std::exp(eta[i]);
            if (!std::isfinite(mu[i]))
                throw DivergenceError("exp(linear predictor) overflowed at iteration " +
                                      std::to_string(it));
            if (mu[i] < DBL_MIN) mu[i] = DBL_MIN;
        }
        const double dev_old = dev;
        dev = family.deviance(y, mu);
        iterations = it;
        if (std::fabs(dev - dev_old) / (std::fabs(dev) + 0.1) < opts.eps) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError(std::string(family.name()) + " IRLS did not converge in " +
                                   std::to_string(opts.max_iter) + " iterations",
                               opts.max_iter, beta);

    FitResult fit;
    fit.names = d.names;
    fit.beta = std::move(beta);
    fit.linear_predictor = std::move(eta);
    fit.fitted_mu = std::move(mu);
    fit.n_obs = n;
    fit.iterations = iterations;
    fit.converged = true;

    // Pearson dispersion and model-based covariance at the final weights.
    double pearson = 0.0, rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - fit.fitted_mu[i];
        rss += r * r;
        pearson += r * r / family.variance(fit.fitted_mu[i]);
    }
    fit.dispersion = pearson / static_cast<double>(n - p);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = fit.fitted_mu[i];
        w[i] = m * m / family.variance(m);
    }
    const Matrix gram_inv = weighted_gram_inverse(d.X, w, &d.names);
    fit.cov = Matrix(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) fit.cov(i, j) = fit.dispersion * gram_inv(i, j);
    fit.se = detail::diagonal_sqrt(fit.cov);
    if (family.kind == FamilyKind::gaussian_log)
        fit.loglik = detail::gaussian_loglik(n, rss);
    return fit;
}

} // namespace gravkit
