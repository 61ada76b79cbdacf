#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gravkit/dist.hpp"
#include "gravkit/error.hpp"
#include "gravkit/fit.hpp"
#include "gravkit/linalg.hpp"
#include "gravkit/model.hpp"
#include "gravkit/table.hpp"

namespace gravkit {

/// Left-censored regression inputs.  Parameters are θ = (β, ln σ); rows
/// with y ≤ left_bound are treated as censored at the bound.
struct TobitProblem {
    DesignMatrix design;
    double left_bound = 0.0;
    std::vector<unsigned char> censored;

    TobitProblem(DesignMatrix d, double bound) : design(std::move(d)), left_bound(bound) {
        censored.resize(design.n());
        for (std::size_t i = 0; i < design.n(); ++i)
            censored[i] = design.y[i] <= left_bound ? 1 : 0;
    }

    /// Censor at the observed minimum — the construction used with a
    /// log_shift(a) response, where min y = ln(a) exactly on the rows
    /// that were zero before shifting.
    static TobitProblem from_design(DesignMatrix d) {
        double bound = d.y.empty() ? 0.0 : *std::min_element(d.y.begin(), d.y.end());
        return TobitProblem(std::move(d), bound);
    }

    std::size_t n_censored() const {
        std::size_t c = 0;
        for (auto f : censored) c += f;
        return c;
    }
};

namespace detail {

/// One pass over the data: the log-likelihood at θ and, when G is
/// non-null, the per-observation score matrix (n × (p+1), one column per
/// parameter, ln σ last).  Uncensored rows contribute ln φ(u) − ln σ with
/// u = (y−xβ)/σ; censored rows contribute ln Φ(v) with v = (c−xβ)/σ.
/// Scores: uncensored ∂β = (u/σ)x, ∂lnσ = u²−1; censored ∂β = −(λ(v)/σ)x,
/// ∂lnσ = −λ(v)·v, with λ the inverse Mills ratio.
inline double tobit_eval(const TobitProblem& pr, const std::vector<double>& theta,
                         Matrix* G) {
    const std::size_t n = pr.design.n(), p = pr.design.p();
    const double log_sigma = theta[p];
    const double sigma = std::exp(log_sigma);
    if (!std::isfinite(sigma) || sigma <= 0.0)
        return -std::numeric_limits<double>::infinity();

    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = pr.design.X.row(i);
        double xb = 0.0;
        for (std::size_t j = 0; j < p; ++j) xb += x[j] * theta[j];
        if (pr.censored[i]) {
            const double v = (pr.left_bound - xb) / sigma;
            ll += normal_log_cdf(v);
            if (G) {
                const double lam = inverse_mills(v);
                double* g = G->row(i);
                const double gb = -lam / sigma;
                for (std::size_t j = 0; j < p; ++j) g[j] = gb * x[j];
                g[p] = -lam * v;
            }
        } else {
            const double u = (pr.design.y[i] - xb) / sigma;
            ll += normal_log_pdf(u) - log_sigma;
            if (G) {
                double* g = G->row(i);
                const double gb = u / sigma;
                for (std::size_t j = 0; j < p; ++j) g[j] = gb * x[j];
                g[p] = u * u - 1.0;
            }
        }
    }
    return ll;
}

} // namespace detail

/// Log-likelihood at θ = (β, ln σ).
inline double tobit_loglik(const TobitProblem& pr, const std::vector<double>& theta) {
    if (theta.size() != pr.design.p() + 1)
        throw std::invalid_argument("tobit_loglik: theta must have p+1 entries");
    return detail::tobit_eval(pr, theta, nullptr);
}

/// Per-observation analytic score matrix, n × (p+1).
inline Matrix tobit_score(const TobitProblem& pr, const std::vector<double>& theta) {
    if (theta.size() != pr.design.p() + 1)
        throw std::invalid_argument("tobit_score: theta must have p+1 entries");
    Matrix G(pr.design.n(), pr.design.p() + 1);
    detail::tobit_eval(pr, theta, &G);
    return G;
}

struct TobitOptions {
    std::size_t max_iter = 500;
    double grad_tol = 1e-6;   ///< max-norm of the summed score
    double ll_rel_tol = 1e-9; ///< relative log-likelihood change
};

/// Maximum likelihood by BHHH: Newton steps with the outer product of
/// per-observation scores standing in for the negative Hessian, a
/// halving line search (down to 2⁻³⁰), and convergence on either a small
/// gradient or a small relative likelihood change.  The reported
/// covariance is the inverse OPG at the optimum — BHHH's own curvature
/// estimate.
inline FitResult fit_tobit_bhhh(const TobitProblem& pr, std::vector<double> start,
                                TobitOptions opts = {}) {
    const std::size_t n = pr.design.n(), p = pr.design.p(), q = p + 1;
    if (start.size() != q)
        throw std::invalid_argument("fit_tobit_bhhh: start must have p+1 entries");
    if (n <= q)
        throw FitError("fit_tobit_bhhh: need more observations than parameters");

    std::vector<double> theta = std::move(start);
    Matrix G(n, q);
    double ll = detail::tobit_eval(pr, theta, &G);
    if (!std::isfinite(ll))
        throw FitError("tobit log-likelihood is not finite at the starting values");

    auto opg_of = [&](const Matrix& scores) {
        Matrix opg(q, q);
        for (std::size_t i = 0; i < n; ++i) {
            const double* g = scores.row(i);
            for (std::size_t a = 0; a < q; ++a)
                for (std::size_t b = a; b < q; ++b) opg(a, b) += g[a] * g[b];
        }
        for (std::size_t a = 0; a < q; ++a)
            for (std::size_t b = 0; b < a; ++b) opg(a, b) = opg(b, a);
        return opg;
    };

    bool converged = false;
    std::size_t iterations = 0;
    constexpr double min_step = 9.313225746154785e-10; // 2⁻³⁰

    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        std::vector<double> grad(q, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* g = G.row(i);
            for (std::size_t a = 0; a < q; ++a) grad[a] += g[a];
        }
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::fabs(g));
        if (gmax < opts.grad_tol) {
            converged = true;
            break;
        }

        std::vector<double> dir;
        try {
            dir = solve_spd(opg_of(G), grad);
        } catch (const DefinitenessError& e) {
            throw DefinitenessError(
                "BHHH outer-product matrix is singular at iteration " + std::to_string(it) +
                    " (" + e.what() + ")",
                e.pivot());
        }

        double step = 1.0, ll_new = 0.0;
        std::vector<double> theta_new(q);
        bool accepted = false;
        while (step >= min_step) {
            for (std::size_t a = 0; a < q; ++a) theta_new[a] = theta[a] + step * dir[a];
            ll_new = detail::tobit_eval(pr, theta_new, nullptr);
            if (std::isfinite(ll_new) && ll_new > ll) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            throw ConvergenceError("BHHH line search could not improve the log-likelihood "
                                   "at iteration " +
                                       std::to_string(it),
                                   it, theta);

        const double ll_change = std::fabs(ll_new - ll) / (std::fabs(ll) + 0.1);
        theta = std::move(theta_new);
        ll = detail::tobit_eval(pr, theta, &G);
        iterations = it;
        if (ll_change < opts.ll_rel_tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("BHHH did not converge in " + std::to_string(opts.max_iter) +
                                   " iterations",
                               opts.max_iter, theta);

    FitResult fit;
    fit.names = pr.design.names;
    fit.names.push_back("logSigma");
    fit.beta = theta;
    fit.cov = invert_spd(opg_of(G));
    fit.se = detail::diagonal_sqrt(fit.cov);
    fit.dispersion = 1.0;
    fit.loglik = ll;
    fit.n_obs = n;
    fit.iterations = iterations;
    fit.converged = true;
    std::vector<double> beta_only(theta.begin(), theta.begin() + p);
    fit.linear_predictor = matvec(pr.design.X, beta_only);
    fit.fitted_mu = fit.linear_predictor;
    return fit;
}

/// Trace of a censoring-shift search: the shift used for each fit and
/// the slope estimate it produced.
struct ShiftSearchState {
    double a_final = 0.0;
    double target = 0.0;
    double tol = 0.0;
    std::size_t iterations = 0;
    struct Step {
        double a;
        double estimate;
    };
    std::vector<Step> trace;
};

struct ShiftSearchResult {
    double a = 0.0;        ///< shift value after the loop exits
    ShiftSearchState state;
    FitResult fit;         ///< the final fitted model (the last fit made)
};

/// Calibrate the shift a in ln(a + y): fit the censored model from a
/// zero start, compare the first slope coefficient against `target`, and
/// walk a downward — by 5 while the gap exceeds 2·tol, by 1 inside that
/// band — until the gap is within tol.  The decrement is applied after
/// every fit, including the final one, so the returned `a` is one step
/// past the shift of the fit that satisfied the target.  A required fit
/// at a ≤ 0 raises SearchError; inner fit failures are re-raised as
/// SearchError citing the current shift.
inline ShiftSearchResult search_censor_shift(const ColumnTable& table, const ModelSpec& base,
                                             double target, double tol, double a0,
                                             TobitOptions tobit_opts = {}) {
    if (!(a0 > 0.0) || !std::isfinite(a0))
        throw SearchError("censor-shift search needs a positive starting shift");
    if (!(tol > 0.0))
        throw std::invalid_argument("search_censor_shift: tol must be positive");

    ShiftSearchResult result;
    result.state.target = target;
    result.state.tol = tol;
    double a = a0;

    while (true) {
        ModelSpec spec = base;
        spec.transform = ResponseTransform::log_shift(a);
        spec.row_filter = RowFilter::all;

        double estimate;
        try {
            DesignMatrix design = build_design(table, spec);
            TobitProblem problem = TobitProblem::from_design(std::move(design));
            std::vector<double> start(problem.design.p() + 1, 0.0);
            result.fit = fit_tobit_bhhh(problem, std::move(start), tobit_opts);
            if (result.fit.beta.size() < 2)
                throw FitError("censored model has no slope coefficient to target");
            estimate = result.fit.beta[1];
        } catch (const SearchError&) {
            throw;
        } catch (const Error& e) {
            throw SearchError("censor-shift search: fit at a = " + std::to_string(a) +
                              " failed: " + e.what());
        }

        result.state.trace.push_back({a, estimate});
        ++result.state.iterations;

        const double gap = std::fabs(estimate - target);
        a -= gap > 2.0 * tol ? 5.0 : 1.0;
        if (gap <= tol) break;
        if (a <= 0.0)
            throw SearchError("censor-shift search exhausted positive shifts (a reached " +
                              std::to_string(a) + " after " +
                              std::to_string(result.state.iterations) +
                              " iterations without meeting the target)");
    }

    result.a = a;
    result.state.a_final = a;
    return result;
}

} // namespace gravkit
