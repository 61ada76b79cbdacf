#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gravkit/gravkit.hpp"
#include "support.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("an exact linear relationship is recovered exactly", "[ols]") {
    gravkit::DesignMatrix d;
    d.X = gravkit::Matrix(5, 2);
    d.names = {"(Intercept)", "x"};
    d.y.resize(5);
    for (int i = 0; i < 5; ++i) {
        d.X(i, 0) = 1.0;
        d.X(i, 1) = i;
        d.y[i] = 2.0 + 3.0 * i;
    }
    const auto fit = gravkit::fit_ols(d);
    CHECK_THAT(fit.beta[0], WithinAbs(2.0, 1e-12));
    CHECK_THAT(fit.beta[1], WithinAbs(3.0, 1e-12));
    CHECK_THAT(fit.dispersion, WithinAbs(0.0, 1e-20));
    CHECK(fit.converged);
    CHECK(fit.iterations == 1);
    CHECK(fit.n_obs == 5);
    REQUIRE(fit.loglik.has_value());
}

TEST_CASE("an intercept-only fit is the sample mean with its textbook SE", "[ols]") {
    gravkit::DesignMatrix d;
    d.X = gravkit::Matrix(4, 1, 1.0);
    d.names = {"(Intercept)"};
    d.y = {1.0, 2.0, 3.0, 6.0};
    const auto fit = gravkit::fit_ols(d);
    const double mean = 3.0;
    const double var = ((1 - mean) * (1 - mean) + (2 - mean) * (2 - mean) +
                        (3 - mean) * (3 - mean) + (6 - mean) * (6 - mean)) /
                       3.0;
    CHECK_THAT(fit.beta[0], WithinRel(mean, 1e-14));
    CHECK_THAT(fit.dispersion, WithinRel(var, 1e-13));
    CHECK_THAT(fit.se[0], WithinRel(std::sqrt(var / 4.0), 1e-13));
}

TEST_CASE("residuals are orthogonal to every regressor", "[ols]") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.5);
    auto d = testsupport::random_design(rng, 50, 4);
    for (std::size_t i = 0; i < d.n(); ++i)
        d.y[i] = 1.0 - 0.5 * d.X(i, 1) + 2.0 * d.X(i, 2) + noise(rng);
    const auto fit = gravkit::fit_ols(d);
    for (std::size_t j = 0; j < d.p(); ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d.n(); ++i)
            dot += d.X(i, j) * (d.y[i] - fit.fitted_mu[i]);
        CHECK_THAT(dot, WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("the reported log-likelihood is the concentrated Gaussian one", "[ols]") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto d = testsupport::random_design(rng, 20, 2);
    for (std::size_t i = 0; i < d.n(); ++i) d.y[i] = d.X(i, 1) + noise(rng);
    const auto fit = gravkit::fit_ols(d);

    double rss = 0.0;
    for (std::size_t i = 0; i < d.n(); ++i) {
        const double r = d.y[i] - fit.fitted_mu[i];
        rss += r * r;
    }
    const double sigma2 = rss / 20.0;
    double direct = 0.0;
    for (std::size_t i = 0; i < d.n(); ++i) {
        const double r = d.y[i] - fit.fitted_mu[i];
        direct += -0.5 * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * r * r / sigma2;
    }
    CHECK_THAT(*fit.loglik, WithinRel(direct, 1e-12));
}

TEST_CASE("more parameters than observations is a fit error", "[ols]") {
    gravkit::DesignMatrix d;
    d.X = gravkit::Matrix(2, 2, 1.0);
    d.names = {"a", "b"};
    d.y = {1.0, 2.0};
    CHECK_THROWS_AS(gravkit::fit_ols(d), gravkit::FitError);
}
