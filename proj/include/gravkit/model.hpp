#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gravkit/error.hpp"
#include "gravkit/linalg.hpp"
#include "gravkit/table.hpp"

namespace gravkit {

enum class TransformKind { identity, log, log1p, log_shift };

/// Response transform applied row-wise before estimation.  log_shift(a)
/// maps y to ln(a + y) and is the transform the censored model searches
/// over.
struct ResponseTransform {
    TransformKind kind = TransformKind::identity;
    double shift = 0.0; ///< meaningful for log_shift only

    static ResponseTransform identity() { return {TransformKind::identity, 0.0}; }
    static ResponseTransform log() { return {TransformKind::log, 0.0}; }
    static ResponseTransform log1p() { return {TransformKind::log1p, 0.0}; }
    static ResponseTransform log_shift(double a) {
        if (!(a > 0.0) || !std::isfinite(a))
            throw DomainError("log_shift requires a positive finite shift");
        return {TransformKind::log_shift, a};
    }

    std::string describe() const {
        switch (kind) {
            case TransformKind::identity: return "identity";
            case TransformKind::log: return "log";
            case TransformKind::log1p: return "log1p";
            case TransformKind::log_shift: return "log_shift(" + std::to_string(shift) + ")";
        }
        return "?";
    }
};

/// Apply a transform to one value; DomainError outside its domain.
inline double response_transform(double v, const ResponseTransform& t) {
    switch (t.kind) {
        case TransformKind::identity:
            return v;
        case TransformKind::log:
            if (!(v > 0.0)) throw DomainError("log transform requires a positive value");
            return std::log(v);
        case TransformKind::log1p:
            if (!(v > -1.0)) throw DomainError("log1p transform requires a value > -1");
            return std::log1p(v);
        case TransformKind::log_shift:
            if (!(t.shift + v > 0.0))
                throw DomainError("log_shift transform requires shift + value > 0");
            return std::log(t.shift + v);
    }
    throw DomainError("unknown transform");
}

enum class RowFilter { all, positive_response };

/// Declarative description of one regression: which column is the
/// response, how it is transformed, which rows survive, and which
/// columns enter the design (an intercept is prepended by default).
struct ModelSpec {
    std::string response;
    ResponseTransform transform = ResponseTransform::identity();
    std::vector<std::string> regressors;
    bool include_intercept = true;
    RowFilter row_filter = RowFilter::all;
};

/// Materialized regression inputs: transformed response, dense design
/// matrix, and column names ("(Intercept)" first when present).
struct DesignMatrix {
    std::vector<double> y;
    Matrix X;
    std::vector<std::string> names;

    std::size_t n() const noexcept { return y.size(); }
    std::size_t p() const noexcept { return X.cols(); }
};

/// Build the design from a table per the spec: validate references,
/// reject NaN in any referenced column, filter rows, transform the
/// response.  Row order is preserved.  Error messages cite 1-based rows.
inline DesignMatrix build_design(const ColumnTable& table, const ModelSpec& spec) {
    if (spec.response.empty())
        throw NameError("model spec has no response column");
    if (spec.regressors.empty())
        throw NameError("model spec has no regressors");
    {
        std::set<std::string> seen;
        for (const auto& r : spec.regressors) {
            if (r == spec.response)
                throw NameError("regressor '" + r + "' is also the response");
            if (!seen.insert(r).second)
                throw NameError("duplicate regressor '" + r + "'");
        }
    }

    const std::vector<double>& y_raw = table.col(spec.response); // NameError if absent
    std::vector<const std::vector<double>*> reg_cols;
    reg_cols.reserve(spec.regressors.size());
    for (const auto& r : spec.regressors) reg_cols.push_back(&table.col(r));

    // Missing or non-finite data in a referenced column is a hard error,
    // never a silent drop.
    auto check_finite = [&](const std::vector<double>& col, const std::string& name) {
        for (std::size_t i = 0; i < col.size(); ++i)
            if (!std::isfinite(col[i]))
                throw DomainError("non-finite value in column '" + name + "' at row " +
                                  std::to_string(i + 1));
    };
    check_finite(y_raw, spec.response);
    for (std::size_t j = 0; j < reg_cols.size(); ++j)
        check_finite(*reg_cols[j], spec.regressors[j]);

    std::vector<std::size_t> keep;
    keep.reserve(table.n_rows());
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (spec.row_filter == RowFilter::positive_response && !(y_raw[i] > 0.0)) continue;
        keep.push_back(i);
    }
    if (keep.empty())
        throw EmptyDesignError("no rows survive the row filter for response '" +
                               spec.response + "'");

    DesignMatrix d;
    const std::size_t n = keep.size();
    const std::size_t p = spec.regressors.size() + (spec.include_intercept ? 1 : 0);
    d.y.resize(n);
    d.X = Matrix(n, p);
    if (spec.include_intercept) d.names.push_back("(Intercept)");
    for (const auto& r : spec.regressors) d.names.push_back(r);

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = keep[i];
        try {
            d.y[i] = response_transform(y_raw[src], spec.transform);
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " (response '" + spec.response +
                              "', row " + std::to_string(src + 1) + ")");
        }
        std::size_t j = 0;
        if (spec.include_intercept) d.X(i, j++) = 1.0;
        for (std::size_t k = 0; k < reg_cols.size(); ++k) d.X(i, j++) = (*reg_cols[k])[src];
    }
    return d;
}

} // namespace gravkit
