#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gravkit {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problems with input data: files, archives, formats, URLs, column
/// references, transform domains.  The CLI maps these to exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// Problems while estimating a model: rank deficiency, indefiniteness,
/// divergence, non-convergence, failed searches.  The CLI maps these to
/// exit code 3.
class FitError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read, or written.
class IoError : public DataError {
public:
    using DataError::DataError;
};

/// An HTTP request failed.  `retryable()` distinguishes transient
/// transport-level failures from definite ones (e.g. HTTP 404).
class NetworkError : public DataError {
public:
    NetworkError(std::string message, std::string url, bool retryable)
        : DataError(std::move(message)), url_(std::move(url)), retryable_(retryable) {}

    const std::string& url() const noexcept { return url_; }
    bool retryable() const noexcept { return retryable_; }

private:
    std::string url_;
    bool retryable_;
};

/// Structurally malformed input: bad magic numbers, inconsistent archive
/// records, ragged CSV rows, CRC mismatches.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

/// Input ended before a structure was complete.  Carries the byte offset
/// at which more data was expected.
class TruncationError : public FormatError {
public:
    TruncationError(std::string message, std::size_t offset)
        : FormatError(std::move(message)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// The file is recognizably of the right family but a revision this
/// library does not read.  Carries the raw version byte.
class UnsupportedFormatError : public FormatError {
public:
    UnsupportedFormatError(std::string message, int version)
        : FormatError(std::move(message)), version_(version) {}

    int version() const noexcept { return version_; }

private:
    int version_;
};

/// An archive was read successfully but does not contain the member the
/// caller asked for.
class MissingMemberError : public DataError {
public:
    using DataError::DataError;
};

/// A text cell could not be parsed as a number.  Carries the 1-based data
/// row and the column name.
class ParseError : public DataError {
public:
    ParseError(std::string message, std::size_t row, std::string column)
        : DataError(std::move(message)), row_(row), column_(std::move(column)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

/// A column name is unknown, duplicated, or empty.
class NameError : public DataError {
public:
    using DataError::DataError;
};

/// A value lies outside the mathematical domain of a requested operation
/// (log of a non-positive number, NaN in a referenced column, negative
/// response under a count family).
class DomainError : public DataError {
public:
    using DataError::DataError;
};

/// Row filtering removed every observation.
class EmptyDesignError : public DataError {
public:
    using DataError::DataError;
};

/// The design matrix is numerically rank-deficient.  Carries the name of
/// the first dependent column.
class RankError : public FitError {
public:
    RankError(std::string message, std::string column)
        : FitError(std::move(message)), column_(std::move(column)) {}

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

/// A matrix required to be positive definite is not.  Carries the index
/// of the failing Cholesky pivot.
class DefinitenessError : public FitError {
public:
    DefinitenessError(std::string message, std::size_t pivot)
        : FitError(std::move(message)), pivot_(pivot) {}

    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// An iterative fit ran out of iterations (or could not improve further).
/// Carries the iteration count and the last parameter iterate.
class ConvergenceError : public FitError {
public:
    ConvergenceError(std::string message, std::size_t iterations,
                     std::vector<double> last_estimate = {})
        : FitError(std::move(message)),
          iterations_(iterations),
          last_estimate_(std::move(last_estimate)) {}

    std::size_t iterations() const noexcept { return iterations_; }
    const std::vector<double>& last_estimate() const noexcept { return last_estimate_; }

private:
    std::size_t iterations_;
    std::vector<double> last_estimate_;
};

/// An iterate left the representable range (overflowed exp, produced a
/// non-finite working quantity).
class DivergenceError : public FitError {
public:
    using FitError::FitError;
};

/// A parameter search exhausted its feasible range without meeting its
/// target.
class SearchError : public FitError {
public:
    using FitError::FitError;
};

} // namespace gravkit
