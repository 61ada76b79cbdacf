#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gravkit/error.hpp"

namespace gravkit {

/// In-memory numeric dataset: an ordered sequence of uniquely named,
/// equally long columns of doubles.  Missing values are NaN.  Column
/// lengths are enforced on every insertion.
class ColumnTable {
public:
    ColumnTable() = default;

    /// Append a column.  The first column fixes the table's row count;
    /// later columns must match it.  Names must be unique and non-empty.
    void add_column(std::string name, std::vector<double> values) {
        if (name.empty())
            throw NameError("column name must be non-empty");
        if (index_.count(name) != 0)
            throw NameError("duplicate column name '" + name + "'");
        if (columns_.empty()) {
            n_rows_ = values.size();
        } else if (values.size() != n_rows_) {
            throw DataError("column '" + name + "' has " + std::to_string(values.size()) +
                            " rows; table has " + std::to_string(n_rows_));
        }
        index_.emplace(name, columns_.size());
        names_.push_back(std::move(name));
        columns_.push_back(std::move(values));
    }

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_cols() const noexcept { return columns_.size(); }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    /// Column by name; throws NameError for unknown names.
    const std::vector<double>& col(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end())
            throw NameError("unknown column '" + name + "'");
        return columns_[it->second];
    }

    /// Column by position (0-based insertion order).
    const std::vector<double>& col(std::size_t i) const {
        if (i >= columns_.size())
            throw NameError("column index " + std::to_string(i) + " out of range");
        return columns_[i];
    }

    const std::vector<std::string>& names() const noexcept { return names_; }

    /// Free-form provenance note, e.g. "trade.dta (Stata dta format 113,
    /// little-endian)".  Carried along so reports can cite their input.
    const std::string& source() const noexcept { return source_; }
    void set_source(std::string s) { source_ = std::move(s); }

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t n_rows_ = 0;
    std::string source_;
};

/// Bit-pattern equality: distinguishes +0/-0 and treats identical NaN
/// payloads as equal.  This is the right notion for round-trip tests.
inline bool bit_equal(double a, double b) noexcept {
    std::uint64_t ua, ub;
    std::memcpy(&ua, &a, sizeof ua);
    std::memcpy(&ub, &b, sizeof ub);
    return ua == ub;
}

/// Tables are bit-equal when names, order, and every value's bit pattern
/// agree.  Provenance is deliberately ignored.
inline bool bit_equal(const ColumnTable& a, const ColumnTable& b) {
    if (a.n_cols() != b.n_cols() || a.n_rows() != b.n_rows()) return false;
    if (a.names() != b.names()) return false;
    for (std::size_t j = 0; j < a.n_cols(); ++j) {
        const auto& ca = a.col(j);
        const auto& cb = b.col(j);
        for (std::size_t i = 0; i < ca.size(); ++i)
            if (!bit_equal(ca[i], cb[i])) return false;
    }
    return true;
}

} // namespace gravkit
