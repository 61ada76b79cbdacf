#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gravkit/error.hpp"
#include "gravkit/table.hpp"

namespace gravkit {

namespace detail {

/// Shortest decimal form that parses back to the same double
/// (std::to_chars round-trip guarantee).  NaN serializes as "nan".
inline void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

/// Strict full-field parse; returns false on any leftover characters.
inline bool parse_double(std::string_view field, double& out) {
    if (field.empty()) return false;
    auto res = std::from_chars(field.data(), field.data() + field.size(), out);
    return res.ec == std::errc() && res.ptr == field.data() + field.size();
}

inline void split_fields(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

} // namespace detail

/// Write a table as comma-separated text: one header row of column names,
/// then one row per observation, LF line endings, values in shortest
/// round-trip form.  The table must have at least one column.
inline void write_csv(const ColumnTable& table, const std::filesystem::path& path) {
    if (table.n_cols() == 0)
        throw DataError("refusing to write a table with no columns");

    std::string out;
    out.reserve(table.n_rows() * table.n_cols() * 12 + 256);
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        if (j) out.push_back(',');
        out += table.names()[j];
    }
    out.push_back('\n');
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        for (std::size_t j = 0; j < table.n_cols(); ++j) {
            if (j) out.push_back(',');
            detail::append_double(out, table.col(j)[i]);
        }
        out.push_back('\n');
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path.string() + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f)
        throw IoError("short write to '" + path.string() + "'");
}

/// Read a comma-separated numeric file produced by write_csv (or
/// compatible): header row of names, numeric cells ("nan" for missing).
/// Malformed cells raise ParseError citing the 1-based data row and the
/// column name; ragged rows raise FormatError.
inline ColumnTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path.string() + "' for reading");
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (text.empty())
        throw FormatError("'" + path.string() + "' is empty");

    // Iterate lines without copying; tolerate CRLF and a missing final newline.
    std::vector<std::string_view> lines;
    {
        std::string_view rest = text;
        while (!rest.empty()) {
            std::size_t nl = rest.find('\n');
            std::string_view line = (nl == std::string_view::npos) ? rest : rest.substr(0, nl);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.push_back(line);
            if (nl == std::string_view::npos) break;
            rest = rest.substr(nl + 1);
        }
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
    }
    if (lines.empty())
        throw FormatError("'" + path.string() + "' has no header row");

    std::vector<std::string_view> fields;
    detail::split_fields(lines[0], fields);
    std::vector<std::string> names(fields.begin(), fields.end());
    const std::size_t n_cols = names.size();
    const std::size_t n_rows = lines.size() - 1;

    std::vector<std::vector<double>> columns(n_cols);
    for (auto& c : columns) c.reserve(n_rows);

    for (std::size_t r = 1; r <= n_rows; ++r) {
        detail::split_fields(lines[r], fields);
        if (fields.size() != n_cols)
            throw FormatError("row " + std::to_string(r) + " has " +
                              std::to_string(fields.size()) + " fields; header has " +
                              std::to_string(n_cols));
        for (std::size_t j = 0; j < n_cols; ++j) {
            double v;
            if (!detail::parse_double(fields[j], v))
                throw ParseError("cannot parse '" + std::string(fields[j]) +
                                     "' as a number at row " + std::to_string(r) +
                                     ", column '" + names[j] + "'",
                                 r, names[j]);
            columns[j].push_back(v);
        }
    }

    ColumnTable table;
    for (std::size_t j = 0; j < n_cols; ++j)
        table.add_column(std::move(names[j]), std::move(columns[j]));
    table.set_source(path.string() + " (csv)");
    return table;
}

} // namespace gravkit
