#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "gravkit/error.hpp"
#include "gravkit/fsio.hpp"
#include "gravkit/table.hpp"

namespace gravkit {

/// Header metadata of a legacy Stata .dta file (format versions
/// 104–115).  var_types holds normalized storage codes: 251 byte,
/// 252 int16, 253 int32, 254 float, 255 double; 1–244 a string of that
/// width.
struct DtaFileInfo {
    int format_version = 0;
    bool little_endian = true;
    int n_vars = 0;
    long long n_obs = 0;
    std::string data_label;
    std::string timestamp;
    std::vector<std::string> var_names;
    std::vector<int> var_types;
};

namespace detail {

class ByteReader {
public:
    explicit ByteReader(const std::vector<unsigned char>& buf) : buf_(buf) {}

    void set_little_endian(bool le) { little_ = le; }
    std::size_t offset() const noexcept { return pos_; }

    void require(std::size_t n) const {
        if (pos_ + n > buf_.size())
            throw TruncationError("unexpected end of file at byte offset " +
                                      std::to_string(pos_) + " (needed " + std::to_string(n) +
                                      " more bytes)",
                                  pos_);
    }

    std::uint8_t u8() {
        require(1);
        return buf_[pos_++];
    }

    void skip(std::size_t n) {
        require(n);
        pos_ += n;
    }

    std::int16_t i16() { return static_cast<std::int16_t>(load(2)); }
    std::int32_t i32() { return static_cast<std::int32_t>(load(4)); }

    float f32() {
        const std::uint32_t bits = static_cast<std::uint32_t>(load(4));
        float v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    double f64() {
        const std::uint64_t bits = load(8);
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    /// Fixed-width field holding a NUL-terminated string.
    std::string zstring(std::size_t width) {
        require(width);
        const char* start = reinterpret_cast<const char*>(buf_.data() + pos_);
        std::size_t len = 0;
        while (len < width && start[len] != '\0') ++len;
        pos_ += width;
        return std::string(start, len);
    }

private:
    std::uint64_t load(std::size_t n) {
        require(n);
        std::uint64_t v = 0;
        if (little_) {
            for (std::size_t i = n; i-- > 0;) v = (v << 8) | buf_[pos_ + i];
        } else {
            for (std::size_t i = 0; i < n; ++i) v = (v << 8) | buf_[pos_ + i];
        }
        pos_ += n;
        // Sign-extend via the caller's cast; for i16/i32 the cast through
        // the sized signed type does the right thing.
        if (n == 2) v = static_cast<std::uint16_t>(v);
        if (n == 4) v = static_cast<std::uint32_t>(v);
        return v;
    }

    const std::vector<unsigned char>& buf_;
    std::size_t pos_ = 0;
    bool little_ = true;
};

/// Parse the header and descriptor blocks, leaving the reader positioned
/// at the first data row.
inline DtaFileInfo read_dta_header(ByteReader& r) {
    DtaFileInfo info;
    const int version = r.u8();
    if (version < 104 || version > 115) {
        std::string hint = version == '<'
                               ? "; this looks like a modern XML-framed file — export it "
                                 "to CSV and use the CSV reader instead"
                               : "; supported versions are 104-115 — export the file to "
                                 "CSV and use the CSV reader instead";
        throw UnsupportedFormatError(
            "unsupported .dta format version byte " + std::to_string(version) + hint, version);
    }
    info.format_version = version;

    const int byteorder = r.u8();
    if (byteorder == 1)
        info.little_endian = false;
    else if (byteorder == 2)
        info.little_endian = true;
    else
        throw FormatError("bad byte-order marker " + std::to_string(byteorder) +
                          " (expected 1 or 2)");
    r.set_little_endian(info.little_endian);

    const int filetype = r.u8();
    if (filetype != 1)
        throw FormatError("bad file-type byte " + std::to_string(filetype) + " (expected 1)");
    r.skip(1); // unused

    info.n_vars = r.i16();
    info.n_obs = r.i32();
    if (info.n_vars < 0 || info.n_obs < 0)
        throw FormatError("negative variable or observation count in header");

    info.data_label = r.zstring(version >= 108 ? 81 : 32);
    if (version >= 105) info.timestamp = r.zstring(18);

    // Field widths by format generation.
    const std::size_t name_len = version >= 110 ? 33 : 9;
    const std::size_t fmt_len = version >= 114 ? 49 : (version >= 105 ? 12 : 7);
    const std::size_t vlabel_len = version >= 108 ? 81 : 32;
    const std::size_t nvar = static_cast<std::size_t>(info.n_vars);

    info.var_types.reserve(nvar);
    for (std::size_t j = 0; j < nvar; ++j) {
        const int t = r.u8();
        int code;
        if (version >= 111) {
            // 251-255 numeric, 1-244 string width.
            if (t >= 251 && t <= 255)
                code = t;
            else if (t >= 1 && t <= 244)
                code = t;
            else
                throw FormatError("unknown storage type code " + std::to_string(t) +
                                  " for variable " + std::to_string(j));
        } else {
            // Character codes; strings are 0x80 + width.
            switch (t) {
                case 'b': code = 251; break;
                case 'i': code = 252; break;
                case 'l': code = 253; break;
                case 'f': code = 254; break;
                case 'd': code = 255; break;
                default:
                    if (t > 128 && t <= 128 + 244)
                        code = t - 128;
                    else
                        throw FormatError("unknown storage type code " + std::to_string(t) +
                                          " for variable " + std::to_string(j));
            }
        }
        info.var_types.push_back(code);
    }

    info.var_names.reserve(nvar);
    for (std::size_t j = 0; j < nvar; ++j) info.var_names.push_back(r.zstring(name_len));

    r.skip(2 * (nvar + 1));       // srtlist
    r.skip(nvar * fmt_len);       // fmtlist
    r.skip(nvar * name_len);      // lbllist
    r.skip(nvar * vlabel_len);    // variable labels

    // Expansion fields: (type byte, length, payload) records terminated
    // by a zero type.  104 predates them entirely.
    if (version >= 105) {
        for (int guard = 0; ; ++guard) {
            if (guard > 100000)
                throw FormatError("runaway expansion-field list");
            const int type = r.u8();
            const long long len = version >= 110 ? static_cast<long long>(r.i32())
                                                 : static_cast<long long>(r.i16());
            if (type == 0) break;
            if (len < 0)
                throw FormatError("negative expansion-field length");
            r.skip(static_cast<std::size_t>(len));
        }
    }
    return info;
}

} // namespace detail

/// Read only the header and variable descriptors of a .dta file.
inline DtaFileInfo read_dta_info(const std::filesystem::path& path) {
    const auto buf = detail::load_file(path);
    detail::ByteReader r(buf);
    return detail::read_dta_header(r);
}

/// Read a legacy Stata .dta file (formats 104–115, either byte order)
/// into a ColumnTable.  Numeric storage types are widened to double;
/// Stata missing-value sentinels become NaN; string variables are
/// skipped (the table is numeric).  The table's provenance records the
/// sniffed format version and byte order.
inline ColumnTable read_dta(const std::filesystem::path& path) {
    const auto buf = detail::load_file(path);
    detail::ByteReader r(buf);
    const DtaFileInfo info = detail::read_dta_header(r);

    // Missing-value sentinels: anything above the per-type threshold.
    // Format 113 tightened the integer ranges to make room for extended
    // missing codes (.a-.z).
    const bool new_ranges = info.format_version >= 113;
    const double byte_max = new_ranges ? 100.0 : 126.0;
    const double int_max = new_ranges ? 32740.0 : 32766.0;
    const double long_max = new_ranges ? 2147483620.0 : 2147483646.0;
    const double float_max = 1.701e38;
    const double double_max = 8.988e307;

    const std::size_t nvar = static_cast<std::size_t>(info.n_vars);
    const std::size_t nobs = static_cast<std::size_t>(info.n_obs);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<std::vector<double>> columns(nvar);
    for (std::size_t j = 0; j < nvar; ++j)
        if (info.var_types[j] >= 251) columns[j].reserve(nobs);

    for (std::size_t i = 0; i < nobs; ++i) {
        for (std::size_t j = 0; j < nvar; ++j) {
            const int t = info.var_types[j];
            switch (t) {
                case 251: {
                    const double v = static_cast<double>(static_cast<std::int8_t>(r.u8()));
                    columns[j].push_back(v > byte_max ? nan : v);
                    break;
                }
                case 252: {
                    const double v = static_cast<double>(r.i16());
                    columns[j].push_back(v > int_max ? nan : v);
                    break;
                }
                case 253: {
                    const double v = static_cast<double>(r.i32());
                    columns[j].push_back(v > long_max ? nan : v);
                    break;
                }
                case 254: {
                    const double v = static_cast<double>(r.f32());
                    columns[j].push_back(v > float_max ? nan : v);
                    break;
                }
                case 255: {
                    const double v = r.f64();
                    columns[j].push_back(v > double_max ? nan : v);
                    break;
                }
                default: // string payload: skip, strings are not loaded
                    r.skip(static_cast<std::size_t>(t));
                    break;
            }
        }
    }
    // Value-label tables may follow the data; they are irrelevant here.

    ColumnTable table;
    for (std::size_t j = 0; j < nvar; ++j)
        if (info.var_types[j] >= 251)
            table.add_column(info.var_names[j], std::move(columns[j]));
    table.set_source(path.string() + " (Stata dta format " +
                     std::to_string(info.format_version) +
                     (info.little_endian ? ", little-endian)" : ", big-endian)"));
    return table;
}

} // namespace gravkit
