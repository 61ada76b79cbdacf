#pragma once

// Shared test scaffolding: fixture paths, a byte-level writer for
// synthetic legacy Stata files, a minimal zip writer, independent
// numeric oracles (Gaussian-elimination least squares, finite-difference
// gradients), and RNG helpers.  The writers are deliberately separate
// implementations of the on-disk layouts — they mirror the format
// documentation, not the readers under test.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <zlib.h>

#include "gravkit/gravkit.hpp"

namespace testsupport {

inline std::filesystem::path fixture_dir() { return std::filesystem::path(GRAVKIT_FIXTURE_DIR); }

inline std::filesystem::path fixture(const std::string& name) { return fixture_dir() / name; }

inline std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& b) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// ---------------------------------------------------------------------------
// Synthetic legacy Stata .dta files (format versions 104-115).

struct DtaColumn {
    std::string name;
    int type; ///< 251 byte, 252 int16, 253 int32, 254 float, 255 double; 1-244 string width
    std::vector<double> values;    ///< numeric columns
    std::vector<std::string> strs; ///< string columns
};

struct DtaSpec {
    int version = 113;
    bool big_endian = false;
    std::string label = "synthetic test file";
    std::string timestamp = "19 Aug 2026 12:00";
    std::vector<DtaColumn> cols;
    std::size_t n_obs = 0;
    bool expansion_record = true; ///< write one nonempty expansion field where supported
};

class ByteWriter {
public:
    explicit ByteWriter(bool big) : big_(big) {}

    std::vector<unsigned char> take() { return std::move(buf_); }

    void u8(std::uint8_t v) { buf_.push_back(v); }

    void i16(std::int16_t v) { uint_bytes(static_cast<std::uint16_t>(v), 2); }
    void i32(std::int32_t v) { uint_bytes(static_cast<std::uint32_t>(v), 4); }

    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        uint_bytes(bits, 4);
    }

    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        uint_bytes(bits, 8);
    }

    /// NUL-padded fixed-width text field.
    void zstring(const std::string& s, std::size_t width) {
        for (std::size_t i = 0; i < width; ++i) buf_.push_back(i < s.size() ? s[i] : '\0');
    }

    void zeros(std::size_t n) { buf_.insert(buf_.end(), n, 0); }

private:
    void uint_bytes(std::uint64_t v, std::size_t n) {
        if (big_)
            for (std::size_t i = n; i-- > 0;) buf_.push_back((v >> (8 * i)) & 0xff);
        else
            for (std::size_t i = 0; i < n; ++i) buf_.push_back((v >> (8 * i)) & 0xff);
    }

    std::vector<unsigned char> buf_;
    bool big_;
};

/// Serialize a synthetic dataset following the documented legacy layout:
/// header (version, byte order, file type, counts, label, timestamp),
/// then typlist / varlist / srtlist / fmtlist / lbllist / variable
/// labels, optional expansion fields, and row-major data.
inline std::vector<unsigned char> build_dta(const DtaSpec& spec) {
    const int v = spec.version;
    ByteWriter w(spec.big_endian);

    w.u8(static_cast<std::uint8_t>(v));
    w.u8(spec.big_endian ? 1 : 2);
    w.u8(1); // file type
    w.u8(0); // unused
    w.i16(static_cast<std::int16_t>(spec.cols.size()));
    w.i32(static_cast<std::int32_t>(spec.n_obs));
    w.zstring(spec.label, v >= 108 ? 81 : 32);
    if (v >= 105) w.zstring(spec.timestamp, 18);

    const std::size_t name_len = v >= 110 ? 33 : 9;
    const std::size_t fmt_len = v >= 114 ? 49 : (v >= 105 ? 12 : 7);
    const std::size_t vlabel_len = v >= 108 ? 81 : 32;

    for (const auto& c : spec.cols) {
        if (v >= 111) {
            w.u8(static_cast<std::uint8_t>(c.type));
        } else if (c.type >= 251) {
            static const char code[] = {'b', 'i', 'l', 'f', 'd'};
            w.u8(static_cast<std::uint8_t>(code[c.type - 251]));
        } else {
            w.u8(static_cast<std::uint8_t>(0x80 + c.type)); // strN
        }
    }
    for (const auto& c : spec.cols) w.zstring(c.name, name_len);
    w.zeros(2 * (spec.cols.size() + 1));                       // srtlist
    for (std::size_t j = 0; j < spec.cols.size(); ++j) w.zstring("%9.0g", fmt_len);
    for (std::size_t j = 0; j < spec.cols.size(); ++j) w.zeros(name_len);   // lbllist
    for (std::size_t j = 0; j < spec.cols.size(); ++j) w.zeros(vlabel_len); // var labels

    if (v >= 105) {
        if (spec.expansion_record) {
            w.u8(1);
            if (v >= 110)
                w.i32(3);
            else
                w.i16(3);
            w.zstring("abc", 3);
        }
        w.u8(0); // terminator record: zero type, zero length
        if (v >= 110)
            w.i32(0);
        else
            w.i16(0);
    }

    for (std::size_t i = 0; i < spec.n_obs; ++i) {
        for (const auto& c : spec.cols) {
            switch (c.type) {
                case 251: w.u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(c.values[i]))); break;
                case 252: w.i16(static_cast<std::int16_t>(c.values[i])); break;
                case 253: w.i32(static_cast<std::int32_t>(c.values[i])); break;
                case 254: w.f32(static_cast<float>(c.values[i])); break;
                case 255: w.f64(c.values[i]); break;
                default: w.zstring(c.strs[i], static_cast<std::size_t>(c.type)); break;
            }
        }
    }
    return w.take();
}

/// Five numeric columns (one per storage type) plus one str3 column, and
/// a last row made entirely of the per-version missing sentinels.
inline DtaSpec standard_dta_spec(int version, bool big_endian) {
    const bool new_ranges = version >= 113;
    const double miss_b = new_ranges ? 101.0 : 127.0;
    const double miss_i = new_ranges ? 32741.0 : 32767.0;
    const double miss_l = new_ranges ? 2147483621.0 : 2147483647.0;
    const double miss_f = 1.7014118346046923e38; // 2^127
    const double miss_d = 8.98846567431158e307;  // 2^1023

    DtaSpec spec;
    spec.version = version;
    spec.big_endian = big_endian;
    spec.n_obs = 4;
    spec.cols = {
        {"vb", 251, {-5, 17, 99, miss_b}, {}},
        {"vi", 252, {300, -12, 32740, miss_i}, {}},
        {"vl", 253, {70000, -100000, 2147483620, miss_l}, {}},
        {"vf", 254, {1.5, -0.0, 3.0, miss_f}, {}},
        {"vd", 255, {2.25, 1e10, -4.5, miss_d}, {}},
        {"vs", 3, {}, {"ab", "cde", "", "x"}},
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Minimal zip writer (stored and deflated members, correct CRCs).

struct ZipEntrySpec {
    std::string name;
    std::vector<unsigned char> data;
    bool deflate = true;
};

namespace zipdetail {

inline void u16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
}

inline void u32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

inline std::vector<unsigned char> deflate_raw(const std::vector<unsigned char>& in) {
    z_stream zs{};
    deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY);
    std::vector<unsigned char> out(deflateBound(&zs, static_cast<uLong>(in.size())));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    return out;
}

} // namespace zipdetail

inline std::vector<unsigned char> build_zip(const std::vector<ZipEntrySpec>& entries) {
    using namespace zipdetail;
    std::vector<unsigned char> out;
    struct Central {
        std::string name;
        std::uint16_t method;
        std::uint32_t crc, csize, usize, offset;
    };
    std::vector<Central> centrals;

    for (const auto& e : entries) {
        const std::uint32_t crc = static_cast<std::uint32_t>(
            ::crc32(0L, e.data.empty() ? Z_NULL : e.data.data(), static_cast<uInt>(e.data.size())));
        std::vector<unsigned char> payload = e.deflate ? deflate_raw(e.data) : e.data;
        const std::uint16_t method = e.deflate ? 8 : 0;
        const std::uint32_t offset = static_cast<std::uint32_t>(out.size());

        u32(out, 0x04034b50);
        u16(out, 20);     // version needed
        u16(out, 0);      // flags
        u16(out, method);
        u16(out, 0);      // mod time
        u16(out, 0);      // mod date
        u32(out, crc);
        u32(out, static_cast<std::uint32_t>(payload.size()));
        u32(out, static_cast<std::uint32_t>(e.data.size()));
        u16(out, static_cast<std::uint16_t>(e.name.size()));
        u16(out, 0); // extra len
        out.insert(out.end(), e.name.begin(), e.name.end());
        out.insert(out.end(), payload.begin(), payload.end());

        centrals.push_back({e.name, method, crc, static_cast<std::uint32_t>(payload.size()),
                            static_cast<std::uint32_t>(e.data.size()), offset});
    }

    const std::uint32_t cd_offset = static_cast<std::uint32_t>(out.size());
    for (const auto& c : centrals) {
        u32(out, 0x02014b50);
        u16(out, 20); // version made by
        u16(out, 20); // version needed
        u16(out, 0);  // flags
        u16(out, c.method);
        u16(out, 0); // mod time
        u16(out, 0); // mod date
        u32(out, c.crc);
        u32(out, c.csize);
        u32(out, c.usize);
        u16(out, static_cast<std::uint16_t>(c.name.size()));
        u16(out, 0); // extra
        u16(out, 0); // comment
        u16(out, 0); // disk number
        u16(out, 0); // internal attrs
        u32(out, 0); // external attrs
        u32(out, c.offset);
        out.insert(out.end(), c.name.begin(), c.name.end());
    }
    const std::uint32_t cd_size = static_cast<std::uint32_t>(out.size()) - cd_offset;

    u32(out, 0x06054b50);
    u16(out, 0); // this disk
    u16(out, 0); // cd disk
    u16(out, static_cast<std::uint16_t>(centrals.size()));
    u16(out, static_cast<std::uint16_t>(centrals.size()));
    u32(out, cd_size);
    u32(out, cd_offset);
    u16(out, 0); // comment length
    return out;
}

// ---------------------------------------------------------------------------
// Independent numeric oracles.

/// Weighted least squares the slow, direct way: form the normal
/// equations XᵀWX·b = XᵀWy and solve them by Gaussian elimination with
/// partial pivoting.  Entirely separate from the QR path under test.
inline std::vector<double> normal_equations_wls(const gravkit::Matrix& X,
                                                const std::vector<double>& y,
                                                const std::vector<double>& w) {
    const std::size_t n = X.rows(), p = X.cols();
    std::vector<std::vector<double>> A(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) A[a][b] += w[i] * X(i, a) * X(i, b);
            A[a][p] += w[i] * X(i, a) * y[i];
        }
    for (std::size_t k = 0; k < p; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < p; ++r)
            if (std::fabs(A[r][k]) > std::fabs(A[piv][k])) piv = r;
        std::swap(A[k], A[piv]);
        for (std::size_t r = k + 1; r < p; ++r) {
            const double f = A[r][k] / A[k][k];
            for (std::size_t c = k; c <= p; ++c) A[r][c] -= f * A[k][c];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t i = p; i-- > 0;) {
        double s = A[i][p];
        for (std::size_t k = i + 1; k < p; ++k) s -= A[i][k] * beta[k];
        beta[i] = s / A[i][i];
    }
    return beta;
}

/// Central finite-difference gradient of the censored-model
/// log-likelihood — the oracle for the analytic scores.
inline std::vector<double> fd_tobit_gradient(const gravkit::TobitProblem& pr,
                                             const std::vector<double>& theta,
                                             double h = 1e-6) {
    std::vector<double> grad(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
        std::vector<double> up = theta, dn = theta;
        up[j] += h;
        dn[j] -= h;
        grad[j] = (gravkit::tobit_loglik(pr, up) - gravkit::tobit_loglik(pr, dn)) / (2.0 * h);
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Random problem generators.

/// Design with an intercept and p-1 uniform(-2, 2) regressors.
inline gravkit::DesignMatrix random_design(std::mt19937_64& rng, std::size_t n, std::size_t p) {
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    gravkit::DesignMatrix d;
    d.X = gravkit::Matrix(n, p);
    d.y.assign(n, 0.0);
    d.names.push_back("(Intercept)");
    for (std::size_t j = 1; j < p; ++j) d.names.push_back("x" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        d.X(i, 0) = 1.0;
        for (std::size_t j = 1; j < p; ++j) d.X(i, j) = unif(rng);
    }
    return d;
}

/// Censored-regression problem with roughly a third of rows at the bound.
inline gravkit::TobitProblem random_tobit_problem(std::mt19937_64& rng, std::size_t n = 60,
                                                  std::size_t p = 3) {
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    gravkit::DesignMatrix d = random_design(rng, n, p);
    std::vector<double> beta(p);
    for (auto& b : beta) b = coef(rng);
    const double bound = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < p; ++j) eta += d.X(i, j) * beta[j];
        const double latent = eta + noise(rng);
        d.y[i] = latent > bound ? latent : bound;
    }
    return gravkit::TobitProblem(std::move(d), bound);
}

} // namespace testsupport
