#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "gravkit/error.hpp"
#include "gravkit/fsio.hpp"

// The HTTP client is only pulled in by fetch_archive; everything else in
// this header works offline.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace gravkit {

struct ZipMemberInfo {
    std::string name;
    std::uint16_t method = 0;
    std::uint32_t crc32 = 0;
    std::uint64_t compressed_size = 0;
    std::uint64_t uncompressed_size = 0;
    std::uint64_t local_header_offset = 0;
    bool is_directory = false;
};

namespace detail {

inline std::uint16_t zip_u16(const std::vector<unsigned char>& b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline std::uint32_t zip_u32(const std::vector<unsigned char>& b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) |
           (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

/// Inflate a raw (headerless) deflate stream of known output size.
inline std::vector<unsigned char> inflate_raw(const unsigned char* in, std::size_t in_len,
                                              std::size_t out_len) {
    std::vector<unsigned char> out(out_len);
    if (out_len == 0) return out;
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK)
        throw Error("zlib: inflateInit2 failed");
    zs.next_in = const_cast<Bytef*>(in);
    zs.avail_in = static_cast<uInt>(in_len);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out_len);
    const int rc = inflate(&zs, Z_FINISH);
    const auto total = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || total != out_len)
        throw FormatError("deflate stream is corrupt or disagrees with the recorded size");
    return out;
}

/// Reject names that could escape the destination directory.
inline void check_member_name(const std::string& name) {
    if (name.empty() || name.front() == '/' || name.find('\\') != std::string::npos)
        throw FormatError("archive member has an unsafe name: '" + name + "'");
    std::size_t start = 0;
    while (start <= name.size()) {
        const std::size_t slash = name.find('/', start);
        const std::string part =
            name.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
        if (part == "..")
            throw FormatError("archive member path escapes the archive: '" + name + "'");
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
}

} // namespace detail

/// Parse a zip file's central directory.  Multi-disk archives, encrypted
/// members, and zip64 extensions are rejected as format errors.
inline std::vector<ZipMemberInfo> list_zip(const std::vector<unsigned char>& buf) {
    constexpr std::uint32_t eocd_sig = 0x06054b50;
    constexpr std::uint32_t cdir_sig = 0x02014b50;
    if (buf.size() < 22)
        throw TruncationError("file is too small to be a zip archive", buf.size());

    // End-of-central-directory record: scan backwards over the comment.
    std::size_t eocd = std::string::npos;
    const std::size_t lowest = buf.size() >= 22 + 65535 ? buf.size() - 22 - 65535 : 0;
    for (std::size_t at = buf.size() - 22 + 1; at-- > lowest;) {
        if (detail::zip_u32(buf, at) == eocd_sig &&
            at + 22 + detail::zip_u16(buf, at + 20) == buf.size()) {
            eocd = at;
            break;
        }
    }
    if (eocd == std::string::npos)
        throw FormatError("zip end-of-central-directory record not found");

    if (detail::zip_u16(buf, eocd + 4) != 0 || detail::zip_u16(buf, eocd + 6) != 0)
        throw FormatError("multi-disk zip archives are not supported");
    const std::size_t n_entries = detail::zip_u16(buf, eocd + 10);
    if (detail::zip_u16(buf, eocd + 8) != n_entries)
        throw FormatError("inconsistent zip entry counts");
    const std::size_t cd_offset = detail::zip_u32(buf, eocd + 16);
    if (cd_offset == 0xffffffffu || n_entries == 0xffff)
        throw FormatError("zip64 archives are not supported");

    std::vector<ZipMemberInfo> members;
    members.reserve(n_entries);
    std::size_t at = cd_offset;
    for (std::size_t e = 0; e < n_entries; ++e) {
        if (at + 46 > buf.size())
            throw TruncationError("truncated zip central directory", at);
        if (detail::zip_u32(buf, at) != cdir_sig)
            throw FormatError("bad zip central-directory signature");
        ZipMemberInfo m;
        const std::uint16_t flags = detail::zip_u16(buf, at + 8);
        if (flags & 0x1)
            throw FormatError("encrypted zip members are not supported");
        m.method = detail::zip_u16(buf, at + 10);
        m.crc32 = detail::zip_u32(buf, at + 16);
        m.compressed_size = detail::zip_u32(buf, at + 20);
        m.uncompressed_size = detail::zip_u32(buf, at + 24);
        const std::size_t name_len = detail::zip_u16(buf, at + 28);
        const std::size_t extra_len = detail::zip_u16(buf, at + 30);
        const std::size_t comment_len = detail::zip_u16(buf, at + 32);
        m.local_header_offset = detail::zip_u32(buf, at + 42);
        if (m.compressed_size == 0xffffffffu || m.uncompressed_size == 0xffffffffu ||
            m.local_header_offset == 0xffffffffu)
            throw FormatError("zip64 archives are not supported");
        if (at + 46 + name_len > buf.size())
            throw TruncationError("truncated zip member name", at + 46);
        m.name.assign(reinterpret_cast<const char*>(buf.data() + at + 46), name_len);
        detail::check_member_name(m.name);
        m.is_directory = !m.name.empty() && m.name.back() == '/';
        members.push_back(std::move(m));
        at += 46 + name_len + extra_len + comment_len;
    }
    return members;
}

/// Decompress one member and verify its CRC-32.
inline std::vector<unsigned char> read_zip_member(const std::vector<unsigned char>& buf,
                                                  const ZipMemberInfo& m) {
    constexpr std::uint32_t local_sig = 0x04034b50;
    const std::size_t at = static_cast<std::size_t>(m.local_header_offset);
    if (at + 30 > buf.size())
        throw TruncationError("truncated zip local header", at);
    if (detail::zip_u32(buf, at) != local_sig)
        throw FormatError("bad zip local-header signature for '" + m.name + "'");
    const std::size_t name_len = detail::zip_u16(buf, at + 26);
    const std::size_t extra_len = detail::zip_u16(buf, at + 28);
    const std::size_t data_at = at + 30 + name_len + extra_len;
    if (data_at + m.compressed_size > buf.size())
        throw TruncationError("truncated zip member data for '" + m.name + "'", data_at);

    std::vector<unsigned char> out;
    if (m.method == 0) {
        if (m.compressed_size != m.uncompressed_size)
            throw FormatError("stored zip member '" + m.name + "' has inconsistent sizes");
        out.assign(buf.begin() + static_cast<std::ptrdiff_t>(data_at),
                   buf.begin() + static_cast<std::ptrdiff_t>(data_at + m.compressed_size));
    } else if (m.method == 8) {
        out = detail::inflate_raw(buf.data() + data_at,
                                  static_cast<std::size_t>(m.compressed_size),
                                  static_cast<std::size_t>(m.uncompressed_size));
    } else {
        throw FormatError("unsupported zip compression method " + std::to_string(m.method) +
                          " for '" + m.name + "'");
    }

    const auto crc =
        ::crc32(0L, out.empty() ? Z_NULL : out.data(), static_cast<uInt>(out.size()));
    if (static_cast<std::uint32_t>(crc) != m.crc32)
        throw FormatError("CRC mismatch extracting '" + m.name + "' — the archive is corrupt");
    return out;
}

/// Extract every file member of a zip archive under dest_dir; returns
/// the extracted paths in archive order.
inline std::vector<std::filesystem::path> extract_zip(const std::filesystem::path& zip_path,
                                                      const std::filesystem::path& dest_dir) {
    std::vector<unsigned char> buf = detail::load_file(zip_path);
    const auto members = list_zip(buf);
    std::vector<std::filesystem::path> out_paths;
    std::filesystem::create_directories(dest_dir);
    for (const auto& m : members) {
        if (m.is_directory) continue;
        const auto data = read_zip_member(buf, m);
        const std::filesystem::path out_path = dest_dir / m.name;
        if (out_path.has_parent_path())
            std::filesystem::create_directories(out_path.parent_path());
        std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
        if (!f)
            throw IoError("cannot open '" + out_path.string() + "' for writing");
        f.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size()));
        if (!f)
            throw IoError("short write to '" + out_path.string() + "'");
        out_paths.push_back(out_path);
    }
    return out_paths;
}

namespace detail {

struct ParsedUrl {
    std::string scheme_host_port; ///< e.g. "https://example.org:8443"
    std::string request_path;     ///< e.g. "/dir/file.zip"
    std::string basename;         ///< e.g. "file.zip"
};

inline ParsedUrl parse_http_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw DataError("not an http(s) URL: '" + url + "'");
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw DataError("unsupported URL scheme '" + scheme + "' (need http or https)");
    const std::size_t host_start = scheme_end + 3;
    const std::size_t path_start = url.find('/', host_start);
    ParsedUrl p;
    if (path_start == std::string::npos) {
        p.scheme_host_port = url;
        p.request_path = "/";
    } else {
        p.scheme_host_port = url.substr(0, path_start);
        p.request_path = url.substr(path_start);
    }
    if (p.scheme_host_port.size() == host_start)
        throw DataError("URL has no host: '" + url + "'");
    const std::size_t last_slash = p.request_path.rfind('/');
    p.basename = p.request_path.substr(last_slash + 1);
    if (p.basename.empty()) p.basename = "archive.zip";
    return p;
}

} // namespace detail

/// Download a zip archive (unless it is already present in dest_dir),
/// extract it, and return the path of the .dta member.  The download is
/// skipped whenever dest_dir already contains a file with the archive's
/// basename, so a second call needs no network at all.
inline std::filesystem::path fetch_archive(const std::string& url,
                                           const std::filesystem::path& dest_dir) {
    const auto parsed = detail::parse_http_url(url);
    std::filesystem::create_directories(dest_dir);
    const std::filesystem::path zip_path = dest_dir / parsed.basename;

    if (!std::filesystem::exists(zip_path)) {
        httplib::Client client(parsed.scheme_host_port);
        client.set_follow_location(true);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        auto res = client.Get(parsed.request_path);
        if (!res)
            throw NetworkError("request to '" + url + "' failed: " + httplib::to_string(res.error()),
                               url, /*retryable=*/true);
        if (res->status != 200)
            throw NetworkError("'" + url + "' returned HTTP " + std::to_string(res->status),
                               url, /*retryable=*/res->status >= 500);
        const std::filesystem::path tmp_path = zip_path.string() + ".part";
        {
            std::ofstream f(tmp_path, std::ios::binary | std::ios::trunc);
            if (!f)
                throw IoError("cannot open '" + tmp_path.string() + "' for writing");
            f.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
            if (!f)
                throw IoError("short write to '" + tmp_path.string() + "'");
        }
        std::filesystem::rename(tmp_path, zip_path);
    }

    const auto extracted = extract_zip(zip_path, dest_dir);
    for (const auto& p : extracted) {
        std::string ext = p.extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".dta") return p;
    }
    throw MissingMemberError("archive '" + zip_path.string() + "' contains no .dta member");
}

} // namespace gravkit
