#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include "gravkit/error.hpp"

namespace gravkit::detail {

/// Slurp a whole file as bytes; IoError if it cannot be opened.
inline std::vector<unsigned char> load_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path.string() + "' for reading");
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(f)),
                                      std::istreambuf_iterator<char>());
}

} // namespace gravkit::detail
