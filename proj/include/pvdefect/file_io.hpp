#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "error.hpp"

namespace pvdefect {

inline std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw Error(Errc::FileNotFound, path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::FileNotFound, path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_binary_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    const auto b = read_binary_file(path);
    return std::string(b.begin(), b.end());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    write_binary_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace pvdefect
