#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "file_io.hpp"
#include "image.hpp"

namespace pvdefect {

namespace detail {

inline bool is_png(const std::vector<std::uint8_t>& b) {
    static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

inline ImageU8 decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw Error(Errc::CorruptImage, name + ": " + image.message);
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw Error(Errc::UnsupportedFormat, name + ": 16-bit PNG is not supported");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    image.format = (color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) | (alpha ? PNG_FORMAT_FLAG_ALPHA : 0u);
    const int in_ch = static_cast<int>(PNG_IMAGE_SAMPLE_CHANNELS(image.format));
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw Error(Errc::CorruptImage, name + ": " + msg);
    }
    const int w = static_cast<int>(image.width), h = static_cast<int>(image.height);
    const int out_ch = color ? 3 : 1;
    if (in_ch == out_ch) return ImageU8(w, h, out_ch, std::move(buf));
    std::vector<std::uint8_t> stripped(static_cast<std::size_t>(w) * h * out_ch);
    for (std::size_t p = 0, n = static_cast<std::size_t>(w) * h; p < n; ++p)
        for (int c = 0; c < out_ch; ++c) stripped[p * out_ch + c] = buf[p * in_ch + c];
    return ImageU8(w, h, out_ch, std::move(stripped));
}

// Binary PGM (P5) / PPM (P6), maxval 255 only.
inline ImageU8 decode_pnm(const std::vector<std::uint8_t>& b, const std::string& name) {
    std::size_t pos = 2;
    auto skip_ws = [&] {
        while (pos < b.size()) {
            if (b[pos] == '#') {
                while (pos < b.size() && b[pos] != '\n') ++pos;
            } else if (b[pos] == ' ' || b[pos] == '\t' || b[pos] == '\r' || b[pos] == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&] {
        skip_ws();
        long v = 0;
        int digits = 0;
        while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
            v = v * 10 + (b[pos] - '0');
            if (v > 1'000'000) throw Error(Errc::CorruptImage, name + ": header value too large");
            ++pos;
            ++digits;
        }
        if (digits == 0) throw Error(Errc::CorruptImage, name + ": malformed PNM header");
        return static_cast<int>(v);
    };
    const int channels = b[1] == '5' ? 1 : 3;
    const int w = read_int();
    const int h = read_int();
    const int maxval = read_int();
    if (maxval != 255) throw Error(Errc::UnsupportedFormat, name + ": PNM maxval must be 255");
    if (w < 1 || h < 1) throw Error(Errc::CorruptImage, name + ": zero-sized PNM");
    if (pos >= b.size()) throw Error(Errc::CorruptImage, name + ": missing raster");
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h * channels;
    if (b.size() - pos < need) throw Error(Errc::CorruptImage, name + ": truncated raster");
    return ImageU8(w, h, channels, std::vector<std::uint8_t>(b.begin() + pos, b.begin() + pos + need));
}

inline std::vector<std::uint8_t> encode_png(const ImageU8& img) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(image, size, 0, img.data().data(), 0, nullptr))
        throw Error(Errc::IoError, std::string("PNG encode failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data().data(), 0, nullptr))
        throw Error(Errc::IoError, std::string("PNG encode failed: ") + image.message);
    out.resize(size);
    return out;
}

inline std::vector<std::uint8_t> encode_pnm(const ImageU8& img) {
    const std::string header = std::string(img.channels() == 1 ? "P5" : "P6") + "\n" +
                                std::to_string(img.width()) + " " + std::to_string(img.height()) +
                                "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data().begin(), img.data().end());
    return out;
}

}  // namespace detail

/// Decodes PNG (8-bit gray/RGB, alpha dropped) or binary PGM/PPM from memory.
inline ImageU8 decode_image(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>") {
    if (detail::is_png(bytes)) return detail::decode_png(bytes, name);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
        return detail::decode_pnm(bytes, name);
    // A truncated PNG signature is still recognisably a PNG stream.
    static constexpr std::uint8_t sig[4] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), sig, 4) == 0)
        throw Error(Errc::CorruptImage, name + ": truncated PNG signature");
    throw Error(Errc::UnsupportedFormat, name + ": not a PNG, PGM (P5) or PPM (P6) file");
}

inline ImageU8 load_image(const std::filesystem::path& path) {
    return decode_image(read_binary_file(path), path.string());
}

/// Writes PNG unless the extension is .pgm/.ppm (binary PNM).
inline void save_image(const ImageU8& img, const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".pgm" || ext == ".ppm") {
        require((ext == ".pgm") == (img.channels() == 1), Errc::ChannelMismatch,
                "PGM holds gray images, PPM holds RGB images");
        write_binary_file(path, detail::encode_pnm(img));
    } else {
        write_binary_file(path, detail::encode_png(img));
    }
}

}  // namespace pvdefect
