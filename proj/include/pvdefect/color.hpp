#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "image.hpp"

namespace pvdefect {

/// BT.601 luma: gray = round(0.299 R + 0.587 G + 0.114 B). A gray input is returned unchanged.
inline ImageU8 to_gray(const ImageU8& img) {
    if (img.channels() == 1) return img;
    ImageU8 out(img.width(), img.height(), 1);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double y = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
        dst[i] = saturate_u8(y);
    }
    return out;
}

/// Replicates a gray plane into three identical channels.
inline ImageU8 gray_to_rgb(const ImageU8& img) {
    require(img.channels() == 1, Errc::ChannelMismatch, "gray_to_rgb expects 1 channel");
    ImageU8 out(img.width(), img.height(), 3);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
    return out;
}

namespace detail {

// sRGB primaries, D65 white.
inline constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
inline constexpr double kXyzToRgb[3][3] = {
    {3.2404542, -1.5371385, -0.4985314},
    {-0.9692660, 1.8760108, 0.0415560},
    {0.0556434, -0.2040259, 1.0572252},
};
inline constexpr double kWhiteX = kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2];
inline constexpr double kWhiteY = kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2];
inline constexpr double kWhiteZ = kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2];

inline constexpr double kLabEps = 216.0 / 24389.0;  // (6/29)^3
inline constexpr double kLabKappa = 24389.0 / 27.0;

inline const std::array<double, 256>& srgb_to_linear_lut() {
    static const std::array<double, 256> lut = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) {
            const double c = i / 255.0;
            t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
        }
        return t;
    }();
    return lut;
}

inline double linear_to_srgb(double c) {
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

inline double lab_f(double t) { return t > kLabEps ? std::cbrt(t) : (kLabKappa * t + 16.0) / 116.0; }

inline double lab_f_inv(double f) {
    const double f3 = f * f * f;
    return f3 > kLabEps ? f3 : (116.0 * f - 16.0) / kLabKappa;
}

}  // namespace detail

/// One sRGB pixel to CIELAB (L in [0,100]).
inline std::array<double, 3> rgb_pixel_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    using namespace detail;
    const auto& lut = srgb_to_linear_lut();
    const double lr = lut[r], lg = lut[g], lb = lut[b];
    const double x = kRgbToXyz[0][0] * lr + kRgbToXyz[0][1] * lg + kRgbToXyz[0][2] * lb;
    const double y = kRgbToXyz[1][0] * lr + kRgbToXyz[1][1] * lg + kRgbToXyz[1][2] * lb;
    const double z = kRgbToXyz[2][0] * lr + kRgbToXyz[2][1] * lg + kRgbToXyz[2][2] * lb;
    const double fx = lab_f(x / kWhiteX), fy = lab_f(y / kWhiteY), fz = lab_f(z / kWhiteZ);
    double L = 116.0 * fy - 16.0;
    if (L < 0.0) L = 0.0;
    if (L > 100.0) L = 100.0;
    return {L, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline std::array<std::uint8_t, 3> lab_pixel_to_rgb(double L, double a, double b) {
    using namespace detail;
    const double fy = (L + 16.0) / 116.0;
    const double fx = fy + a / 500.0;
    const double fz = fy - b / 200.0;
    const double x = lab_f_inv(fx) * kWhiteX, y = lab_f_inv(fy) * kWhiteY, z = lab_f_inv(fz) * kWhiteZ;
    std::array<std::uint8_t, 3> out{};
    for (int c = 0; c < 3; ++c) {
        double lin = kXyzToRgb[c][0] * x + kXyzToRgb[c][1] * y + kXyzToRgb[c][2] * z;
        lin = lin < 0.0 ? 0.0 : lin > 1.0 ? 1.0 : lin;
        out[c] = saturate_u8(255.0 * linear_to_srgb(lin));
    }
    return out;
}

inline ImageF32 rgb_to_lab(const ImageU8& img) {
    require(img.channels() == 3, Errc::ChannelMismatch, "rgb_to_lab expects an RGB image");
    ImageF32 out(img.width(), img.height(), 3);
    out.set_space(PixelSpace::Lab);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); i += 3) {
        const auto lab = rgb_pixel_to_lab(src[i], src[i + 1], src[i + 2]);
        dst[i] = static_cast<float>(lab[0]);
        dst[i + 1] = static_cast<float>(lab[1]);
        dst[i + 2] = static_cast<float>(lab[2]);
    }
    return out;
}

inline ImageU8 lab_to_rgb(const ImageF32& img) {
    require(img.channels() == 3 && img.space() == PixelSpace::Lab, Errc::ChannelMismatch,
            "lab_to_rgb expects a Lab-tagged 3-channel image");
    ImageU8 out(img.width(), img.height(), 3);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); i += 3) {
        const auto rgb = lab_pixel_to_rgb(src[i], src[i + 1], src[i + 2]);
        dst[i] = rgb[0];
        dst[i + 1] = rgb[1];
        dst[i + 2] = rgb[2];
    }
    return out;
}

}  // namespace pvdefect
