#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace pvdefect {

/// Interpretation of the channels of an image.
enum class PixelSpace { Gray, RGB, Lab, Other };

/**
 * Row-major, channel-interleaved raster.
 *
 * ImageU8 is the unit flowing through preprocessing and augmentation;
 * ImageF32 carries intermediate filter math and CIELAB data.
 */
template <typename T>
class Image {
public:
    using value_type = T;

    Image() = default;

    Image(int width, int height, int channels, T fill = T{})
        : width_(width), height_(height), channels_(channels), space_(default_space(channels)) {
        validate_shape();
        data_.assign(size(), fill);
    }

    Image(int width, int height, int channels, std::vector<T> data)
        : width_(width), height_(height), channels_(channels), space_(default_space(channels)),
          data_(std::move(data)) {
        validate_shape();
        require(data_.size() == size(), Errc::DimMismatch,
                "pixel buffer length " + std::to_string(data_.size()) + " != " +
                    std::to_string(size()));
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept {
        return static_cast<std::size_t>(width_) * height_ * channels_;
    }
    bool empty() const noexcept { return data_.empty(); }

    PixelSpace space() const noexcept { return space_; }
    void set_space(PixelSpace s) noexcept { space_ = s; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    const std::vector<T>& vec() const noexcept { return data_; }

    T& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

    std::size_t index(int x, int y, int c = 0) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    bool same_shape(const Image& o) const noexcept {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    friend bool operator==(const Image& a, const Image& b) {
        return a.same_shape(b) && a.data_ == b.data_;
    }

private:
    static PixelSpace default_space(int channels) {
        return channels == 1 ? PixelSpace::Gray : channels == 3 ? PixelSpace::RGB : PixelSpace::Other;
    }

    void validate_shape() const {
        require(width_ >= 1 && height_ >= 1, Errc::ZeroDimension,
                "image dimensions must be positive, got " + std::to_string(width_) + "x" +
                    std::to_string(height_));
        require(channels_ == 1 || channels_ == 3, Errc::ChannelMismatch,
                "images carry 1 or 3 channels, got " + std::to_string(channels_));
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    PixelSpace space_ = PixelSpace::Other;
    std::vector<T> data_;
};

using ImageU8 = Image<std::uint8_t>;
using ImageF32 = Image<float>;

/// Saturating conversion from a wider type; rounds to nearest.
inline std::uint8_t saturate_u8(double v) noexcept {
    if (!(v > 0.0)) return 0;  // also maps NaN to 0
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v));
}

/// Builds an ImageU8 from wider integer samples, rejecting anything outside 0..=255.
inline ImageU8 image_from_ints(int width, int height, int channels, std::span<const int> values) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(values.size());
    for (int v : values) {
        require(v >= 0 && v <= 255, Errc::InvalidArgument,
                "sample value " + std::to_string(v) + " outside 0..=255");
        bytes.push_back(static_cast<std::uint8_t>(v));
    }
    return ImageU8(width, height, channels, std::move(bytes));
}

/// Symmetric reflection (…cba|abc…|cba…); valid for any offset, including |i| > n.
inline int reflect_index(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

// ---------------------------------------------------------------------------
// Class labels

enum class ClassLabel : std::uint8_t {
    Clean = 0,
    SnowCovered = 1,
    Dusty = 2,
    ElectricalFault = 3,
    PhysicalDamage = 4,
    BirdDroppings = 5,
};

inline constexpr int kNumClasses = 6;

inline constexpr std::array<ClassLabel, kNumClasses> kAllLabels = {
    ClassLabel::Clean,          ClassLabel::SnowCovered,    ClassLabel::Dusty,
    ClassLabel::ElectricalFault, ClassLabel::PhysicalDamage, ClassLabel::BirdDroppings,
};

inline constexpr int label_code(ClassLabel l) noexcept { return static_cast<int>(l); }

inline ClassLabel label_from_code(int code) {
    require(code >= 0 && code < kNumClasses, Errc::LabelOutOfRange,
            "class code " + std::to_string(code) + " outside 0..5");
    return static_cast<ClassLabel>(code);
}

inline std::string_view label_name(ClassLabel l) noexcept {
    switch (l) {
        case ClassLabel::Clean: return "Clean";
        case ClassLabel::SnowCovered: return "SnowCovered";
        case ClassLabel::Dusty: return "Dusty";
        case ClassLabel::ElectricalFault: return "ElectricalFault";
        case ClassLabel::PhysicalDamage: return "PhysicalDamage";
        case ClassLabel::BirdDroppings: return "BirdDroppings";
    }
    return "Unknown";
}

namespace detail {
inline std::string fold_name(std::string_view s) {
    std::string out;
    for (char ch : s) {
        if ((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9')) out.push_back(ch);
        else if (ch >= 'A' && ch <= 'Z') out.push_back(static_cast<char>(ch - 'A' + 'a'));
    }
    return out;
}
}  // namespace detail

/**
 * Maps a label name or a dataset class-directory name to a ClassLabel.
 *
 * Matching ignores case and punctuation. Besides the canonical names the
 * public dataset's directory names are accepted:
 *
 *   Clean              -> Clean
 *   Snow-Covered       -> SnowCovered
 *   Dusty              -> Dusty
 *   Electrical-damage  -> ElectricalFault
 *   Physical-Damage    -> PhysicalDamage
 *   Bird-drop          -> BirdDroppings
 */
inline std::optional<ClassLabel> parse_label(std::string_view name) {
    const std::string k = detail::fold_name(name);
    if (k == "clean") return ClassLabel::Clean;
    if (k == "snowcovered" || k == "snow") return ClassLabel::SnowCovered;
    if (k == "dusty" || k == "dust") return ClassLabel::Dusty;
    if (k == "electricalfault" || k == "electricaldamage" || k == "electrical")
        return ClassLabel::ElectricalFault;
    if (k == "physicaldamage" || k == "physical") return ClassLabel::PhysicalDamage;
    if (k == "birddroppings" || k == "birddrop" || k == "birddropping" || k == "bird")
        return ClassLabel::BirdDroppings;
    return std::nullopt;
}

}  // namespace pvdefect
