#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace pvdefect {

namespace detail {

class SynthRng {
public:
    SynthRng(std::uint64_t seed, std::string_view key) : rng_(keyed_rng(seed, key, 0x5e7)) {}
    double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * unit(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    double normal() {
        const double u1 = std::max(unit(), 1e-300), u2 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 rng_;
};

struct Canvas {
    int size;
    std::vector<double> rgb;  // size*size*3, [0, 255]

    explicit Canvas(int s) : size(s), rgb(static_cast<std::size_t>(s) * s * 3, 0.0) {}
    double* px(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * size + x) * 3]; }

    void blend(int x, int y, const double (&c)[3], double a) {
        if (x < 0 || y < 0 || x >= size || y >= size || a <= 0) return;
        a = std::min(a, 1.0);
        double* p = px(x, y);
        for (int k = 0; k < 3; ++k) p[k] = (1 - a) * p[k] + a * c[k];
    }
    void blob(double cx, double cy, double radius, const double (&c)[3], double strength) {
        const int r = static_cast<int>(std::ceil(3 * radius));
        for (int y = static_cast<int>(cy) - r; y <= static_cast<int>(cy) + r; ++y)
            for (int x = static_cast<int>(cx) - r; x <= static_cast<int>(cx) + r; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                blend(x, y, c, strength * std::exp(-d2 / (2 * radius * radius)));
            }
    }
    ImageU8 to_image() const {
        ImageU8 img(size, size, 3);
        auto d = img.data();
        for (std::size_t i = 0; i < rgb.size(); ++i) d[i] = saturate_u8(rgb[i]);
        return img;
    }
};

}  // namespace detail

/**
 * Procedural stand-in for a panel photograph of the given class: a blue cell
 * grid overlaid with a class-specific pattern (snow sheet, dust speckle, hot
 * spots, cracks, droppings). Deterministic in (seed, key).
 */
inline ImageU8 synth_panel(ClassLabel label, std::uint64_t seed, const std::string& key, int size = 64) {
    require(size >= 16, Errc::ImageTooSmall, "synthetic images must be at least 16x16");
    detail::SynthRng r(seed, key);
    detail::Canvas cv(size);
    const double base[3] = {r.uniform(20, 45), r.uniform(35, 60), r.uniform(80, 120)};
    const double line[3] = {170, 175, 185};
    const int pitch = std::max(8, size / r.integer(3, 5));
    const int ox = r.integer(0, pitch - 1), oy = r.integer(0, pitch - 1);
    const double shade = r.uniform(-0.3, 0.3);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double* p = cv.px(x, y);
            const double ramp = 1.0 + shade * (static_cast<double>(x + y) / (2.0 * size) - 0.5);
            const bool grid = (x + ox) % pitch == 0 || (y + oy) % pitch == 0;
            for (int k = 0; k < 3; ++k) p[k] = (grid ? line[k] : base[k]) * ramp;
        }

    switch (label) {
        case ClassLabel::Clean: break;
        case ClassLabel::SnowCovered: {
            const double white[3] = {240, 242, 248};
            const double fx = r.uniform(0.5, 1.5) / size, fy = r.uniform(0.5, 1.5) / size, ph = r.uniform(0, 6.28);
            const double cover = r.uniform(0.3, 0.6);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) {
                    const double m = 0.5 + 0.5 * std::sin(2 * std::numbers::pi * (fx * x + fy * y) + ph);
                    cv.blend(x, y, white, std::clamp((m - (1 - cover)) * 4.0 + 0.35, 0.0, 0.95));
                }
            break;
        }
        case ClassLabel::Dusty: {
            const double dust[3] = {r.uniform(140, 170), r.uniform(120, 140), r.uniform(90, 110)};
            const double a = r.uniform(0.4, 0.6);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) {
                    cv.blend(x, y, dust, a);
                    const double speck = 28.0 * r.normal();
                    double* p = cv.px(x, y);
                    for (int k = 0; k < 3; ++k) p[k] += speck;
                }
            break;
        }
        case ClassLabel::ElectricalFault: {
            const int n = r.integer(1, 3);
            for (int i = 0; i < n; ++i) {
                const double hot[3] = {255, r.uniform(120, 200), r.uniform(20, 60)};
                cv.blob(r.uniform(0.2, 0.8) * size, r.uniform(0.2, 0.8) * size, r.uniform(0.06, 0.12) * size, hot, 1.4);
            }
            break;
        }
        case ClassLabel::PhysicalDamage: {
            const double crack[3] = {225, 225, 230};
            const int n = r.integer(3, 6);
            for (int i = 0; i < n; ++i) {
                double x = r.uniform(0, size), y = r.uniform(0, size), ang = r.uniform(0, 2 * std::numbers::pi);
                const int steps = r.integer(size / 3, size);
                for (int s = 0; s < steps; ++s) {
                    cv.blend(static_cast<int>(x), static_cast<int>(y), crack, 0.95);
                    ang += r.uniform(-0.5, 0.5);
                    x += std::cos(ang);
                    y += std::sin(ang);
                }
            }
            break;
        }
        case ClassLabel::BirdDroppings: {
            const int n = r.integer(5, 12);
            for (int i = 0; i < n; ++i) {
                const double white[3] = {r.uniform(230, 255), r.uniform(230, 250), r.uniform(215, 235)};
                cv.blob(r.uniform(0, size), r.uniform(0, size), r.uniform(0.8, 2.2), white, 2.5);
            }
            break;
        }
    }
    for (auto& v : cv.rgb) v += 3.0 * r.normal();
    return cv.to_image();
}

/// `per_class` originals per class, ids "<class>/<nnnn>", paths "<class>/<nnnn>.png".
inline LabeledDataset synth_manifest(int per_class) {
    require(per_class >= 1, Errc::InvalidArgument, "per_class must be >= 1");
    LabeledDataset ds;
    for (ClassLabel c : kAllLabels)
        for (int i = 0; i < per_class; ++i) {
            char num[16];
            std::snprintf(num, sizeof num, "%04d", i);
            const std::string id = std::string(label_name(c)) + "/" + num;
            ds.add({id, id + ".png", c, Split::Unassigned, "", ""});
        }
    return ds;
}

}  // namespace pvdefect
