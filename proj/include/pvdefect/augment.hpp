#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace pvdefect {

enum class FlipAxis { Horizontal, Vertical };
enum class FillPolicy { Reflect, Replicate, Zero };

/// Rotates counter-clockwise (as displayed) by 90 degrees * quarter_turns.
inline ImageU8 rotate90(const ImageU8& img, int quarter_turns) {
    require(quarter_turns >= 1 && quarter_turns <= 3, Errc::InvalidTurns, "quarter turns must be 1, 2 or 3");
    const int w = img.width(), h = img.height(), ch = img.channels();
    const bool swap = quarter_turns != 2;
    ImageU8 out(swap ? h : w, swap ? w : h, ch);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            int sx = 0, sy = 0;
            switch (quarter_turns) {
                case 1: sx = w - 1 - y; sy = x; break;
                case 2: sx = w - 1 - x; sy = h - 1 - y; break;
                default: sx = y; sy = h - 1 - x; break;
            }
            for (int c = 0; c < ch; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

inline ImageU8 flip(const ImageU8& img, FlipAxis axis) {
    const int w = img.width(), h = img.height(), ch = img.channels();
    ImageU8 out(w, h, ch);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int sx = axis == FlipAxis::Horizontal ? w - 1 - x : x;
            const int sy = axis == FlipAxis::Vertical ? h - 1 - y : y;
            for (int c = 0; c < ch; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    return out;
}

/// Shifts content by (dx, dy); the vacated band is filled per `fill`.
inline ImageU8 translate(const ImageU8& img, int dx, int dy, FillPolicy fill = FillPolicy::Reflect) {
    const int w = img.width(), h = img.height(), ch = img.channels();
    require(std::abs(dx) < w && std::abs(dy) < h, Errc::ShiftTooLarge, "shift must be smaller than the image");
    ImageU8 out(w, h, ch);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int sx = x - dx, sy = y - dy;
            const bool inside = sx >= 0 && sx < w && sy >= 0 && sy < h;
            if (!inside) {
                if (fill == FillPolicy::Zero) continue;
                if (fill == FillPolicy::Reflect) {
                    sx = reflect_index(sx, w);
                    sy = reflect_index(sy, h);
                } else {
                    sx = std::clamp(sx, 0, w - 1);
                    sy = std::clamp(sy, 0, h - 1);
                }
            }
            for (int c = 0; c < ch; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

struct AugmentConfig {
    std::uint64_t seed = 0;
    std::set<int> rotation_turns = {1, 2, 3};  // 90, 180, 270 degrees
    std::set<FlipAxis> flip_modes = {FlipAxis::Horizontal, FlipAxis::Vertical};
    double max_translate_frac = 0.10;
    FillPolicy translate_fill = FillPolicy::Reflect;

    void validate() const {
        require(!rotation_turns.empty() && !flip_modes.empty(), Errc::InvalidConfig,
                "rotation and flip sets must be non-empty");
        for (int t : rotation_turns)
            require(t >= 1 && t <= 3, Errc::InvalidTurns, "rotation angles must be 90, 180 or 270 degrees");
        require(max_translate_frac > 0.0 && max_translate_frac <= 0.25, Errc::InvalidConfig,
                "max_translate_frac must lie in (0, 0.25]");
    }
};

/**
 * Text form of one augmentation, stored in the manifest "transform" field:
 *   "rot90:<turns>"   "flip:h" | "flip:v"   "shift:<fx>,<fy>[,reflect|replicate|zero]"
 * Shift fractions are relative to image width/height and rounded to pixels on apply.
 */
inline ImageU8 apply_transform(const ImageU8& img, const std::string& spec) {
    if (spec.rfind("rot90:", 0) == 0) return rotate90(img, std::stoi(spec.substr(6)));
    if (spec == "flip:h") return flip(img, FlipAxis::Horizontal);
    if (spec == "flip:v") return flip(img, FlipAxis::Vertical);
    if (spec.rfind("shift:", 0) == 0) {
        double fx = 0, fy = 0;
        char policy[16] = "reflect";
        const int n = std::sscanf(spec.c_str() + 6, "%lf,%lf,%15s", &fx, &fy, policy);
        require(n >= 2, Errc::InvalidArgument, "malformed transform '" + spec + "'");
        const std::string p = policy;
        const FillPolicy fill = p == "zero" ? FillPolicy::Zero
                                : p == "replicate" ? FillPolicy::Replicate
                                                   : FillPolicy::Reflect;
        const int dx = static_cast<int>(std::lround(fx * img.width()));
        const int dy = static_cast<int>(std::lround(fy * img.height()));
        return translate(img, dx, dy, fill);
    }
    throw Error(Errc::InvalidArgument, "unknown transform '" + spec + "'");
}

/// The three transform strings (rotation, flip, shift) drawn for one sample.
inline std::array<std::string, 3> draw_transforms(const AugmentConfig& cfg, const std::string& sample_id) {
    auto rng = keyed_rng(cfg.seed, sample_id, 0xa5a5);
    const std::vector<int> turns(cfg.rotation_turns.begin(), cfg.rotation_turns.end());
    const std::vector<FlipAxis> axes(cfg.flip_modes.begin(), cfg.flip_modes.end());
    std::uniform_int_distribution<std::size_t> pick_turn(0, turns.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_axis(0, axes.size() - 1);
    std::uniform_real_distribution<double> shift(-cfg.max_translate_frac, cfg.max_translate_frac);
    const int t = turns[pick_turn(rng)];
    const FlipAxis a = axes[pick_axis(rng)];
    const double fx = shift(rng), fy = shift(rng);
    const char* fill = cfg.translate_fill == FillPolicy::Zero        ? "zero"
                       : cfg.translate_fill == FillPolicy::Replicate ? "replicate"
                                                                     : "reflect";
    char buf[96];
    std::snprintf(buf, sizeof buf, "shift:%.6f,%.6f,%s", fx, fy, fill);
    return {"rot90:" + std::to_string(t), a == FlipAxis::Horizontal ? "flip:h" : "flip:v", buf};
}

/**
 * Fourfold expansion: every original is followed by three children
 * (ids "<id>#rot", "<id>#flip", "<id>#shift") that inherit label, split and
 * path and record parent and transform. Children are materialised by
 * applying `transform` to the parent image.
 */
inline LabeledDataset augment_dataset(const LabeledDataset& ds, const AugmentConfig& cfg) {
    require(!ds.empty(), Errc::EmptyDataset, "cannot augment an empty dataset");
    cfg.validate();
    static constexpr const char* kTags[3] = {"#rot", "#flip", "#shift"};
    LabeledDataset out;
    for (const auto& e : ds.entries()) {
        require(e.is_original(), Errc::InvalidArgument, "dataset is already augmented (" + e.id + ")");
        out.add(e);
        const auto transforms = draw_transforms(cfg, e.id);
        for (int k = 0; k < 3; ++k) {
            DatasetEntry child = e;
            child.id = e.id + kTags[k];
            child.parent = e.id;
            child.transform = transforms[k];
            out.add(std::move(child));
        }
    }
    return out;
}

}  // namespace pvdefect
