#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "color.hpp"
#include "image.hpp"
#include "resize.hpp"

namespace pvdefect {

struct PreprocessConfig {
    int bilateral_d = 9;
    double sigma_color = 75.0;
    double sigma_space = 75.0;
    double nlm_h = 10.0;
    double nlm_h_color = 10.0;
    int nlm_template = 7;
    int nlm_search = 21;
    double clahe_clip = 2.0;
    int clahe_tiles_x = 8;
    int clahe_tiles_y = 8;
    double gamma = 1.5;
    int target_width = 640;
    int target_height = 640;
    bool enable_clahe = true;
    bool enable_gamma = true;

    void validate() const {
        require(bilateral_d >= 3 && bilateral_d % 2 == 1, Errc::InvalidDiameter,
                "bilateral diameter must be odd and >= 3");
        require(sigma_color > 0 && sigma_space > 0, Errc::InvalidConfig, "bilateral sigmas must be positive");
        require(nlm_h > 0 && nlm_h_color > 0, Errc::InvalidConfig, "NLM strengths must be positive");
        require(nlm_template % 2 == 1 && nlm_search % 2 == 1 && nlm_template >= 1 &&
                    nlm_template < nlm_search,
                Errc::WindowShapeError, "NLM windows must be odd with template < search");
        require(clahe_clip >= 1.0, Errc::InvalidConfig, "CLAHE clip limit must be >= 1.0");
        require(clahe_tiles_x >= 1 && clahe_tiles_y >= 1, Errc::InvalidConfig, "CLAHE tile grid must be positive");
        require(gamma > 0, Errc::NonPositiveGamma, "gamma must be > 0");
        require(target_width >= 1 && target_height >= 1, Errc::ZeroDimension, "target size must be positive");
    }
};

// ---------------------------------------------------------------------------
// Bilateral filter

/**
 * Edge-preserving smoothing over a d x d window with reflected borders.
 *
 * Weight of neighbour q for centre p:
 *   exp(-|p-q|^2 / (2 sigma_space^2)) * exp(-||I(p)-I(q)||^2 / (2 sigma_color^2))
 * where the colour distance is Euclidean over channels.
 */
inline ImageU8 bilateral_filter(const ImageU8& img, int d, double sigma_color, double sigma_space) {
    require(d >= 3 && d % 2 == 1, Errc::InvalidDiameter, "bilateral diameter must be odd and >= 3");
    require(sigma_color > 0 && sigma_space > 0, Errc::InvalidConfig, "bilateral sigmas must be positive");
    const int r = d / 2;
    const int w = img.width(), h = img.height(), ch = img.channels();

    std::vector<double> spatial(static_cast<std::size_t>(d) * d);
    for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i)
            spatial[(j + r) * d + (i + r)] = std::exp(-(i * i + j * j) / (2.0 * sigma_space * sigma_space));

    const int max_dist2 = ch * 255 * 255;
    std::vector<double> range(static_cast<std::size_t>(max_dist2) + 1);
    for (int k = 0; k <= max_dist2; ++k) range[k] = std::exp(-k / (2.0 * sigma_color * sigma_color));

    std::vector<int> xmap(w + 2 * r), ymap(h + 2 * r);
    for (int i = 0; i < w + 2 * r; ++i) xmap[i] = reflect_index(i - r, w);
    for (int i = 0; i < h + 2 * r; ++i) ymap[i] = reflect_index(i - r, h);

    ImageU8 out(w, h, ch);
    std::array<double, 3> acc{};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* centre = &img.at(x, y);
            acc = {0.0, 0.0, 0.0};
            double wsum = 0.0;
            for (int j = 0; j < d; ++j) {
                const int yy = ymap[y + j];
                for (int i = 0; i < d; ++i) {
                    const std::uint8_t* q = &img.at(xmap[x + i], yy);
                    int dist2 = 0;
                    for (int c = 0; c < ch; ++c) {
                        const int diff = int(q[c]) - int(centre[c]);
                        dist2 += diff * diff;
                    }
                    const double wt = spatial[j * d + i] * range[dist2];
                    wsum += wt;
                    for (int c = 0; c < ch; ++c) acc[c] += wt * q[c];
                }
            }
            for (int c = 0; c < ch; ++c) out.at(x, y, c) = saturate_u8(acc[c] / wsum);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Non-local means

/**
 * Non-local means with reflected borders.
 *
 * For every pixel p and every candidate q in the search window the patch
 * distance is the mean squared difference over the template window. The
 * weight is exp(-d^2 / h^2) (noise-variance term fixed at zero).
 *
 * Gray images use `h`. For RGB the distance is split into a luma term
 * (BT.601 luma, strength `h`) and a chroma term (per-channel difference
 * from luma, averaged over channels, strength `h_color`):
 *   w = exp(-d_luma^2 / h^2 - d_chroma^2 / h_color^2)
 * and the same weight averages all three channels.
 *
 * Patch distances for one offset are evaluated for the whole image at once
 * with a summed-area table, so cost is O(pixels * search^2).
 */
inline ImageU8 nlm_denoise(const ImageU8& img, double h, double h_color, int template_size, int search_size) {
    require(template_size >= 1 && search_size >= 1 && template_size % 2 == 1 && search_size % 2 == 1 &&
                template_size < search_size,
            Errc::WindowShapeError, "NLM windows must be odd with template < search");
    require(h > 0 && h_color > 0, Errc::InvalidConfig, "NLM strengths must be positive");
    const int w = img.width(), hh = img.height(), ch = img.channels();
    const int tr = template_size / 2, sr = search_size / 2, pad = tr + sr;
    const int pw = w + 2 * pad, ph = hh + 2 * pad;
    const bool color = ch == 3;

    // Padded planes: luma (or gray) and, for colour, per-channel chroma and values.
    std::vector<double> luma(static_cast<std::size_t>(pw) * ph);
    std::vector<double> chroma(color ? luma.size() * 3 : 0);
    std::vector<std::uint8_t> vals(luma.size() * ch);
    for (int y = 0; y < ph; ++y) {
        const int sy = reflect_index(y - pad, hh);
        for (int x = 0; x < pw; ++x) {
            const int sx = reflect_index(x - pad, w);
            const std::size_t k = static_cast<std::size_t>(y) * pw + x;
            const std::uint8_t* p = &img.at(sx, sy);
            for (int c = 0; c < ch; ++c) vals[k * ch + c] = p[c];
            if (color) {
                const double Y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
                luma[k] = Y;
                for (int c = 0; c < 3; ++c) chroma[k * 3 + c] = p[c] - Y;
            } else {
                luma[k] = p[0];
            }
        }
    }

    const double inv_area = 1.0 / (static_cast<double>(template_size) * template_size);
    const double inv_h2 = 1.0 / (h * h);
    const double inv_hc2 = 1.0 / (h_color * h_color);

    // Distance image covers the original area grown by the template radius.
    const int dw = w + 2 * tr, dh = hh + 2 * tr;
    std::vector<double> integral(static_cast<std::size_t>(dw + 1) * (dh + 1), 0.0);
    std::vector<double> wsum(static_cast<std::size_t>(w) * hh, 0.0);
    std::vector<double> acc(static_cast<std::size_t>(w) * hh * ch, 0.0);

    for (int oy = -sr; oy <= sr; ++oy) {
        for (int ox = -sr; ox <= sr; ++ox) {
            // integral[(y+1)*(dw+1) + (x+1)] = sum of scaled squared distance over [0..x]x[0..y]
            for (int y = 0; y < dh; ++y) {
                double row = 0.0;
                const int py = y + sr;  // padded row of the distance-grid origin
                for (int x = 0; x < dw; ++x) {
                    const int px = x + sr;
                    const std::size_t a = static_cast<std::size_t>(py) * pw + px;
                    const std::size_t b = static_cast<std::size_t>(py + oy) * pw + (px + ox);
                    const double dl = luma[a] - luma[b];
                    double cost = dl * dl * inv_h2;
                    if (color) {
                        double dc = 0.0;
                        for (int c = 0; c < 3; ++c) {
                            const double t = chroma[a * 3 + c] - chroma[b * 3 + c];
                            dc += t * t;
                        }
                        cost += dc * (inv_hc2 / 3.0);
                    }
                    row += cost;
                    integral[static_cast<std::size_t>(y + 1) * (dw + 1) + (x + 1)] =
                        integral[static_cast<std::size_t>(y) * (dw + 1) + (x + 1)] + row;
                }
            }
            for (int y = 0; y < hh; ++y) {
                const std::size_t r0 = static_cast<std::size_t>(y) * (dw + 1);
                const std::size_t r1 = static_cast<std::size_t>(y + template_size) * (dw + 1);
                for (int x = 0; x < w; ++x) {
                    const double patch = integral[r1 + x + template_size] - integral[r0 + x + template_size] -
                                         integral[r1 + x] + integral[r0 + x];
                    const double wt = std::exp(-std::max(patch, 0.0) * inv_area);
                    const std::size_t o = static_cast<std::size_t>(y) * w + x;
                    wsum[o] += wt;
                    const std::size_t q = static_cast<std::size_t>(y + pad + oy) * pw + (x + pad + ox);
                    for (int c = 0; c < ch; ++c) acc[o * ch + c] += wt * vals[q * ch + c];
                }
            }
        }
    }

    ImageU8 out(w, hh, ch);
    auto dst = out.data();
    for (std::size_t o = 0; o < wsum.size(); ++o)
        for (int c = 0; c < ch; ++c) dst[o * ch + c] = saturate_u8(acc[o * ch + c] / wsum[o]);
    return out;
}

// ---------------------------------------------------------------------------
// CLAHE

/// Clip limit in counts for a tile of `tile_pixels` pixels (at least 1).
inline int clahe_clip_limit(double clip, long tile_pixels) {
    return std::max(1, static_cast<int>(clip * static_cast<double>(tile_pixels) / 256.0));
}

/**
 * Clips a 256-bin histogram at `limit` and redistributes the excess in one
 * pass: an equal share to every bin, then the remainder one count at a time
 * at a fixed stride. Returns the total excess that was redistributed.
 */
inline long clip_histogram(std::array<long, 256>& hist, int limit) {
    long excess = 0;
    for (auto& v : hist) {
        if (v > limit) {
            excess += v - limit;
            v = limit;
        }
    }
    const long batch = excess / 256;
    long residual = excess - batch * 256;
    for (auto& v : hist) v += batch;
    if (residual > 0) {
        const long step = std::max<long>(256 / residual, 1);
        for (long i = 0; i < 256 && residual > 0; i += step, --residual) ++hist[i];
    }
    return excess;
}

/// Contrast-limited adaptive equalisation of one 8-bit plane.
inline std::vector<std::uint8_t> clahe_plane(std::span<const std::uint8_t> plane, int w, int h, double clip,
                                             int tiles_x, int tiles_y) {
    require(clip >= 1.0, Errc::InvalidConfig, "CLAHE clip limit must be >= 1.0");
    require(tiles_x >= 1 && tiles_y >= 1, Errc::InvalidConfig, "CLAHE tile grid must be positive");
    // Tiles are equal-sized; the image is reflect-extended to a whole number of tiles.
    const int tw = (w + tiles_x - 1) / tiles_x;
    const int th = (h + tiles_y - 1) / tiles_y;
    const long area = static_cast<long>(tw) * th;
    const int limit = clahe_clip_limit(clip, area);
    const double lut_scale = 255.0 / static_cast<double>(area);

    std::vector<std::array<std::uint8_t, 256>> luts(static_cast<std::size_t>(tiles_x) * tiles_y);
    for (int ty = 0; ty < tiles_y; ++ty) {
        for (int tx = 0; tx < tiles_x; ++tx) {
            std::array<long, 256> hist{};
            for (int y = ty * th; y < (ty + 1) * th; ++y) {
                const int sy = reflect_index(y, h);
                for (int x = tx * tw; x < (tx + 1) * tw; ++x)
                    ++hist[plane[static_cast<std::size_t>(sy) * w + reflect_index(x, w)]];
            }
            clip_histogram(hist, limit);
            auto& lut = luts[static_cast<std::size_t>(ty) * tiles_x + tx];
            long sum = 0;
            for (int i = 0; i < 256; ++i) {
                sum += hist[i];
                lut[i] = saturate_u8(static_cast<double>(sum) * lut_scale);
            }
        }
    }

    std::vector<std::uint8_t> out(plane.size());
    const double inv_tw = 1.0 / tw, inv_th = 1.0 / th;
    for (int y = 0; y < h; ++y) {
        const double tyf = y * inv_th - 0.5;
        int ty1 = static_cast<int>(std::floor(tyf));
        int ty2 = ty1 + 1;
        const double ya = tyf - ty1;
        ty1 = std::max(ty1, 0);
        ty2 = std::min(ty2, tiles_y - 1);
        for (int x = 0; x < w; ++x) {
            const double txf = x * inv_tw - 0.5;
            int tx1 = static_cast<int>(std::floor(txf));
            int tx2 = tx1 + 1;
            const double xa = txf - tx1;
            tx1 = std::max(tx1, 0);
            tx2 = std::min(tx2, tiles_x - 1);
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            const int v = plane[idx];
            const auto& l11 = luts[static_cast<std::size_t>(ty1) * tiles_x + tx1];
            const auto& l12 = luts[static_cast<std::size_t>(ty1) * tiles_x + tx2];
            const auto& l21 = luts[static_cast<std::size_t>(ty2) * tiles_x + tx1];
            const auto& l22 = luts[static_cast<std::size_t>(ty2) * tiles_x + tx2];
            const double res = (l11[v] * (1.0 - xa) + l12[v] * xa) * (1.0 - ya) +
                               (l21[v] * (1.0 - xa) + l22[v] * xa) * ya;
            out[idx] = saturate_u8(res);
        }
    }
    return out;
}

/// CLAHE on the L channel of a Lab image; a and b are copied through untouched.
inline ImageF32 clahe_lab(const ImageF32& lab, double clip, int tiles_x, int tiles_y) {
    require(lab.channels() == 3 && lab.space() == PixelSpace::Lab, Errc::ChannelMismatch,
            "clahe_lab expects a Lab image");
    const std::size_t n = static_cast<std::size_t>(lab.width()) * lab.height();
    std::vector<std::uint8_t> L(n);
    auto src = lab.data();
    for (std::size_t i = 0; i < n; ++i) L[i] = saturate_u8(src[3 * i] * (255.0 / 100.0));
    const auto eq = clahe_plane(L, lab.width(), lab.height(), clip, tiles_x, tiles_y);
    ImageF32 out = lab;
    auto dst = out.data();
    for (std::size_t i = 0; i < n; ++i) dst[3 * i] = static_cast<float>(eq[i] * (100.0 / 255.0));
    return out;
}

inline ImageU8 clahe_luminance(const ImageU8& img, double clip, int tiles_x, int tiles_y) {
    require(img.channels() == 3, Errc::ChannelMismatch, "clahe_luminance expects an RGB image");
    return lab_to_rgb(clahe_lab(rgb_to_lab(img), clip, tiles_x, tiles_y));
}

// ---------------------------------------------------------------------------
// Gamma

/// LUT[i] = round(255 * (i/255)^(1/gamma)); gamma > 1 brightens mid-tones.
inline std::array<std::uint8_t, 256> gamma_lut(double gamma) {
    require(gamma > 0, Errc::NonPositiveGamma, "gamma must be > 0");
    std::array<std::uint8_t, 256> lut{};
    for (int i = 0; i < 256; ++i) lut[i] = saturate_u8(255.0 * std::pow(i / 255.0, 1.0 / gamma));
    return lut;
}

inline ImageU8 gamma_correct(const ImageU8& img, double gamma) {
    const auto lut = gamma_lut(gamma);
    ImageU8 out = img;
    for (auto& v : out.data()) v = lut[v];
    return out;
}

// ---------------------------------------------------------------------------

/// resize -> bilateral -> NLM -> CLAHE (optional) -> gamma (optional).
inline ImageU8 preprocess_pipeline(const ImageU8& img, const PreprocessConfig& cfg) {
    cfg.validate();
    ImageU8 cur = resize_bilinear(img, cfg.target_width, cfg.target_height);
    cur = bilateral_filter(cur, cfg.bilateral_d, cfg.sigma_color, cfg.sigma_space);
    cur = nlm_denoise(cur, cfg.nlm_h, cfg.nlm_h_color, cfg.nlm_template, cfg.nlm_search);
    if (cfg.enable_clahe) {
        if (cur.channels() == 3) {
            cur = clahe_luminance(cur, cfg.clahe_clip, cfg.clahe_tiles_x, cfg.clahe_tiles_y);
        } else {
            cur = ImageU8(cur.width(), cur.height(), 1,
                          clahe_plane(cur.data(), cur.width(), cur.height(), cfg.clahe_clip, cfg.clahe_tiles_x,
                                      cfg.clahe_tiles_y));
        }
    }
    if (cfg.enable_gamma) cur = gamma_correct(cur, cfg.gamma);
    return cur;
}

}  // namespace pvdefect
