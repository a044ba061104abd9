#pragma once

#include <cmath>
#include <vector>

#include "image.hpp"

namespace pvdefect {

/// Bilinear resampling with half-pixel centres; edge samples are clamped. Same-size is a copy.
inline ImageU8 resize_bilinear(const ImageU8& img, int out_w, int out_h) {
    require(out_w >= 1 && out_h >= 1, Errc::ZeroDimension, "resize target must be at least 1x1");
    if (out_w == img.width() && out_h == img.height()) return img;

    struct Tap {
        int i0, i1;
        double t;
    };
    auto taps = [](int out_n, int in_n) {
        std::vector<Tap> v(out_n);
        const double scale = static_cast<double>(in_n) / out_n;
        for (int o = 0; o < out_n; ++o) {
            double s = (o + 0.5) * scale - 0.5;
            if (s < 0.0) s = 0.0;
            if (s > in_n - 1) s = in_n - 1;
            int i0 = static_cast<int>(std::floor(s));
            if (i0 > in_n - 1) i0 = in_n - 1;
            const int i1 = i0 + 1 < in_n ? i0 + 1 : i0;
            v[o] = {i0, i1, s - i0};
        }
        return v;
    };
    const auto xs = taps(out_w, img.width());
    const auto ys = taps(out_h, img.height());
    const int ch = img.channels();
    ImageU8 out(out_w, out_h, ch);
    for (int y = 0; y < out_h; ++y) {
        const Tap ty = ys[y];
        for (int x = 0; x < out_w; ++x) {
            const Tap tx = xs[x];
            for (int c = 0; c < ch; ++c) {
                const double v00 = img.at(tx.i0, ty.i0, c), v01 = img.at(tx.i1, ty.i0, c);
                const double v10 = img.at(tx.i0, ty.i1, c), v11 = img.at(tx.i1, ty.i1, c);
                const double top = v00 + tx.t * (v01 - v00);
                const double bot = v10 + tx.t * (v11 - v10);
                out.at(x, y, c) = saturate_u8(top + ty.t * (bot - top));
            }
        }
    }
    return out;
}

}  // namespace pvdefect
