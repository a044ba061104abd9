#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "color.hpp"
#include "features.hpp"
#include "fft.hpp"
#include "image.hpp"
#include "resize.hpp"

namespace pvdefect {

struct HandcraftedConfig {
    // LBP
    int lbp_points = 8;
    double lbp_radius = 1.0;
    bool lbp_interpolate = false;  // false: neighbours snap to the nearest pixel
    // HOG
    int hog_input = 128;  // internal square resize; 0 keeps the native size
    int hog_cell = 8;
    int hog_block = 2;
    int hog_stride = 1;
    int hog_bins = 9;
    // Gabor
    std::vector<double> gabor_orientations_deg = {0.0, 45.0, 90.0, 135.0};
    std::vector<double> gabor_wavelengths = {4.0, 8.0, 16.0, 32.0};
    double gabor_sigma_ratio = 0.56;
    double gabor_aspect = 0.5;
    int gabor_input = 128;  // internal square resize; 0 keeps the native size

    int lbp_bins() const { return lbp_points * (lbp_points - 1) + 3; }

    void validate() const {
        require(lbp_points >= 4 && lbp_points <= 16, Errc::InvalidConfig, "lbp_points must lie in 4..16");
        require(lbp_radius >= 1.0, Errc::InvalidConfig, "lbp_radius must be >= 1");
        require(hog_cell >= 1 && hog_block >= 1 && hog_stride >= 1 && hog_bins >= 2, Errc::InvalidConfig,
                "HOG cell/block/stride/bins must be positive");
        require(hog_input >= 0 && hog_input % hog_cell == 0, Errc::InvalidConfig,
                "HOG input must be divisible by the cell size");
        require(!gabor_orientations_deg.empty() && !gabor_wavelengths.empty(), Errc::InvalidConfig,
                "Gabor bank must be non-empty");
        for (double l : gabor_wavelengths) require(l >= 2.0, Errc::InvalidConfig, "Gabor wavelengths must be >= 2");
        require(gabor_sigma_ratio > 0 && gabor_aspect > 0, Errc::InvalidConfig, "Gabor sigma/aspect must be positive");
        require(gabor_input >= 0, Errc::InvalidConfig, "gabor_input must be >= 0");
    }

    std::size_t hog_dim(int w, int h) const {
        const int nx = w / hog_cell, ny = h / hog_cell;
        if (nx < hog_block || ny < hog_block) return 0;
        const std::size_t bx = (nx - hog_block) / hog_stride + 1, by = (ny - hog_block) / hog_stride + 1;
        return bx * by * hog_block * hog_block * hog_bins;
    }
    std::size_t gabor_dim() const { return 2 * gabor_orientations_deg.size() * gabor_wavelengths.size(); }
};

// ---------------------------------------------------------------------------
// LBP

/// Bin index per code: uniform codes (<= 2 circular transitions) in ascending code order, then one catch-all.
inline std::vector<int> lbp_uniform_table(int points) {
    const int n = 1 << points;
    std::vector<int> table(n);
    int next = 0;
    const int catch_all = points * (points - 1) + 2;
    for (int code = 0; code < n; ++code) {
        int transitions = 0;
        for (int b = 0; b < points; ++b) {
            const int cur = (code >> b) & 1;
            const int nxt = (code >> ((b + 1) % points)) & 1;
            transitions += cur != nxt;
        }
        table[code] = transitions <= 2 ? next++ : catch_all;
    }
    return table;
}

/**
 * Uniform LBP histogram (L1-normalised) over interior pixels.
 *
 * Neighbour p sits at (R cos(2 pi p / P), -R sin(2 pi p / P)); its bit is
 * set iff its value >= the centre. With lbp_interpolate the neighbour is
 * bilinearly sampled, otherwise it is taken from the nearest pixel so codes
 * depend only on pixel order.
 */
inline FeatureBlock lbp_histogram(const ImageU8& gray, const HandcraftedConfig& cfg = {}) {
    require(gray.channels() == 1, Errc::ChannelMismatch, "LBP expects a gray image");
    const int P = cfg.lbp_points;
    const double R = cfg.lbp_radius;
    const int margin = static_cast<int>(std::ceil(R));
    const int w = gray.width(), h = gray.height();
    require(std::min(w, h) > 2 * margin, Errc::ImageTooSmall, "image too small for the LBP radius");

    struct Sample {
        int x0, y0, x1, y1;
        double fx, fy;
    };
    std::vector<Sample> samples(P);
    for (int p = 0; p < P; ++p) {
        const double a = 2.0 * std::numbers::pi * p / P;
        double dx = R * std::cos(a), dy = -R * std::sin(a);
        if (!cfg.lbp_interpolate) {
            dx = std::round(dx);
            dy = std::round(dy);
        } else {
            if (std::abs(dx - std::round(dx)) < 1e-6) dx = std::round(dx);
            if (std::abs(dy - std::round(dy)) < 1e-6) dy = std::round(dy);
        }
        const int x0 = static_cast<int>(std::floor(dx)), y0 = static_cast<int>(std::floor(dy));
        const double fx = dx - x0, fy = dy - y0;
        samples[p] = {x0, y0, fx > 0 ? x0 + 1 : x0, fy > 0 ? y0 + 1 : y0, fx, fy};
    }

    static thread_local std::map<int, std::vector<int>> tables;
    auto it = tables.find(P);
    if (it == tables.end()) it = tables.emplace(P, lbp_uniform_table(P)).first;
    const auto& table = it->second;

    std::vector<double> hist(cfg.lbp_bins(), 0.0);
    long count = 0;
    for (int y = margin; y < h - margin; ++y) {
        for (int x = margin; x < w - margin; ++x) {
            const double centre = gray.at(x, y);
            int code = 0;
            for (int p = 0; p < P; ++p) {
                const Sample& s = samples[p];
                const double v00 = gray.at(x + s.x0, y + s.y0), v01 = gray.at(x + s.x1, y + s.y0);
                const double v10 = gray.at(x + s.x0, y + s.y1), v11 = gray.at(x + s.x1, y + s.y1);
                const double top = v00 + s.fx * (v01 - v00);
                const double bot = v10 + s.fx * (v11 - v10);
                const double v = top + s.fy * (bot - top);
                if (v >= centre) code |= 1 << p;
            }
            hist[table[code]] += 1.0;
            ++count;
        }
    }
    for (auto& v : hist) v /= static_cast<double>(count);
    return {BlockKind::Lbp, std::move(hist)};
}

// ---------------------------------------------------------------------------
// HOG

/**
 * Histogram of oriented gradients.
 *
 * Central-difference gradients (reflected borders), unsigned orientation
 * with bin centres at k * 180 / bins, magnitude split linearly between the
 * two nearest bins. Cells are grouped into overlapping blocks, each
 * L2-Hys normalised (clip 0.2); blocks are emitted row-major.
 */
inline FeatureBlock hog_descriptor(const ImageU8& gray_in, const HandcraftedConfig& cfg = {}) {
    require(gray_in.channels() == 1, Errc::ChannelMismatch, "HOG expects a gray image");
    const ImageU8 gray =
        cfg.hog_input > 0 ? resize_bilinear(gray_in, cfg.hog_input, cfg.hog_input) : gray_in;
    const int w = gray.width(), h = gray.height();
    const int cell = cfg.hog_cell, bins = cfg.hog_bins, blk = cfg.hog_block;
    const int nx = w / cell, ny = h / cell;
    require(nx >= blk && ny >= blk, Errc::ImageTooSmall, "image too small for one HOG block");

    std::vector<double> cells(static_cast<std::size_t>(nx) * ny * bins, 0.0);
    const double bin_width = 180.0 / bins;
    for (int y = 0; y < ny * cell; ++y) {
        for (int x = 0; x < nx * cell; ++x) {
            const double gx = double(gray.at(reflect_index(x + 1, w), y)) - gray.at(reflect_index(x - 1, w), y);
            const double gy = double(gray.at(x, reflect_index(y + 1, h))) - gray.at(x, reflect_index(y - 1, h));
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            double ang = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
            if (ang < 0.0) ang += 180.0;
            if (ang >= 180.0) ang -= 180.0;
            const double pos = ang / bin_width;
            const int b0 = static_cast<int>(std::floor(pos)) % bins;
            const double f = pos - std::floor(pos);
            double* hc = &cells[(static_cast<std::size_t>(y / cell) * nx + x / cell) * bins];
            hc[b0] += mag * (1.0 - f);
            hc[(b0 + 1) % bins] += mag * f;
        }
    }

    const int bx = (nx - blk) / cfg.hog_stride + 1, by = (ny - blk) / cfg.hog_stride + 1;
    const std::size_t block_len = static_cast<std::size_t>(blk) * blk * bins;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(bx) * by * block_len);
    constexpr double eps = 1e-5;
    std::vector<double> v(block_len);
    for (int j = 0; j < by; ++j) {
        for (int i = 0; i < bx; ++i) {
            std::size_t k = 0;
            for (int cy = 0; cy < blk; ++cy)
                for (int cx = 0; cx < blk; ++cx) {
                    const int ccx = i * cfg.hog_stride + cx, ccy = j * cfg.hog_stride + cy;
                    const double* hc = &cells[(static_cast<std::size_t>(ccy) * nx + ccx) * bins];
                    for (int b = 0; b < bins; ++b) v[k++] = hc[b];
                }
            double ss = 0.0;
            for (double e : v) ss += e * e;
            double norm = std::sqrt(ss + eps * eps);
            ss = 0.0;
            for (double& e : v) {
                e = std::min(e / norm, 0.2);
                ss += e * e;
            }
            norm = std::sqrt(ss + eps * eps);
            for (double e : v) out.push_back(e / norm);
        }
    }
    return {BlockKind::Hog, std::move(out)};
}

// ---------------------------------------------------------------------------
// Gabor

/// One real, even, zero-mean, L1-normalised Gabor kernel of size (2*half+1)^2.
struct GaborKernel {
    double orientation_deg;
    double wavelength;
    int half;
    std::vector<double> taps;  // row-major, index (dy+half)*(2*half+1) + (dx+half)
};

inline GaborKernel make_gabor_kernel(double orientation_deg, double wavelength, double sigma_ratio, double aspect) {
    const double sigma = sigma_ratio * wavelength;
    const double theta = orientation_deg * std::numbers::pi / 180.0;
    const int half = static_cast<int>(std::ceil(3.0 * sigma / std::min(aspect, 1.0)));
    const int size = 2 * half + 1;
    GaborKernel k{orientation_deg, wavelength, half, std::vector<double>(static_cast<std::size_t>(size) * size)};
    const double ct = std::cos(theta), st = std::sin(theta);
    double mean = 0.0;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
            const double xr = dx * ct + dy * st;
            const double yr = -dx * st + dy * ct;
            const double g = std::exp(-(xr * xr + aspect * aspect * yr * yr) / (2.0 * sigma * sigma)) *
                             std::cos(2.0 * std::numbers::pi * xr / wavelength);
            k.taps[(dy + half) * size + (dx + half)] = g;
            mean += g;
        }
    mean /= static_cast<double>(k.taps.size());
    double l1 = 0.0;
    for (double& t : k.taps) {
        t -= mean;
        l1 += std::abs(t);
    }
    for (double& t : k.taps) t /= l1;
    return k;
}

/**
 * Orientation x wavelength filter bank. Each filter's response magnitude
 * contributes (mean, std); order is orientation-major, wavelength-minor.
 *
 * Filtering is a linear correlation over the reflect-padded image computed
 * with FFTs. Kernel spectra are cached per transform size; the bank is safe
 * to share across threads.
 */
class GaborBank {
public:
    explicit GaborBank(const HandcraftedConfig& cfg)
        : sigma_ratio_(cfg.gabor_sigma_ratio), aspect_(cfg.gabor_aspect), input_(cfg.gabor_input) {
        for (double o : cfg.gabor_orientations_deg)
            for (double l : cfg.gabor_wavelengths) {
                kernels_.push_back(make_gabor_kernel(o, l, sigma_ratio_, aspect_));
                max_half_ = std::max(max_half_, kernels_.back().half);
            }
    }

    const std::vector<GaborKernel>& kernels() const { return kernels_; }
    int max_half() const { return max_half_; }
    std::size_t dim() const { return 2 * kernels_.size(); }

    bool matches(const HandcraftedConfig& cfg) const {
        if (cfg.gabor_sigma_ratio != sigma_ratio_ || cfg.gabor_aspect != aspect_ || cfg.gabor_input != input_)
            return false;
        if (cfg.gabor_orientations_deg.size() * cfg.gabor_wavelengths.size() != kernels_.size()) return false;
        std::size_t i = 0;
        for (double o : cfg.gabor_orientations_deg)
            for (double l : cfg.gabor_wavelengths) {
                if (kernels_[i].orientation_deg != o || kernels_[i].wavelength != l) return false;
                ++i;
            }
        return true;
    }

    /// Per-filter response magnitude images (native resolution of `gray`, no internal resize).
    std::vector<std::vector<double>> responses(const ImageU8& gray) const {
        require(gray.channels() == 1, Errc::ChannelMismatch, "Gabor expects a gray image");
        const int w = gray.width(), h = gray.height(), r = max_half_;
        const int rows = fft::smooth_size(h + 2 * r), cols = fft::smooth_size(w + 2 * r);
        const auto& spectra = kernel_spectra(rows, cols);

        fft::Plan2d plan(rows, cols);
        double* buf = plan.real();
        std::fill(buf, buf + plan.real_size(), 0.0);
        for (int y = 0; y < h + 2 * r; ++y) {
            const int sy = reflect_index(y - r, h);
            for (int x = 0; x < w + 2 * r; ++x)
                buf[static_cast<std::size_t>(y) * cols + x] = gray.at(reflect_index(x - r, w), sy);
        }
        plan.forward();
        const std::size_t nspec = plan.complex_size();
        std::vector<std::complex<double>> image_spec(nspec);
        for (std::size_t i = 0; i < nspec; ++i) image_spec[i] = {plan.spectrum()[i][0], plan.spectrum()[i][1]};

        const double scale = 1.0 / (static_cast<double>(rows) * cols);
        std::vector<std::vector<double>> out;
        out.reserve(kernels_.size());
        for (const auto& ks : spectra) {
            fftw_complex* s = plan.spectrum();
            for (std::size_t i = 0; i < nspec; ++i) {
                const std::complex<double> p = image_spec[i] * std::conj(ks[i]);
                s[i][0] = p.real();
                s[i][1] = p.imag();
            }
            plan.inverse();
            std::vector<double> mag(static_cast<std::size_t>(w) * h);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    mag[static_cast<std::size_t>(y) * w + x] = std::abs(buf[static_cast<std::size_t>(y) * cols + x] * scale);
            out.push_back(std::move(mag));
        }
        return out;
    }

    /// Mean and standard deviation of every response magnitude.
    FeatureBlock features(const ImageU8& gray_in) const {
        require(gray_in.channels() == 1, Errc::ChannelMismatch, "Gabor expects a gray image");
        const ImageU8 gray = input_ > 0 ? resize_bilinear(gray_in, input_, input_) : gray_in;
        const auto resp = responses(gray);
        std::vector<double> out;
        out.reserve(2 * resp.size());
        for (const auto& m : resp) {
            double sum = 0.0;
            for (double v : m) sum += v;
            const double mean = sum / static_cast<double>(m.size());
            double var = 0.0;
            for (double v : m) var += (v - mean) * (v - mean);
            out.push_back(mean);
            out.push_back(std::sqrt(var / static_cast<double>(m.size())));
        }
        return {BlockKind::Gabor, std::move(out)};
    }

private:
    using Spectrum = std::vector<std::complex<double>>;

    const std::vector<Spectrum>& kernel_spectra(int rows, int cols) const {
        std::lock_guard lock(cache_mu_);
        auto key = std::make_pair(rows, cols);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        fft::Plan2d plan(rows, cols);
        std::vector<Spectrum> spectra;
        const int r = max_half_;
        for (const auto& k : kernels_) {
            double* buf = plan.real();
            std::fill(buf, buf + plan.real_size(), 0.0);
            const int size = 2 * k.half + 1, off = r - k.half;
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    buf[static_cast<std::size_t>(y + off) * cols + (x + off)] = k.taps[y * size + x];
            plan.forward();
            Spectrum s(plan.complex_size());
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = {plan.spectrum()[i][0], plan.spectrum()[i][1]};
            spectra.push_back(std::move(s));
        }
        return cache_.emplace(key, std::move(spectra)).first->second;
    }

    double sigma_ratio_;
    double aspect_;
    int input_;
    int max_half_ = 0;
    std::vector<GaborKernel> kernels_;
    mutable std::mutex cache_mu_;
    mutable std::map<std::pair<int, int>, std::vector<Spectrum>> cache_;
};

inline const GaborBank& shared_gabor_bank(const HandcraftedConfig& cfg) {
    static std::mutex mu;
    static std::vector<std::unique_ptr<GaborBank>> banks;
    std::lock_guard lock(mu);
    for (const auto& b : banks)
        if (b->matches(cfg)) return *b;
    banks.push_back(std::make_unique<GaborBank>(cfg));
    return *banks.back();
}

inline FeatureBlock gabor_features(const ImageU8& gray, const HandcraftedConfig& cfg = {}) {
    return shared_gabor_bank(cfg).features(gray);
}

// ---------------------------------------------------------------------------

/// Gray conversion once, then the selected blocks in canonical order LBP, HOG, GABOR.
inline std::vector<FeatureBlock> extract_handcrafted(const ImageU8& img, std::vector<BlockKind> which,
                                                     const HandcraftedConfig& cfg = {}) {
    which = canonical_blocks(std::move(which));
    require(std::find(which.begin(), which.end(), BlockKind::Deep) == which.end(), Errc::InvalidArgument,
            "DEEP features come from an embedding file, not from the image");
    require(!which.empty(), Errc::EmptySelection, "no handcrafted block selected");
    cfg.validate();
    const ImageU8 gray = to_gray(img);
    std::vector<FeatureBlock> out;
    for (BlockKind k : which) {
        switch (k) {
            case BlockKind::Lbp: out.push_back(lbp_histogram(gray, cfg)); break;
            case BlockKind::Hog: out.push_back(hog_descriptor(gray, cfg)); break;
            case BlockKind::Gabor: out.push_back(gabor_features(gray, cfg)); break;
            case BlockKind::Deep: break;
        }
    }
    return out;
}

}  // namespace pvdefect
