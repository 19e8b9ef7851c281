#pragma once
// Raster similarity metrics used as registration quality checks: Pearson
// correlation over all pixels and SSIM with the canonical 11-pixel Gaussian
// window (sigma 1.5, K1 = 0.01, K2 = 0.03). Border windows renormalise over
// the in-bounds support.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "timedrs/common.hpp"

namespace timedrs {

struct Raster {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // row-major

    double at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

namespace detail {

inline void check_pair(const Raster& a, const Raster& b) {
    if (a.width != b.width || a.height != b.height)
        throw ValidationError("raster dimensions differ");
    if (a.width < 8 || a.height < 8)
        throw ValidationError("rasters must be at least 8x8 pixels");
    if (a.pixels.size() != static_cast<std::size_t>(a.width) * static_cast<std::size_t>(a.height) ||
        b.pixels.size() != a.pixels.size())
        throw ValidationError("raster pixel buffer size mismatch");
}

// Separable Gaussian-weighted local mean with border renormalisation. The
// truncated 2-D window stays an outer product of 1-D windows, so the two-pass
// form is exact.
inline std::vector<double> gaussian_mean(const std::vector<double>& img, int w, int h,
                                         const std::vector<double>& kernel) {
    const int r = static_cast<int>(kernel.size()) / 2;
    std::vector<double> tmp(img.size()), tmpw(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0, wsum = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int xx = x + k;
                if (xx < 0 || xx >= w) continue;
                const double g = kernel[static_cast<std::size_t>(k + r)];
                acc += g * img[static_cast<std::size_t>(y) * w + xx];
                wsum += g;
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
            tmpw[static_cast<std::size_t>(y) * w + x] = wsum;
        }
    }
    std::vector<double> out(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0, wsum = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int yy = y + k;
                if (yy < 0 || yy >= h) continue;
                const double g = kernel[static_cast<std::size_t>(k + r)];
                acc += g * tmp[static_cast<std::size_t>(yy) * w + x];
                wsum += g * tmpw[static_cast<std::size_t>(yy) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = acc / wsum;
        }
    }
    return out;
}

} // namespace detail

inline double pearson_correlation(const Raster& a, const Raster& b) {
    detail::check_pair(a, b);
    const std::size_t n = a.pixels.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a.pixels[i];
        mb += b.pixels[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a.pixels[i] - ma;
        const double db = b.pixels[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa <= 0.0 || sbb <= 0.0)
        throw UndefinedStatisticError("Pearson correlation undefined for a constant image");
    return sab / std::sqrt(saa * sbb);
}

inline double structural_similarity(const Raster& a, const Raster& b) {
    detail::check_pair(a, b);
    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    constexpr double kK1 = 0.01, kK2 = 0.03;

    std::vector<double> kernel(kWindow);
    for (int k = 0; k < kWindow; ++k) {
        const double d = static_cast<double>(k - kWindow / 2);
        kernel[static_cast<std::size_t>(k)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    }

    double lo = a.pixels[0], hi = a.pixels[0];
    for (const double v : a.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (const double v : b.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi - lo;
    const double L = range > 0.0 ? range : 1.0;
    const double c1 = (kK1 * L) * (kK1 * L);
    const double c2 = (kK2 * L) * (kK2 * L);

    const int w = a.width, h = a.height;
    const std::size_t n = a.pixels.size();
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a.pixels[i] * a.pixels[i];
        bb[i] = b.pixels[i] * b.pixels[i];
        ab[i] = a.pixels[i] * b.pixels[i];
    }
    const auto mu_a = detail::gaussian_mean(a.pixels, w, h, kernel);
    const auto mu_b = detail::gaussian_mean(b.pixels, w, h, kernel);
    const auto m_aa = detail::gaussian_mean(aa, w, h, kernel);
    const auto m_bb = detail::gaussian_mean(bb, w, h, kernel);
    const auto m_ab = detail::gaussian_mean(ab, w, h, kernel);

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double va = m_aa[i] - mu_a[i] * mu_a[i];
        const double vb = m_bb[i] - mu_b[i] * mu_b[i];
        const double cov = m_ab[i] - mu_a[i] * mu_b[i];
        total += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                 ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(n);
}

struct QualityReport {
    double ssim = 0.0;
    std::optional<double> pcc; // absent when a raster is constant
};

inline QualityReport registration_quality(const Raster& ref, const Raster& moved) {
    QualityReport report;
    report.ssim = structural_similarity(ref, moved);
    try {
        report.pcc = pearson_correlation(ref, moved);
    } catch (const UndefinedStatisticError&) {
        report.pcc = std::nullopt;
    }
    return report;
}

} // namespace timedrs
