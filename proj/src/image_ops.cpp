#include "phsm/image_ops.hpp"

#include "phsm/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace phsm {

ScalarRaster span(const CoherencyImage& img) {
    ScalarRaster out(img.width(), img.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::max(0.0, img.pixels[i].trace().real());
    }
    return out;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    p = std::clamp(p, 0.0, 1.0);
    const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(values.size() - 1)));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    return values[k];
}

PauliRgb pauli_rgb(const CoherencyImage& img, double clip_percentile) {
    if (!(clip_percentile > 0.5 && clip_percentile <= 1.0)) {
        throw Error("clip percentile must lie in (0.5, 1]");
    }
    const int w = img.width();
    const int h = img.height();
    PauliRgb out{ScalarRaster(w, h), ScalarRaster(w, h), ScalarRaster(w, h)};

    constexpr double kNoPower = -std::numeric_limits<double>::infinity();
    auto to_db = [](double v) { return v > 0.0 ? 10.0 * std::log10(v) : kNoPower; };

    std::vector<double> pooled;
    pooled.reserve(3 * img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const Matrix3c& t = img.pixels[i];
        out.r[i] = to_db(t(1, 1).real());
        out.g[i] = to_db(t(2, 2).real());
        out.b[i] = to_db(t(0, 0).real());
        for (double v : {out.r[i], out.g[i], out.b[i]}) {
            if (std::isfinite(v)) pooled.push_back(v);
        }
    }

    double lo = 0.0;
    double hi = 0.0;
    if (!pooled.empty()) {
        lo = *std::min_element(pooled.begin(), pooled.end());
        hi = percentile(pooled, clip_percentile);
    }
    auto normalize = [&](ScalarRaster& ch) {
        for (double& v : ch.data()) {
            if (!std::isfinite(v)) {
                v = 0.0;
            } else if (hi <= lo) {
                v = 1.0;
            } else {
                v = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
            }
        }
    };
    normalize(out.r);
    normalize(out.g);
    normalize(out.b);
    return out;
}

CoherencyImage multilook(const CoherencyImage& img, int az, int rg) {
    if (az < 1 || rg < 1) throw Error("multilook factors must be >= 1");
    if (az > img.height() || rg > img.width()) throw Error("block exceeds image");
    const int ow = img.width() / rg;
    const int oh = img.height() / az;
    CoherencyImage out;
    out.looks = img.looks * az * rg;
    out.pixels = Raster<Matrix3c>(ow, oh, Matrix3c::Zero());
    const double inv = 1.0 / (static_cast<double>(az) * rg);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            Matrix3c sum = Matrix3c::Zero();
            for (int dy = 0; dy < az; ++dy) {
                for (int dx = 0; dx < rg; ++dx) {
                    sum += img.pixels.at(ox * rg + dx, oy * az + dy);
                }
            }
            out.pixels.at(ox, oy) = hermitian_part(sum * inv);
        }
    }
    return out;
}

bool is_valid(const CoherencyImage& img, double rel_tol) {
    if (img.looks < 1.0) return false;
    for (const Matrix3c& t : img.pixels.data()) {
        if (!is_psd(t, rel_tol)) return false;
    }
    return true;
}

}  // namespace phsm
