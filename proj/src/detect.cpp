#include "phsm/detect.hpp"

#include "phsm/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace phsm::detect {

double OffsetSet::equivalent_count() const {
    double sq = 0.0;
    for (double w : weights) sq += w * w;
    return sq > 0.0 ? 1.0 / sq : 0.0;
}

namespace {

void normalize(OffsetSet& set) {
    double sum = 0.0;
    for (double w : set.weights) sum += w;
    for (double& w : set.weights) w /= sum;
}

OffsetSet mirrored(const OffsetSet& set) {
    OffsetSet out = set;
    for (Pixel& p : out.offsets) p = {-p.x, -p.y};
    return out;
}

double gauss(double d, double sigma) { return std::exp(-d * d / (2.0 * sigma * sigma)); }

Filter build_filter(double s, int scale_index, int orientation_index, int orientations) {
    Filter f;
    f.scale_index = scale_index;
    f.orientation_index = orientation_index;
    f.orientation_deg = 180.0 * orientation_index / orientations;

    const double sigma_along = s;
    const double sigma_across = s / 3.0;
    const double half_along = 3.0 * sigma_along;
    const double depth = 3.0 * sigma_across;
    const double strip = std::floor(s / 2.0);  // center strip half-width (pixels beyond the axis row)
    const double theta = kPi * orientation_index / orientations;
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    const int reach = static_cast<int>(std::ceil(half_along + strip + depth + 1.0));

    for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
            const double u = dx * c + dy * sn;
            const double v = -dx * sn + dy * c;
            if (std::abs(u) > half_along + 1e-9) continue;
            const double wu = gauss(u, sigma_along);
            if (v > 0.5 && v <= 0.5 + depth + 1e-9) {
                f.side1.offsets.push_back({dx, dy});
                f.side1.weights.push_back(wu * gauss(v - 1.0, sigma_across));
            }
            if (std::abs(v) <= strip + 0.5) {
                f.center.offsets.push_back({dx, dy});
                f.center.weights.push_back(wu * gauss(v, sigma_across));
            }
            if (v > strip + 0.5 && v <= strip + 0.5 + depth + 1e-9) {
                f.flank1.offsets.push_back({dx, dy});
                f.flank1.weights.push_back(wu * gauss(v - (strip + 1.0), sigma_across));
            }
        }
    }
    normalize(f.side1);
    normalize(f.center);
    normalize(f.flank1);
    f.side2 = mirrored(f.side1);
    f.flank2 = mirrored(f.flank1);
    return f;
}

}  // namespace

FilterBank::FilterBank(std::vector<double> scales, int orientations)
    : scales_(std::move(scales)), orientations_(orientations) {
    if (scales_.empty()) throw Error("filter bank needs at least one scale");
    if (orientations_ < 1) throw Error("filter bank needs at least one orientation");
    for (double s : scales_) {
        if (!(s >= 1.0)) throw Error("filter scale must be >= 1");
    }
    for (std::size_t si = 0; si < scales_.size(); ++si) {
        for (int k = 0; k < orientations_; ++k) {
            filters_.push_back(build_filter(scales_[si], static_cast<int>(si), k, orientations_));
        }
    }
    for (const Filter& f : filters_) {
        for (const OffsetSet* set : {&f.side1, &f.center, &f.flank1}) {
            if (set->offsets.empty()) throw Error("degenerate filter");
            for (const Pixel& p : set->offsets) reach_ = std::max({reach_, std::abs(p.x), std::abs(p.y)});
        }
    }
}

const Filter& FilterBank::filter(int scale_index, int orientation_index) const {
    return filters_.at(static_cast<std::size_t>(scale_index) * orientations_ + orientation_index);
}

EnergyField::EnergyField(int width, int height, EnergyKind k, int orientations)
    : energy(width, height, 0.0), orientation(width, height, -1), scale(width, height, -1),
      kind(k), orientation_count(orientations) {}

double EnergyField::orientation_deg(int x, int y) const {
    const int k = orientation.at(x, y);
    return k < 0 ? 0.0 : 180.0 * k / orientation_count;
}

int mirror(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

Matrix3c weighted_mean_coherency(const CoherencyImage& img, const OffsetSet& set, Pixel center) {
    if (set.offsets.empty()) throw Error("degenerate filter");
    Matrix3c z = Matrix3c::Zero();
    for (std::size_t i = 0; i < set.offsets.size(); ++i) {
        const int x = mirror(center.x + set.offsets[i].x, img.width());
        const int y = mirror(center.y + set.offsets[i].y, img.height());
        z += set.weights[i] * img.pixels.at(x, y);
    }
    return hermitian_part(z);
}

double wishart_rho(double n, double m, int p) {
    const double pp = static_cast<double>(p);
    return 1.0 - (2.0 * pp * pp - 1.0) / (6.0 * pp) * (1.0 / n + 1.0 / m - 1.0 / (n + m));
}

namespace {

struct LogDets {
    double zi, zj, sum;
};

LogDets log_dets(const Matrix3c& zi, const Matrix3c& zj) {
    const Matrix3c s = zi + zj;
    double di = hermitian_det(zi);
    double dj = hermitian_det(zj);
    double ds = hermitian_det(s);
    if (di > kDetFloor && dj > kDetFloor && ds > kDetFloor && std::isfinite(ds)) {
        return {std::log(di), std::log(dj), std::log(ds)};
    }
    // Load both matrices with the same amount so the pooled matrix stays their sum.
    double scale = std::max(zi.trace().real(), zj.trace().real()) / 3.0;
    if (!(scale > 0.0)) scale = 1.0;
    const Matrix3c load = Matrix3c::Identity() * (kLoadingFactor * scale);
    const Matrix3c li = zi + load;
    const Matrix3c lj = zj + load;
    return {loaded_log_det(li), loaded_log_det(lj), loaded_log_det(li + lj)};
}

}  // namespace

double wishart_log_ratio(const Matrix3c& zi, const Matrix3c& zj, double n, double m, int p) {
    if (!(n >= 1.0) || !(m >= 1.0)) throw Error("look counts must be >= 1");
    const LogDets d = log_dets(zi, zj);
    const double pp = static_cast<double>(p);
    // Grouped per region so that identical inputs cancel term by term.
    const double ri = d.zi - d.sum + pp * std::log((n + m) / n);
    const double rj = d.zj - d.sum + pp * std::log((n + m) / m);
    return n * ri + m * rj;
}

double wishart_energy(const Matrix3c& zi, const Matrix3c& zj, double n, double m, int p) {
    return std::max(0.0, -2.0 * wishart_rho(n, m, p) * wishart_log_ratio(zi, zj, n, m, p));
}

double effective_looks(const OffsetSet& set, double looks) {
    return std::max(1.0, std::round(looks * set.equivalent_count()));
}

namespace {

double vector_distance(const Matrix3c& a, const Matrix3c& b) {
    const HermitianVector va = to_vector(a);
    const HermitianVector vb = to_vector(b);
    double sq = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) sq += (va[i] - vb[i]) * (va[i] - vb[i]);
    return std::sqrt(sq);
}

void keep_max(PixelEnergy& best, double value, const Filter& f) {
    if (best.orientation_index < 0 || value > best.value) {
        best = {value, f.orientation_index, f.scale_index};
    }
}

}  // namespace

PixelEnergy cfar_edge_energy(const CoherencyImage& img, const FilterBank& bank, Pixel p) {
    PixelEnergy best;
    for (const Filter& f : bank.filters()) {
        const double n = effective_looks(f.side1, img.looks);
        const Matrix3c a = weighted_mean_coherency(img, f.side1, p);
        const Matrix3c b = weighted_mean_coherency(img, f.side2, p);
        keep_max(best, wishart_energy(a, b, n, n), f);
    }
    return best;
}

PixelEnergy cfar_line_energy(const CoherencyImage& img, const FilterBank& bank, Pixel p) {
    PixelEnergy best;
    for (const Filter& f : bank.filters()) {
        const double nc = effective_looks(f.center, img.looks);
        const double nf = effective_looks(f.flank1, img.looks);
        const Matrix3c c = weighted_mean_coherency(img, f.center, p);
        const Matrix3c a = weighted_mean_coherency(img, f.flank1, p);
        const Matrix3c b = weighted_mean_coherency(img, f.flank2, p);
        keep_max(best, std::min(wishart_energy(c, a, nc, nf), wishart_energy(c, b, nc, nf)), f);
    }
    return best;
}

GradientEnergy gradient_energy(const CoherencyImage& img, const FilterBank& bank, Pixel p) {
    GradientEnergy out;
    for (const Filter& f : bank.filters()) {
        const Matrix3c a = weighted_mean_coherency(img, f.side1, p);
        const Matrix3c b = weighted_mean_coherency(img, f.side2, p);
        keep_max(out.edge, std::log(kGradientEpsilon + vector_distance(a, b)), f);
        const Matrix3c c = weighted_mean_coherency(img, f.center, p);
        const Matrix3c l = weighted_mean_coherency(img, f.flank1, p);
        const Matrix3c r = weighted_mean_coherency(img, f.flank2, p);
        const double g = std::min(std::log(kGradientEpsilon + vector_distance(c, l)),
                                  std::log(kGradientEpsilon + vector_distance(c, r)));
        keep_max(out.line, g, f);
    }
    return out;
}

namespace {

constexpr int kDim = 9;

/// Mirror-padded, pixel-interleaved copy of the 9 real channels.
struct PaddedChannels {
    int pad = 0;
    int stride = 0;  // padded width
    std::vector<double> data;

    PaddedChannels(const CoherencyImage& img, int pad_) : pad(pad_), stride(img.width() + 2 * pad_) {
        const int ph = img.height() + 2 * pad;
        data.resize(static_cast<std::size_t>(stride) * ph * kDim);
        for (int y = 0; y < ph; ++y) {
            const int sy = mirror(y - pad, img.height());
            for (int x = 0; x < stride; ++x) {
                const int sx = mirror(x - pad, img.width());
                const HermitianVector v = to_vector(img.pixels.at(sx, sy));
                std::copy(v.begin(), v.end(), data.begin() + (static_cast<std::ptrdiff_t>(y) * stride + x) * kDim);
            }
        }
    }
};

/// Weighted means of one offset set for every pixel, 9 values per pixel.
void filter_means(const PaddedChannels& src, int width, int height, const OffsetSet& set, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(width) * height * kDim, 0.0);
    const std::size_t row_len = static_cast<std::size_t>(width) * kDim;
    for (std::size_t t = 0; t < set.offsets.size(); ++t) {
        const double w = set.weights[t];
        const Pixel o = set.offsets[t];
        for (int y = 0; y < height; ++y) {
            const double* in = src.data.data() +
                (static_cast<std::ptrdiff_t>(y + src.pad + o.y) * src.stride + (src.pad + o.x)) * kDim;
            double* dst = out.data() + static_cast<std::size_t>(y) * row_len;
            for (std::size_t j = 0; j < row_len; ++j) dst[j] += w * in[j];
        }
    }
}

Matrix3c matrix_at(const std::vector<double>& means, std::size_t pixel) {
    HermitianVector v;
    std::copy_n(means.begin() + static_cast<std::ptrdiff_t>(pixel * kDim), kDim, v.begin());
    return from_vector(v);
}

double distance_at(const std::vector<double>& a, const std::vector<double>& b, std::size_t pixel) {
    double sq = 0.0;
    for (int c = 0; c < kDim; ++c) {
        const double d = a[pixel * kDim + c] - b[pixel * kDim + c];
        sq += d * d;
    }
    return std::sqrt(sq);
}

void update(EnergyField& field, std::size_t i, double value, const Filter& f) {
    if (field.orientation[i] < 0 || value > field.energy[i]) {
        field.energy[i] = value;
        field.orientation[i] = f.orientation_index;
        field.scale[i] = f.scale_index;
    }
}

}  // namespace

DetectorFields detect_fields(const CoherencyImage& img, const FilterBank& bank, const DetectorOptions& opts) {
    const int w = img.width();
    const int h = img.height();
    const int k = bank.orientation_count();
    DetectorFields out{EnergyField(w, h, EnergyKind::Edge, k), EnergyField(w, h, EnergyKind::Line, k),
                       EnergyField(w, h, EnergyKind::Edge, k), EnergyField(w, h, EnergyKind::Line, k)};
    if (w == 0 || h == 0) return out;

    const PaddedChannels src(img, bank.reach());
    std::vector<double> s1, s2, cs, f1, f2;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    auto grad = [&](double norm) {
        return opts.gradient_log ? std::log(kGradientEpsilon + norm) - std::log(kGradientEpsilon) : norm;
    };

    for (const Filter& f : bank.filters()) {
        filter_means(src, w, h, f.side1, s1);
        filter_means(src, w, h, f.side2, s2);
        filter_means(src, w, h, f.center, cs);
        filter_means(src, w, h, f.flank1, f1);
        filter_means(src, w, h, f.flank2, f2);
        const double n_side = effective_looks(f.side1, img.looks);
        const double n_center = effective_looks(f.center, img.looks);
        const double n_flank = effective_looks(f.flank1, img.looks);

        for (std::size_t i = 0; i < n; ++i) {
            const Matrix3c a = matrix_at(s1, i);
            const Matrix3c b = matrix_at(s2, i);
            const Matrix3c c = matrix_at(cs, i);
            const Matrix3c l = matrix_at(f1, i);
            const Matrix3c r = matrix_at(f2, i);
            update(out.cfar_edge, i, wishart_energy(a, b, n_side, n_side), f);
            update(out.cfar_line, i,
                   std::min(wishart_energy(c, l, n_center, n_flank), wishart_energy(c, r, n_center, n_flank)), f);
            update(out.grad_edge, i, grad(distance_at(s1, s2, i)), f);
            update(out.grad_line, i, std::min(grad(distance_at(cs, f1, i)), grad(distance_at(cs, f2, i))), f);
        }
    }
    return out;
}

ScalarRaster normalize_unit(const ScalarRaster& e, double floor_quantile) {
    ScalarRaster out(e.width(), e.height(), 0.0);
    if (e.empty()) return out;
    const double hi = *std::max_element(e.data().begin(), e.data().end());
    const double lo = percentile(e.data(), floor_quantile);
    const double range = hi - lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = std::clamp((e[i] - lo) / range, 0.0, 1.0);
    return out;
}

EnergyField fuse_energy(const EnergyField& cfar, const EnergyField& grad, double floor_quantile) {
    if (!cfar.energy.same_shape(grad.energy) || cfar.kind != grad.kind) {
        throw Error("fuse_energy: fields differ in shape or kind");
    }
    const ScalarRaster a = normalize_unit(cfar.energy, floor_quantile);
    const ScalarRaster b = normalize_unit(grad.energy, floor_quantile);
    EnergyField out(cfar.energy.width(), cfar.energy.height(), cfar.kind, cfar.orientation_count);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool from_cfar = a[i] >= b[i];
        const EnergyField& src = from_cfar ? cfar : grad;
        out.energy[i] = from_cfar ? a[i] : b[i];
        if (out.energy[i] > 0.0) {
            out.orientation[i] = src.orientation[i];
            out.scale[i] = src.scale[i];
        }
    }
    return out;
}

SketchSource sketch_source(const EnergyField& fused_edge, const EnergyField& fused_line, bool with_lines) {
    if (!fused_edge.energy.same_shape(fused_line.energy)) throw Error("sketch_source: shape mismatch");
    SketchSource out{fused_edge, nonmax_suppress(fused_edge)};
    if (!with_lines) return out;
    const MaskRaster line_mask = nonmax_suppress(fused_line);
    for (std::size_t i = 0; i < out.edges.size(); ++i) {
        if (line_mask[i] && fused_line.energy[i] > fused_edge.energy[i]) {
            out.edges[i] = 1;
            out.field.energy[i] = fused_line.energy[i];
            out.field.orientation[i] = fused_line.orientation[i];
            out.field.scale[i] = fused_line.scale[i];
        }
    }
    return out;
}

Pixel normal_step(double orientation_deg) {
    const double t = orientation_deg * kPi / 180.0;
    return {static_cast<int>(std::lround(-std::sin(t))), static_cast<int>(std::lround(std::cos(t)))};
}

MaskRaster nonmax_suppress(const EnergyField& field) {
    const int w = field.energy.width();
    const int h = field.energy.height();
    MaskRaster out(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double e = field.energy.at(x, y);
            if (!(e > 0.0)) continue;
            const Pixel nstep = normal_step(field.orientation_deg(x, y));
            bool keep = true;
            for (int sgn : {-1, 1}) {
                const int qx = x + sgn * nstep.x;
                const int qy = y + sgn * nstep.y;
                if (field.energy.contains(qx, qy) && !(e > field.energy.at(qx, qy))) keep = false;
            }
            out.at(x, y) = keep ? 1 : 0;
        }
    }
    return out;
}

}  // namespace phsm::detect
