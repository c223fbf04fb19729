#include "phsm/synthetic.hpp"

#include "phsm/hermitian.hpp"
#include "phsm/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace phsm {

namespace {

Matrix3c with_trace(Matrix3c t, double power) {
    return t * (power / t.trace().real());
}

Matrix3c hermitian(double t11, double t22, double t33, Complex t12, Complex t13, Complex t23) {
    Matrix3c t;
    t << t11, t12, t13,
         std::conj(t12), t22, t23,
         std::conj(t13), std::conj(t23), t33;
    return t;
}

}  // namespace

namespace targets {

Matrix3c surface(double power) {
    return with_trace(hermitian(1.0, 0.08, 0.02, {0.05, 0.0}, {0.0, 0.0}, {0.0, 0.0}), power);
}

Matrix3c dihedral(double power) {
    return with_trace(hermitian(0.1, 1.0, 0.05, {0.05, 0.0}, {0.0, 0.0}, {0.0, 0.0}), power);
}

Matrix3c volume(double power) {
    return with_trace(hermitian(0.5, 0.25, 0.25, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}), power);
}

Matrix3c vegetation(double power) {
    return with_trace(hermitian(0.6, 0.3, 0.1, {0.1, 0.02}, {0.02, 0.0}, {0.01, 0.0}), power);
}

}  // namespace targets

double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }

SyntheticScene sample_wishart_scene(const LabelRaster& layout,
                                    const std::vector<Matrix3c>& class_matrices,
                                    int looks, std::uint64_t seed) {
    if (looks < 1) throw Error("looks must be >= 1");

    // Cholesky factors with a trace-relative jitter so rank-deficient targets
    // (pure single-mechanism classes) still factor; zero classes stay zero.
    std::vector<Matrix3c> factors;
    factors.reserve(class_matrices.size());
    for (const Matrix3c& c : class_matrices) {
        if (!is_psd(c, 1e-9)) throw Error("invalid covariance");
        const Matrix3c h = hermitian_part(c);
        const double tr = h.trace().real();
        if (tr <= 0.0) {
            factors.push_back(Matrix3c::Zero());
            continue;
        }
        Matrix3c jittered = h;
        for (int i = 0; i < 3; ++i) jittered(i, i) += 1e-12 * tr / 3.0;
        Eigen::LLT<Matrix3c> llt(jittered);
        if (llt.info() != Eigen::Success) throw Error("invalid covariance");
        factors.push_back(llt.matrixL());
    }

    SyntheticScene scene;
    scene.layout = layout;
    scene.truth = layout;
    scene.class_matrices = class_matrices;
    scene.seed = seed;
    scene.image.looks = looks;
    scene.image.pixels = Raster<Matrix3c>(layout.width(), layout.height(), Matrix3c::Zero());

    const double inv_looks = 1.0 / looks;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int y = 0; y < layout.height(); ++y) {
        for (int x = 0; x < layout.width(); ++x) {
            const std::int32_t cls = layout.at(x, y);
            if (cls < 0 || static_cast<std::size_t>(cls) >= factors.size()) {
                throw Error("layout label has no class matrix");
            }
            PixelRng rng(seed, static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
            Matrix3c acc = Matrix3c::Zero();
            for (int k = 0; k < looks; ++k) {
                Eigen::Vector3cd w;
                for (int i = 0; i < 3; ++i) {
                    const double re = rng.normal() * inv_sqrt2;
                    const double im = rng.normal() * inv_sqrt2;
                    w(i) = Complex(re, im);
                }
                const Eigen::Vector3cd z = factors[static_cast<std::size_t>(cls)] * w;
                acc += z * z.adjoint();
            }
            scene.image.pixels.at(x, y) = hermitian_part(acc * inv_looks);
        }
    }
    return scene;
}

SceneSpec::Kind parse_scene_kind(const std::string& name) {
    if (name == "edge") return SceneSpec::Kind::TwoClassEdge;
    if (name == "line") return SceneSpec::Kind::BrightLine;
    if (name == "dotgrid") return SceneSpec::Kind::DotGrid;
    if (name == "mosaic") return SceneSpec::Kind::Mosaic;
    if (name == "composite") return SceneSpec::Kind::Composite;
    if (name == "uniform") return SceneSpec::Kind::Uniform;
    throw Error("unknown scene kind: " + name);
}

std::string scene_kind_name(SceneSpec::Kind kind) {
    switch (kind) {
        case SceneSpec::Kind::TwoClassEdge: return "edge";
        case SceneSpec::Kind::BrightLine: return "line";
        case SceneSpec::Kind::DotGrid: return "dotgrid";
        case SceneSpec::Kind::Mosaic: return "mosaic";
        case SceneSpec::Kind::Composite: return "composite";
        case SceneSpec::Kind::Uniform: return "uniform";
    }
    return "unknown";
}

CompositeGeometry composite_geometry(int size, int line_width) {
    CompositeGeometry g{};
    g.block = 7;
    g.period = 9;
    const int margin = size / 16;
    const int blocks = std::max(1, (size / 2) / g.period);
    g.urban_x0 = margin;
    g.urban_y0 = margin;
    g.urban_x1 = margin + blocks * g.period - (g.period - g.block);
    g.urban_y1 = g.urban_x1;
    g.line_y0 = size * 5 / 8;
    g.line_y1 = g.line_y0 + line_width;
    g.line_x0 = margin;
    g.line_x1 = size - margin;
    return g;
}

namespace {

void paint_urban(LabelRaster& layout, LabelRaster& truth, const CompositeGeometry& g,
                 std::int32_t roof, std::int32_t street, std::int32_t urban_truth) {
    for (int y = g.urban_y0; y < g.urban_y1; ++y) {
        for (int x = g.urban_x0; x < g.urban_x1; ++x) {
            const bool on_roof = (x - g.urban_x0) % g.period < g.block && (y - g.urban_y0) % g.period < g.block;
            layout.at(x, y) = on_roof ? roof : street;
            truth.at(x, y) = urban_truth;
        }
    }
}

}  // namespace

SyntheticScene make_scene(const SceneSpec& spec) {
    if (spec.size < 16) throw Error("scene size must be >= 16");
    if (spec.looks < 1) throw Error("looks must be >= 1");
    const int n = spec.size;
    const double contrast = db_to_ratio(spec.contrast_db);
    LabelRaster layout(n, n, 0);
    LabelRaster truth;
    std::vector<Matrix3c> classes;

    switch (spec.kind) {
        case SceneSpec::Kind::Uniform: {
            classes = {targets::vegetation(1.0)};
            break;
        }
        case SceneSpec::Kind::TwoClassEdge: {
            classes = {targets::vegetation(1.0), targets::vegetation(contrast)};
            for (int y = 0; y < n; ++y)
                for (int x = n / 2; x < n; ++x) layout.at(x, y) = 1;
            break;
        }
        case SceneSpec::Kind::BrightLine: {
            if (spec.line_width < 1) throw Error("line width must be >= 1");
            classes = {targets::vegetation(1.0), targets::surface(contrast)};
            const int y0 = n / 2 - spec.line_width / 2;
            for (int y = y0; y < y0 + spec.line_width; ++y)
                for (int x = n / 16; x < n - n / 16; ++x) layout.at(x, y) = 1;
            break;
        }
        case SceneSpec::Kind::Mosaic: {
            if (spec.classes < 2 || spec.classes > 4) throw Error("mosaic supports 2..4 classes");
            if (spec.tile < 1) throw Error("tile must be >= 1");
            const std::vector<Matrix3c> pool = {targets::surface(1.0), targets::dihedral(contrast),
                                                targets::volume(std::sqrt(contrast)),
                                                targets::vegetation(1.0 / contrast)};
            classes.assign(pool.begin(), pool.begin() + spec.classes);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    layout.at(x, y) = (x / spec.tile + 2 * (y / spec.tile)) % spec.classes;
            break;
        }
        case SceneSpec::Kind::DotGrid:
        case SceneSpec::Kind::Composite: {
            const CompositeGeometry g = composite_geometry(n, spec.line_width);
            // 0 background, 1 roof, 2 street, 3 line, 4 water
            classes = {targets::vegetation(1.0), targets::dihedral(contrast),
                       targets::surface(1.0 / contrast), targets::surface(contrast),
                       targets::surface(1.0 / contrast)};
            truth = LabelRaster(n, n, kBackground);
            paint_urban(layout, truth, g, 1, 2, kUrban);
            if (spec.kind == SceneSpec::Kind::Composite) {
                for (int y = g.line_y0; y < g.line_y1; ++y) {
                    for (int x = g.line_x0; x < g.line_x1; ++x) {
                        layout.at(x, y) = 3;
                        truth.at(x, y) = kLine;
                    }
                }
                const int margin = n / 16;
                for (int y = n * 25 / 32; y < n - margin; ++y) {
                    for (int x = margin; x < n - margin; ++x) {
                        layout.at(x, y) = 4;
                        truth.at(x, y) = kWater;
                    }
                }
            }
            break;
        }
    }

    SyntheticScene scene = sample_wishart_scene(layout, classes, spec.looks, spec.seed);
    if (!truth.empty()) scene.truth = truth;
    return scene;
}

}  // namespace phsm
