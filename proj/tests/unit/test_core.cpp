#include "oracles.hpp"

#include "phsm/hermitian.hpp"
#include "phsm/image_ops.hpp"
#include "phsm/io.hpp"
#include "phsm/synthetic.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

namespace fs = std::filesystem;
using namespace phsm;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("phsm_core_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

CoherencyImage constant_image(int w, int h, const Matrix3c& t, double looks = 4.0) {
    CoherencyImage img;
    img.pixels = Raster<Matrix3c>(w, h, t);
    img.looks = looks;
    return img;
}

}  // namespace

TEST(Hermitian, VectorRoundTrip) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Matrix3c t = oracle::random_psd(rng);
        EXPECT_TRUE(from_vector(to_vector(t)).isApprox(t, 1e-14));
    }
}

TEST(Hermitian, DeterminantMatchesLu) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        const Matrix3c t = oracle::random_psd(rng, 0.1 + i);
        const double lu = t.partialPivLu().determinant().real();
        EXPECT_NEAR(hermitian_det(t), lu, 1e-10 * std::abs(lu));
    }
}

TEST(Hermitian, LoadedLogDetFiniteOnSingular) {
    const Matrix3c t = Matrix3c(Eigen::Vector3cd(1.0, 0.0, 0.0).asDiagonal());
    EXPECT_TRUE(std::isfinite(loaded_log_det(t)));
    EXPECT_TRUE(loaded_inverse(t).allFinite());
}

TEST(Hermitian, PsdChecks) {
    Matrix3c t = Matrix3c::Identity();
    EXPECT_TRUE(is_psd(t));
    t(2, 2) = -0.5;
    EXPECT_FALSE(is_psd(t));
    Matrix3c nh = Matrix3c::Identity();
    nh(0, 1) = {0.3, 0.1};
    EXPECT_FALSE(is_hermitian(nh));
    EXPECT_TRUE(is_hermitian(hermitian_part(nh)));
}

TEST(ImageOps, SpanIsTrace) {
    std::mt19937_64 rng(5);
    CoherencyImage img = constant_image(4, 3, Matrix3c::Identity());
    for (auto& t : img.pixels.data()) t = oracle::random_psd(rng);
    const ScalarRaster s = span(img);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_DOUBLE_EQ(s[i], img.pixels[i].trace().real());
}

TEST(ImageOps, MultilookAveragesBlocks) {
    std::mt19937_64 rng(6);
    CoherencyImage img = constant_image(6, 4, Matrix3c::Identity(), 1.0);
    for (auto& t : img.pixels.data()) t = oracle::random_psd(rng);
    const CoherencyImage ml = multilook(img, 2, 3);
    ASSERT_EQ(ml.width(), 2);
    ASSERT_EQ(ml.height(), 2);
    EXPECT_DOUBLE_EQ(ml.looks, 6.0);
    Matrix3c sum = Matrix3c::Zero();
    for (int y = 2; y < 4; ++y)
        for (int x = 3; x < 6; ++x) sum += img.pixels.at(x, y);
    EXPECT_TRUE(ml.pixels.at(1, 1).isApprox(sum / 6.0, 1e-12));
    EXPECT_THROW(multilook(img, 0, 1), Error);
}

TEST(ImageOps, PauliRgbInUnitRange) {
    std::mt19937_64 rng(7);
    CoherencyImage img = constant_image(8, 8, Matrix3c::Identity());
    for (auto& t : img.pixels.data()) t = oracle::random_psd(rng);
    const PauliRgb p = pauli_rgb(img);
    for (const ScalarRaster* c : {&p.r, &p.g, &p.b})
        for (double v : c->data()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
}

TEST(ImageOps, PercentileIndexRule) {
    EXPECT_DOUBLE_EQ(percentile({5, 1, 4, 2, 3}, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(percentile({5, 1, 4, 2, 3}, 1.0), 5.0);
    EXPECT_DOUBLE_EQ(percentile({5, 1, 4, 2, 3}, 0.0), 1.0);
}

TEST(ImageOps, ValidityDetectsNonPsd) {
    CoherencyImage img = constant_image(2, 2, Matrix3c::Identity());
    EXPECT_TRUE(is_valid(img));
    img.pixels.at(1, 1)(0, 0) = -1.0;
    EXPECT_FALSE(is_valid(img));
}

TEST(Io, ContainerRoundTripIsExact) {
    const auto dir = temp_dir("container");
    SceneSpec spec;
    spec.size = 32;
    const SyntheticScene s = make_scene(spec);
    io::save_container(dir / "a.phsm", s.image);
    const CoherencyImage back = io::load_container(dir / "a.phsm");
    EXPECT_EQ(back.looks, s.image.looks);
    EXPECT_TRUE(back.pixels == s.image.pixels);
}

TEST(Io, T3DirectoryRoundTripAtFloatPrecision) {
    const auto dir = temp_dir("t3");
    SceneSpec spec;
    spec.size = 16;
    const SyntheticScene s = make_scene(spec);
    io::save_t3_dir(dir / "T3", s.image);
    const CoherencyImage back = io::load_t3_dir(dir / "T3");
    EXPECT_DOUBLE_EQ(back.looks, s.image.looks);
    for (std::size_t i = 0; i < back.pixels.size(); ++i) {
        EXPECT_TRUE(back.pixels[i].isApprox(s.image.pixels[i], 1e-6));
    }
}

TEST(Io, LabelsAndScalarsRoundTrip) {
    const auto dir = temp_dir("labels");
    LabelRaster l(5, 3);
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<int>(i) - 4;
    io::save_labels(dir / "l.labels", l);
    EXPECT_TRUE(io::load_labels(dir / "l.labels") == l);
    ScalarRaster s(3, 5);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.1 * static_cast<double>(i);
    io::save_scalar(dir / "s.scalar", s);
    EXPECT_TRUE(io::load_scalar(dir / "s.scalar") == s);
}

TEST(Io, RejectsWrongMagic) {
    const auto dir = temp_dir("magic");
    io::write_text(dir / "junk", "not a raster at all");
    EXPECT_THROW(io::load_labels(dir / "junk"), Error);
    EXPECT_THROW(io::load_container(dir / "junk"), Error);
    EXPECT_THROW(io::load_container(dir / "missing"), Error);
}

TEST(Io, PpmRoundTrip) {
    const auto dir = temp_dir("ppm");
    Raster<io::Rgb> rgb(4, 2);
    for (std::size_t i = 0; i < rgb.size(); ++i)
        rgb[i] = {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(2 * i), static_cast<std::uint8_t>(255 - i)};
    io::save_ppm(dir / "a.ppm", rgb);
    EXPECT_TRUE(io::load_ppm(dir / "a.ppm") == rgb);
}

TEST(Synthetic, DeterministicInSeed) {
    SceneSpec spec;
    spec.size = 32;
    spec.seed = 11;
    const SyntheticScene a = make_scene(spec);
    const SyntheticScene b = make_scene(spec);
    EXPECT_TRUE(a.image.pixels == b.image.pixels);
    spec.seed = 12;
    EXPECT_FALSE(make_scene(spec).image.pixels == a.image.pixels);
}

TEST(Synthetic, SampleMeanApproachesClassCovariance) {
    LabelRaster layout(64, 64, 0);
    const Matrix3c c = targets::vegetation(2.0);
    const SyntheticScene s = sample_wishart_scene(layout, {c}, 4, 9);
    Matrix3c mean = Matrix3c::Zero();
    for (const auto& t : s.image.pixels.data()) mean += t;
    mean /= static_cast<double>(s.image.pixels.size());
    EXPECT_LT((mean - c).norm() / c.norm(), 0.05);
    EXPECT_TRUE(is_valid(s.image));
}

TEST(Synthetic, RejectsInvalidCovariance) {
    LabelRaster layout(4, 4, 0);
    Matrix3c bad = Matrix3c::Identity();
    bad(1, 1) = -1.0;
    EXPECT_THROW(sample_wishart_scene(layout, {bad}, 4, 1), Error);
}

TEST(Synthetic, MosaicClassCountsMatchLayout) {
    SceneSpec spec;
    spec.kind = SceneSpec::Kind::Mosaic;
    spec.size = 96;
    spec.tile = 32;
    spec.classes = 3;
    const SyntheticScene s = make_scene(spec);
    std::vector<int> counts(3, 0);
    for (auto v : s.truth.data()) ++counts[static_cast<std::size_t>(v)];
    // 3x3 tiles, class (tx + 2 ty) mod 3: each class owns three tiles.
    for (int c : counts) EXPECT_EQ(c, 3 * 32 * 32);
}

TEST(Synthetic, ZeroContrastEdgeHasIdenticalClasses) {
    SceneSpec spec;
    spec.contrast_db = 0.0;
    const SyntheticScene s = make_scene(spec);
    ASSERT_EQ(s.class_matrices.size(), 2u);
    EXPECT_TRUE(s.class_matrices[0].isApprox(s.class_matrices[1], 1e-12));
    EXPECT_NE(s.truth.at(0, 0), s.truth.at(spec.size - 1, 0));
}

TEST(Synthetic, CompositeTruthClasses) {
    SceneSpec spec;
    spec.kind = SceneSpec::Kind::Composite;
    const SyntheticScene s = make_scene(spec);
    const CompositeGeometry g = composite_geometry(spec.size, spec.line_width);
    EXPECT_EQ(s.truth.at(g.urban_x0 + 1, g.urban_y0 + 1), kUrban);
    EXPECT_EQ(s.truth.at((g.line_x0 + g.line_x1) / 2, g.line_y0), kLine);
    EXPECT_EQ(s.truth.at(spec.size - 2, 2), kBackground);
}
