#include "oracles.hpp"

#include "phsm/segment.hpp"
#include "phsm/synthetic.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

using namespace phsm;
using namespace phsm::segment;
using sketch::make_segment;

namespace {

CoherencyImage constant_image(int w, int h, const Matrix3c& t, double looks = 4.0) {
    CoherencyImage img;
    img.pixels = Raster<Matrix3c>(w, h, t);
    img.looks = looks;
    return img;
}

RegionStats stats_of(const Matrix3c& mean, std::int64_t n) {
    RegionStats r;
    r.count = n;
    r.sum = mean * static_cast<double>(n);
    return r;
}

/// SC written directly from pooled means.
double sc_oracle(const Matrix3c& zi, double ni, const Matrix3c& zj, double nj, double looks) {
    const Matrix3c zij = (ni * zi + nj * zj) / (ni + nj);
    return looks * ((ni + nj) * oracle::log_det(zij) - ni * oracle::log_det(zi) - nj * oracle::log_det(zj));
}

/// Purity: share of pixels whose region's majority truth class matches their own.
double purity(const LabelRaster& regions, const LabelRaster& truth) {
    std::map<int, std::map<int, int>> votes;
    for (std::size_t i = 0; i < regions.size(); ++i) ++votes[regions[i]][truth[i]];
    double agree = 0.0;
    for (const auto& [r, v] : votes) {
        int best = 0;
        for (const auto& [c, n] : v) best = std::max(best, n);
        agree += best;
    }
    return agree / static_cast<double>(regions.size());
}

LabelRaster block_grid(int w, int h, int block) {
    LabelRaster ids(w, h, 0);
    const int per_row = (w + block - 1) / block;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) ids.at(x, y) = (y / block) * per_row + x / block;
    return ids;
}

}  // namespace

TEST(Partition, RenumbersByFirstAppearanceWithExactStats) {
    std::mt19937_64 rng(31);
    CoherencyImage img = constant_image(4, 2, Matrix3c::Identity());
    for (auto& t : img.pixels.data()) t = oracle::random_psd(rng);
    LabelRaster ids(4, 2);
    ids.data() = {7, 7, 3, 3, 9, 7, 3, 9};
    const Partition p = make_partition(img, ids);
    ASSERT_EQ(p.count(), 3);
    EXPECT_EQ(p.ids.data(), (std::vector<int>{0, 0, 1, 1, 2, 0, 1, 2}));
    Matrix3c sum0 = img.pixels[0] + img.pixels[1] + img.pixels[5];
    EXPECT_EQ(p.regions[0].count, 3);
    EXPECT_TRUE(p.regions[0].sum.isApprox(sum0, 1e-14));
    EXPECT_TRUE(p.regions[0].mean().isApprox(sum0 / 3.0, 1e-14));
    ids[0] = -1;
    EXPECT_THROW(make_partition(img, ids), Error);
}

TEST(Partition, AdjacencyIsFourConnected) {
    LabelRaster ids(3, 3);
    ids.data() = {0, 0, 1,
                  0, 2, 1,
                  3, 3, 3};
    const auto adj = adjacency(ids);
    const std::vector<std::pair<int, int>> want{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    EXPECT_EQ(adj, want);
    LabelRaster diag(2, 2);
    diag.data() = {0, 1, 1, 0};
    EXPECT_EQ(adjacency(diag), (std::vector<std::pair<int, int>>{{0, 1}}));
}

TEST(MeanShift, ConstantImageIsOneRegion) {
    const Partition p = mean_shift_superpixels(constant_image(40, 30, targets::vegetation(2.0)));
    EXPECT_EQ(p.count(), 1);
    EXPECT_EQ(p.regions[0].count, 1200);
}

TEST(MeanShift, TwoHalvesAreSeparated) {
    SceneSpec spec;
    spec.size = 48;
    spec.contrast_db = 9.0;
    const SyntheticScene s = make_scene(spec);
    const Partition p = mean_shift_superpixels(s.image);
    EXPECT_GE(p.count(), 2);
    EXPECT_LE(p.count(), 20);
    EXPECT_GT(purity(p.ids, s.truth), 0.95);
    for (const auto& r : p.regions) EXPECT_GE(r.count, 20);
}

TEST(MeanShift, FeaturesAreDecibelsOfPauliPowers) {
    Matrix3c t = Matrix3c::Zero();
    t(0, 0) = 10.0;
    t(1, 1) = 100.0;
    t(2, 2) = 1.0;
    const auto f = log_pauli_features(constant_image(1, 1, t));
    EXPECT_NEAR(f[0][0], 20.0, 1e-12);
    EXPECT_NEAR(f[0][1], 0.0, 1e-12);
    EXPECT_NEAR(f[0][2], 10.0, 1e-12);
}

TEST(Sc, MatchesScaledIdentityClosedForm) {
    const RegionStats a = stats_of(Matrix3c::Identity(), 10);
    const RegionStats b = stats_of(2.0 * Matrix3c::Identity(), 10);
    const double expected = 4.0 * (20.0 * 3.0 * std::log(1.5) - 10.0 * 3.0 * std::log(2.0));
    EXPECT_NEAR(sc_criterion(a, b, 4.0), expected, 1e-9);
    EXPECT_NEAR(sc_criterion(a, a, 4.0), 0.0, 1e-9);
}

TEST(Sc, MatchesOracleAndIsSymmetricAndNonNegative) {
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<int> size(1, 400);
    for (int i = 0; i < 200; ++i) {
        const Matrix3c zi = oracle::random_psd(rng), zj = oracle::random_psd(rng, 3.0);
        const int ni = size(rng), nj = size(rng);
        const RegionStats a = stats_of(zi, ni), b = stats_of(zj, nj);
        const double sc = sc_criterion(a, b, 4.0);
        EXPECT_NEAR(sc, sc_oracle(zi, ni, zj, nj, 4.0), 1e-8 * std::max(1.0, std::abs(sc)));
        EXPECT_NEAR(sc, sc_criterion(b, a, 4.0), 1e-8 * std::max(1.0, std::abs(sc)));
        EXPECT_GE(sc, -1e-8);
    }
}

TEST(Sc, EqualsIncreaseOfWithinRegionCost) {
    std::mt19937_64 rng(33);
    for (int i = 0; i < 50; ++i) {
        RegionStats a = stats_of(oracle::random_psd(rng), 30 + i);
        const RegionStats b = stats_of(oracle::random_psd(rng, 2.0), 70 - i);
        const double before = region_cost(a, 4.0) + region_cost(b, 4.0);
        const double sc = sc_criterion(a, b, 4.0);
        a.add(b);
        EXPECT_NEAR(region_cost(a, 4.0) - before, sc, 1e-8 * std::max(1.0, sc));
    }
}

TEST(Merge, TargetAtCountIsIdentity) {
    const SyntheticScene s = make_scene(SceneSpec{});
    const Partition p = make_partition(s.image, block_grid(s.image.width(), s.image.height(), 16));
    const MergeResult m = hierarchical_merge(p, std::vector<bool>(p.regions.size(), true), p.count(), s.image.looks);
    EXPECT_TRUE(m.steps.empty());
    EXPECT_TRUE(m.partition.ids == p.ids);
    EXPECT_FALSE(m.target_unreachable);
}

TEST(Merge, RecoversThreeClassMosaic) {
    SceneSpec spec;
    spec.kind = SceneSpec::Kind::Mosaic;
    spec.size = 96;
    spec.tile = 32;
    spec.classes = 3;
    const SyntheticScene s = make_scene(spec);
    const Partition p = make_partition(s.image, block_grid(96, 96, 8));
    const MergeResult m = hierarchical_merge(p, std::vector<bool>(p.regions.size(), true), 9, s.image.looks, true);
    EXPECT_EQ(m.partition.count(), 9);
    EXPECT_DOUBLE_EQ(purity(m.partition.ids, s.truth), 1.0);
    for (const MergeStep& step : m.steps) {
        EXPECT_LT(step.a, step.b);
        EXPECT_NEAR(step.cost_after - step.cost_before, step.sc, 1e-9 * std::max(1.0, std::abs(step.cost_after)));
    }
}

TEST(Merge, IneligibleRegionsAreUntouched) {
    const SyntheticScene s = make_scene(SceneSpec{});
    const Partition p = make_partition(s.image, block_grid(s.image.width(), s.image.height(), 16));
    std::vector<bool> eligible(p.regions.size(), true);
    eligible[5] = eligible[6] = false;
    const MergeResult m = hierarchical_merge(p, eligible, 1, s.image.looks);
    EXPECT_EQ(m.partition.count(), 3);
    EXPECT_NE(m.old_to_new[5], m.old_to_new[6]);
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
        const bool in5 = p.ids[i] == 5;
        EXPECT_EQ(in5, m.partition.ids[i] == m.old_to_new[5]);
    }
}

TEST(Merge, UnreachableTargetIsFlagged) {
    const SyntheticScene s = make_scene(SceneSpec{});
    const Partition p = make_partition(s.image, block_grid(s.image.width(), s.image.height(), 64));
    const MergeResult m = hierarchical_merge(p, std::vector<bool>(p.regions.size(), true), 10, s.image.looks);
    EXPECT_TRUE(m.target_unreachable);
    EXPECT_EQ(m.partition.count(), 4);
}

TEST(Subspace, MajorityWithAggregatedWinningTies) {
    LabelRaster ids(4, 1);
    ids.data() = {0, 0, 1, 1};
    const Partition p = make_partition(constant_image(4, 1, Matrix3c::Identity()), ids);
    region::RegionMap map;
    map.labels = Raster<std::uint8_t>(4, 1, 0);
    map.aggregated_id = LabelRaster(4, 1, -1);
    map.labels[0] = static_cast<std::uint8_t>(RegionLabel::Aggregated);
    map.labels[2] = static_cast<std::uint8_t>(RegionLabel::Structural);
    const auto tags = map_region_to_superpixels(p, map);
    EXPECT_EQ(tags[0], RegionLabel::Aggregated);
    EXPECT_EQ(tags[1], RegionLabel::Structural);
}

TEST(Subspace, AggregatedMajorityMergesPerGroup) {
    LabelRaster ids(6, 1);
    ids.data() = {0, 0, 1, 1, 2, 2};
    const CoherencyImage img = constant_image(6, 1, Matrix3c::Identity());
    const Partition p = make_partition(img, ids);
    region::RegionMap map;
    map.labels = Raster<std::uint8_t>(6, 1, 0);
    map.aggregated_id = LabelRaster(6, 1, -1);
    for (int i : {0, 1, 2, 3}) {
        map.labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(RegionLabel::Aggregated);
        map.aggregated_id[static_cast<std::size_t>(i)] = 0;
    }
    map.aggregated_id[5] = 1;  // half of region 2 only: not a majority
    const AggregatedMerge m = merge_aggregated(img, p, map);
    EXPECT_EQ(m.partition.count(), 2);
    EXPECT_EQ(m.partition.ids[0], m.partition.ids[3]);
    EXPECT_EQ(m.group_of_region[static_cast<std::size_t>(m.partition.ids[0])], 0);
    EXPECT_EQ(m.group_of_region[static_cast<std::size_t>(m.partition.ids[5])], -1);
}

namespace {

struct PlantedBlock {
    sketch::SketchSegment segment = make_segment({5, 10}, {25, 10}, sketch::SegmentLabel::IS);
    region::RegionMap map;
    StructuralBlock block;
};

PlantedBlock planted(double width) {
    PlantedBlock b;
    std::vector<sketch::SketchSegment> segs{b.segment};
    const MaskRaster s = region::structural_blocks(segs, width, 32, 24);
    b.map = region::build_region_map({}, {}, s, 32, 24);
    const auto blocks = carve_structural(segs, b.map, width);
    if (!blocks.empty()) b.block = blocks[0];
    return b;
}

}  // namespace

TEST(Structural, CarveClaimsBlockPixelsOnce) {
    const PlantedBlock b = planted(5.0);
    EXPECT_EQ(b.block.pixels.size(), 21u * 5u);
    std::vector<sketch::SketchSegment> twice{b.segment, b.segment};
    const auto blocks = carve_structural(twice, b.map, 5.0);
    ASSERT_EQ(blocks.size(), 1u);
    EXPECT_EQ(blocks[0].segment, 0);
}

TEST(Structural, SplitFindsPlantedOffsetEdge) {
    const PlantedBlock b = planted(5.0);
    ScalarRaster energy(32, 24, 0.0);
    for (int x = 0; x < 32; ++x) energy.at(x, 11) = 5.0;
    energy.at(12, 8) = 9.0;  // isolated outlier removed by the median
    const SplitOutcome out = split_structural(b.block, b.segment, energy, 5.0);
    ASSERT_TRUE(out.split);
    for (int o : out.edge_offsets) EXPECT_EQ(o, 1);
    EXPECT_EQ(out.side_b.size(), 21u);
    for (Pixel p : out.side_b) EXPECT_EQ(p.y, 12);
    for (Pixel p : out.side_a) EXPECT_LE(p.y, 11);
}

TEST(Structural, FlatEnergySplitsAtAxis) {
    const PlantedBlock b = planted(5.0);
    const SplitOutcome out = split_structural(b.block, b.segment, ScalarRaster(32, 24, 1.0), 5.0);
    ASSERT_TRUE(out.split);
    for (int o : out.edge_offsets) EXPECT_EQ(o, 0);
    for (Pixel p : out.side_b) EXPECT_GT(p.y, 10);
}

TEST(Structural, ThinBlockStaysWhole) {
    const PlantedBlock b = planted(2.0);
    const SplitOutcome out = split_structural(b.block, b.segment, ScalarRaster(32, 24, 1.0), 2.0);
    EXPECT_FALSE(out.split);
    EXPECT_FALSE(out.reason.empty());
}

TEST(SegmentImage, DisabledRegionMapPassesSuperpixelsThrough) {
    const SyntheticScene s = make_scene(SceneSpec{});
    const Partition p = make_partition(s.image, block_grid(s.image.width(), s.image.height(), 16));
    SegmentOptions opts;
    opts.use_region_map = false;
    const Segmentation seg = segment_image(s.image, p, region::RegionResult{}, ScalarRaster(s.image.width(), s.image.height(), 0.0), opts);
    EXPECT_TRUE(seg.region_id == p.ids);
    EXPECT_EQ(seg.count(), p.count());
}

TEST(SegmentImage, EmptyRegionMapMergesToTarget) {
    SceneSpec spec;
    spec.kind = SceneSpec::Kind::Mosaic;
    spec.size = 96;
    spec.tile = 32;
    spec.classes = 3;
    const SyntheticScene s = make_scene(spec);
    const Partition p = make_partition(s.image, block_grid(96, 96, 8));
    region::RegionResult none;
    none.map = region::build_region_map({}, {}, MaskRaster(), 96, 96);
    SegmentOptions opts;
    opts.n_r = 9;
    const Segmentation seg = segment_image(s.image, p, none, ScalarRaster(96, 96, 0.0), opts);
    EXPECT_EQ(seg.count(), 9);
    EXPECT_EQ(seg.structural_blocks, 0);
    EXPECT_DOUBLE_EQ(purity(seg.region_id, s.truth), 1.0);
    std::set<int> ids(seg.region_id.data().begin(), seg.region_id.data().end());
    EXPECT_EQ(*ids.rbegin(), 8);
}
