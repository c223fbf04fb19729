#include "oracles.hpp"

#include "phsm/region.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace phsm;
using namespace phsm::region;
using sketch::make_segment;

namespace {

std::vector<SketchSegment> random_segments(std::mt19937_64& rng, int n, double extent = 100.0) {
    std::uniform_real_distribution<double> pos(0.0, extent);
    std::uniform_real_distribution<double> ang(0.0, kPi);
    std::uniform_real_distribution<double> len(3.0, 8.0);
    std::vector<SketchSegment> out;
    for (int i = 0; i < n; ++i) {
        const double x = pos(rng), y = pos(rng), t = ang(rng), l = len(rng);
        out.push_back(make_segment({x, y}, {x + l * std::cos(t), y + l * std::sin(t)}));
    }
    return out;
}

std::vector<int> iota(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

/// Plain K nearest by midpoint distance, no wedge.
std::vector<int> brute_knn(const std::vector<SketchSegment>& s, const std::vector<int>& pool, int i, int k) {
    std::vector<std::pair<double, int>> d;
    const Point c = s[static_cast<std::size_t>(i)].center();
    for (int j : pool) {
        if (j == i) continue;
        const Point cj = s[static_cast<std::size_t>(j)].center();
        d.push_back({std::hypot(c.x - cj.x, c.y - cj.y), j});
    }
    std::sort(d.begin(), d.end());
    std::vector<int> out;
    for (int n = 0; n < k && n < static_cast<int>(d.size()); ++n) out.push_back(d[static_cast<std::size_t>(n)].second);
    return out;
}

MaskRaster random_mask(std::mt19937_64& rng, int w, int h, double density) {
    std::bernoulli_distribution on(density);
    MaskRaster m(w, h, 0);
    for (auto& v : m.data()) v = on(rng) ? 1 : 0;
    return m;
}

MaskRaster brute_dilate(const MaskRaster& m, int r) {
    MaskRaster out(m.width(), m.height(), 0);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (dx * dx + dy * dy <= r * r && m.contains(x + dx, y + dy) && m.at(x + dx, y + dy)) out.at(x, y) = 1;
    return out;
}

MaskRaster brute_erode(const MaskRaster& m, int r) {
    MaskRaster out(m.width(), m.height(), 1);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (dx * dx + dy * dy <= r * r && !(m.contains(x + dx, y + dy) && m.at(x + dx, y + dy))) out.at(x, y) = 0;
    return out;
}

}  // namespace

TEST(OrientationGap, FoldsIntoQuarterTurn) {
    EXPECT_DOUBLE_EQ(orientation_gap(10, 20), 10.0);
    EXPECT_DOUBLE_EQ(orientation_gap(5, 175), 10.0);
    EXPECT_DOUBLE_EQ(orientation_gap(0, 90), 90.0);
    EXPECT_DOUBLE_EQ(orientation_gap(30, 30), 0.0);
}

TEST(ConnectLines, JoinsCloseEndsOnly) {
    std::vector<SketchSegment> s{make_segment({0, 0}, {10, 0}), make_segment({11, 0}, {20, 0}),
                                 make_segment({26, 0}, {35, 0})};
    const auto chains = connect_lines(s, 2.0);
    ASSERT_EQ(chains.size(), 2u);
    std::set<std::size_t> sizes;
    for (const auto& c : chains) sizes.insert(c.members.size());
    EXPECT_EQ(sizes, (std::set<std::size_t>{1u, 2u}));
}

TEST(ConnectLines, EachEndTakesOneLinkPreferringStraight) {
    // Two candidates at the tail of segment 0: collinear 1 and perpendicular 2.
    std::vector<SketchSegment> s{make_segment({0, 0}, {10, 0}), make_segment({11, 0}, {20, 0}),
                                 make_segment({10, 1}, {10, 10})};
    const auto chains = connect_lines(s, 2.0);
    ASSERT_EQ(chains.size(), 2u);
    for (const auto& c : chains) {
        if (c.members.size() == 2u) {
            EXPECT_EQ(std::set<int>(c.members.begin(), c.members.end()), (std::set<int>{0, 1}));
        }
    }
}

TEST(ConnectLines, ReversedMembersFollowChainOrder) {
    std::vector<SketchSegment> s{make_segment({0, 0}, {10, 0}), make_segment({20, 0}, {11, 0})};
    const auto chains = connect_lines(s, 2.0);
    ASSERT_EQ(chains.size(), 1u);
    ASSERT_EQ(chains[0].members.size(), 2u);
    EXPECT_NE(chains[0].reversed[0], chains[0].reversed[1]);
}

TEST(Straight, CollinearForwardChainPasses) {
    std::vector<SketchSegment> s{make_segment({0, 0}, {10, 0}), make_segment({10, 0}, {20, 1})};
    const Chain c{{0, 1}, {false, false}};
    EXPECT_TRUE(is_straight(c, s, 30.0));
    EXPECT_FALSE(is_straight(c, s, 5.0));
}

TEST(Straight, SharpTurnFails) {
    std::vector<SketchSegment> s{make_segment({0, 0}, {10, 0}), make_segment({10, 0}, {15, 8.66})};
    EXPECT_FALSE(is_straight(Chain{{0, 1}, {false, false}}, s, 30.0));
}

TEST(Straight, LabelsTopFractionButAtLeastOne) {
    std::vector<SketchSegment> s;
    std::vector<Chain> chains;
    for (int i = 0; i < 10; ++i) {
        s.push_back(make_segment({0, 5.0 * i}, {10.0 + i, 5.0 * i}));
        chains.push_back({{i}, {false}});
    }
    EXPECT_EQ(label_long_straight(chains, s, 30.0, 0.05), 1);
    EXPECT_EQ(s[9].label, SegmentLabel::IS);
    EXPECT_EQ(s[8].label, SegmentLabel::Unlabeled);
    EXPECT_EQ(label_long_straight(chains, s, 30.0, 0.3), 3);
    EXPECT_EQ(s[7].label, SegmentLabel::IS);
}

TEST(Knn, MatchesBruteForceWithoutWedge) {
    std::mt19937_64 rng(21);
    const auto s = random_segments(rng, 60);
    const auto pool = iota(60);
    for (int i = 0; i < 60; ++i) {
        const Neighbourhood h = nearest_segments(s, pool, i, 9, 0.0);
        EXPECT_EQ(h.neighbours, brute_knn(s, pool, i, 9));
        EXPECT_TRUE(std::is_sorted(h.distances.begin(), h.distances.end()));
    }
}

TEST(Knn, WedgeSkipsAxialNeighbours) {
    std::vector<SketchSegment> s{make_segment({0, 0}, {4, 0}), make_segment({6, 0}, {10, 0}),
                                 make_segment({0, 6}, {4, 6}), make_segment({-10, 0}, {-6, 0})};
    const Neighbourhood h = nearest_segments(s, iota(4), 0, 2, 10.0);
    ASSERT_EQ(h.neighbours.size(), 1u);
    EXPECT_EQ(h.neighbours[0], 2);
    // Only axial neighbours left: the plain nearest are used.
    std::vector<SketchSegment> axial{s[0], s[1], s[3]};
    EXPECT_EQ(nearest_segments(axial, iota(3), 0, 2, 10.0).neighbours.size(), 2u);
}

TEST(Knn, IndependentOfInputOrder) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = random_segments(rng, 40, 40.0);
        const AggregationStats base = aggregation_degree(s, iota(40), 9, 10.0);
        std::vector<int> perm = iota(40);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<SketchSegment> shuffled;
        for (int p : perm) shuffled.push_back(s[static_cast<std::size_t>(p)]);
        const AggregationStats moved = aggregation_degree(shuffled, iota(40), 9, 10.0);
        for (int j = 0; j < 40; ++j) {
            EXPECT_EQ(moved.ad[static_cast<std::size_t>(j)], base.ad[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])]);
        }
    }
}

TEST(Aggregation, DegreeIsMeanNeighbourDistance) {
    std::mt19937_64 rng(23);
    const auto s = random_segments(rng, 50);
    const auto pool = iota(50);
    const AggregationStats st = aggregation_degree(s, pool, 5, 0.0);
    for (int i = 0; i < 50; ++i) {
        double sum = 0.0;
        const Point c = s[static_cast<std::size_t>(i)].center();
        for (int j : brute_knn(s, pool, i, 5)) {
            const Point cj = s[static_cast<std::size_t>(j)].center();
            sum += std::hypot(c.x - cj.x, c.y - cj.y);
        }
        EXPECT_NEAR(st.ad[static_cast<std::size_t>(i)], sum / 5.0, 1e-12);
    }
    int total = 0;
    for (int c : st.adh) total += c;
    EXPECT_EQ(total, 50);
    EXPECT_THROW(aggregation_degree(s, pool, 0), Error);
}

TEST(Aggregation, ThresholdsMatchOracles) {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = random_segments(rng, 120, 150.0);
        const AggregationStats st = aggregation_degree(s, iota(120), 9, 10.0);
        const double mean = std::accumulate(st.ad.begin(), st.ad.end(), 0.0) / 120.0;
        EXPECT_NEAR(select_delta2(st), mean, 1e-12);
        const double d1 = select_delta1(st, 0.92);
        const double q = oracle::quantile_by_sort(st.ad, 0.92);
        EXPECT_LE(std::abs(d1 - q), st.bin_width + 1e-12);
        EXPECT_GE(d1, q - 1e-12);
    }
}

TEST(SpatialRank, ClassifiesNeighbourSides) {
    // Segment 0 along x at the origin; neighbours placed above, below or far.
    std::vector<SketchSegment> s{make_segment({-2, 0}, {2, 0})};
    for (int i = 0; i < 4; ++i) s.push_back(make_segment({-2.0 + i, 3}, {-1.0 + i, 3}));
    for (int i = 0; i < 4; ++i) s.push_back(make_segment({-2.0 + i, -3}, {-1.0 + i, -3}));
    AggregationStats one_side = aggregation_degree(s, {0, 1, 2, 3, 4}, 4, 0.0);
    EXPECT_EQ(spatial_rank(s, one_side, 0, 10.0), SpatialRank::SAS);
    AggregationStats both = aggregation_degree(s, iota(9), 8, 0.0);
    EXPECT_EQ(spatial_rank(s, both, 0, 10.0), SpatialRank::DAS);
    EXPECT_EQ(spatial_rank(s, both, 0, 1.0), SpatialRank::ZAS);
}

TEST(Grouping, MatchesComponentOracle) {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 10; ++trial) {
        auto s = random_segments(rng, 80, 120.0);
        for (std::size_t i = 0; i < s.size(); ++i) s[i].label = i % 5 == 0 ? SegmentLabel::IS : SegmentLabel::AS;
        std::vector<int> as;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i].label == SegmentLabel::AS) as.push_back(static_cast<int>(i));
        const int k = 4;
        const double delta2 = 9.0;
        std::vector<std::vector<int>> knn(s.size());
        for (int i : as) knn[static_cast<std::size_t>(i)] = brute_knn(s, as, i, k);
        auto linked = [&](int a, int b) {
            const int i = as[static_cast<std::size_t>(a)], j = as[static_cast<std::size_t>(b)];
            if (i == j) return false;
            const Point ci = s[static_cast<std::size_t>(i)].center(), cj = s[static_cast<std::size_t>(j)].center();
            if (std::hypot(ci.x - cj.x, ci.y - cj.y) > delta2) return false;
            const auto& ki = knn[static_cast<std::size_t>(i)];
            const auto& kj = knn[static_cast<std::size_t>(j)];
            return std::find(ki.begin(), ki.end(), j) != ki.end() || std::find(kj.begin(), kj.end(), i) != kj.end();
        };
        const std::vector<int> comp = oracle::components(static_cast<int>(as.size()), linked);
        std::map<int, std::vector<int>> expected;
        for (std::size_t a = 0; a < as.size(); ++a) expected[comp[a]].push_back(as[a]);
        std::vector<std::vector<int>> big;
        for (auto& [id, members] : expected)
            if (static_cast<int>(members.size()) >= k) big.push_back(members);

        auto labeled = s;
        const auto groups = group_segments(labeled, delta2, k);
        ASSERT_EQ(groups.size(), big.size());
        for (std::size_t g = 0; g < groups.size(); ++g) EXPECT_EQ(groups[g].members, big[g]);
        for (auto& [id, members] : expected) {
            const SegmentLabel want = static_cast<int>(members.size()) >= k ? SegmentLabel::AS : SegmentLabel::IS;
            for (int m : members) EXPECT_EQ(labeled[static_cast<std::size_t>(m)].label, want);
        }
    }
}

TEST(Morphology, DistanceTransformMatchesBruteForce) {
    std::mt19937_64 rng(26);
    const MaskRaster m = random_mask(rng, 23, 17, 0.05);
    const std::vector<double> d = squared_distance_transform(m);
    for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 23; ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (int v = 0; v < 17; ++v)
                for (int u = 0; u < 23; ++u)
                    if (m.at(u, v)) best = std::min(best, double((u - x) * (u - x) + (v - y) * (v - y)));
            if (std::isfinite(best)) EXPECT_EQ(d[static_cast<std::size_t>(y * 23 + x)], best);
        }
}

TEST(Morphology, DilateErodeCloseMatchBruteForce) {
    std::mt19937_64 rng(27);
    for (int r : {0, 1, 2, 4}) {
        const MaskRaster m = random_mask(rng, 30, 20, 0.15);
        EXPECT_TRUE(dilate_mask(m, r) == brute_dilate(m, r));
        const MaskRaster dense = random_mask(rng, 30, 20, 0.85);
        EXPECT_TRUE(erode_mask(dense, r) == brute_erode(dense, r));
        // Closing away from the border equals erosion of the dilation on a padded canvas.
        const MaskRaster closed = close_mask(m, r);
        MaskRaster padded(30 + 2 * (r + 1), 20 + 2 * (r + 1), 0);
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 30; ++x) padded.at(x + r + 1, y + r + 1) = m.at(x, y);
        const MaskRaster ref = brute_erode(brute_dilate(padded, r), r);
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 30; ++x) EXPECT_EQ(closed.at(x, y), ref.at(x + r + 1, y + r + 1));
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i]) EXPECT_TRUE(closed[i]);
    }
    EXPECT_THROW(dilate_mask(MaskRaster(3, 3, 0), -1), Error);
}

TEST(Blocks, PixelCentreRule) {
    const SketchSegment s = make_segment({5, 5}, {15, 5});
    EXPECT_TRUE(in_structural_block(s, 3.0, 5, 5));
    EXPECT_TRUE(in_structural_block(s, 3.0, 15, 6));
    EXPECT_FALSE(in_structural_block(s, 3.0, 15, 7));
    EXPECT_TRUE(in_structural_block(s, 3.0, 4.5, 5));
    EXPECT_FALSE(in_structural_block(s, 3.0, 15.5, 5));
    auto segs = std::vector<SketchSegment>{s};
    const MaskRaster none = structural_blocks(segs, 3.0, 20, 20);
    EXPECT_EQ(std::count(none.data().begin(), none.data().end(), 1), 0);
    segs[0].label = SegmentLabel::IS;
    const MaskRaster b = structural_blocks(segs, 3.0, 20, 20);
    EXPECT_EQ(std::count(b.data().begin(), b.data().end(), 1), 11 * 3);
}

TEST(RegionMapBuild, AggregatedBeatsStructuralAndFirstGroupWins) {
    MaskRaster structural(4, 1, 0);
    structural[1] = structural[2] = 1;
    MaskRaster g0(4, 1, 0), g1(4, 1, 0);
    g0[2] = 1;
    g1[2] = g1[3] = 1;
    const RegionMap m = build_region_map({g0, g1}, {0, 1}, structural, 4, 1);
    EXPECT_EQ(m.at(0, 0), RegionLabel::Homogenous);
    EXPECT_EQ(m.at(1, 0), RegionLabel::Structural);
    EXPECT_EQ(m.at(2, 0), RegionLabel::Aggregated);
    EXPECT_EQ(m.aggregated_id.at(2, 0), 0);
    EXPECT_EQ(m.aggregated_id.at(3, 0), 1);
    EXPECT_EQ(m.aggregated_id.at(1, 0), -1);
    EXPECT_THROW(build_region_map({g0}, {0, 1}, structural, 4, 1), Error);
}

TEST(RegionMapBuild, DenseClusterAggregatesAndLongLineIsStructural) {
    sketch::SketchMap map;
    map.width = map.height = 128;
    auto add = [&](Point a, Point b) {
        sketch::SketchLine l;
        l.segments.push_back(make_segment(a, b));
        map.lines.push_back(l);
    };
    // A 7x7 lattice of short alternating segments, a sparse scatter and one long line.
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
            const double x = 10 + 5.0 * i, y = 10 + 5.0 * j;
            if ((i + j) % 2) add({x, y}, {x + 3, y});
            else add({x, y}, {x, y + 3});
        }
    std::mt19937_64 rng(28);
    std::uniform_real_distribution<double> pos(70, 120);
    for (int i = 0; i < 6; ++i) {
        const double x = pos(rng), y = pos(rng);
        add({x, y}, {x + 3, y + 1});
    }
    add({5, 100}, {60, 100});
    const RegionResult r = build_region_map(map);
    ASSERT_FALSE(r.groups.empty());
    EXPECT_EQ(r.map.at(25, 25), RegionLabel::Aggregated);
    EXPECT_EQ(r.map.at(30, 100), RegionLabel::Structural);
    EXPECT_EQ(r.map.at(5, 120), RegionLabel::Homogenous);
}

TEST(Labeling, TooFewSegmentsIsDegenerate) {
    std::vector<SketchSegment> s{make_segment({0, 0}, {5, 0}), make_segment({0, 10}, {5, 12})};
    const LabelResult r = label_segments(s);
    EXPECT_TRUE(r.degenerate);
    for (const auto& seg : s) EXPECT_EQ(seg.label, SegmentLabel::IS);
}
