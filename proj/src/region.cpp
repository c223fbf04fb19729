#include "phsm/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace phsm::region {

namespace {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point end_point(const SketchSegment& s, int end) { return end == 0 ? s.head : s.tail; }

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
        return true;
    }

private:
    std::vector<std::size_t> parent_;
};

using GeometryKey = std::tuple<double, double, double, double, double, double>;

GeometryKey geometry_key(const SketchSegment& s) {
    const Point c = s.center();
    return {c.x, c.y, s.head.x, s.head.y, s.tail.x, s.tail.y};
}

}  // namespace

double orientation_gap(double a_deg, double b_deg) {
    double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
    if (d > 90.0) d = 180.0 - d;
    return d;
}

std::vector<Chain> connect_lines(const std::vector<SketchSegment>& segments, double max_gap) {
    struct Link {
        double dtheta;
        double gap;
        int i, ei, j, ej;
    };
    const int n = static_cast<int>(segments.size());
    std::vector<Link> links;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            for (int ei = 0; ei < 2; ++ei) {
                for (int ej = 0; ej < 2; ++ej) {
                    const double gap = distance(end_point(segments[i], ei), end_point(segments[j], ej));
                    if (gap > max_gap) continue;
                    links.push_back({orientation_gap(segments[i].theta_deg, segments[j].theta_deg), gap, i, ei, j, ej});
                }
            }
        }
    }
    std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) {
        return std::tie(a.dtheta, a.gap, a.i, a.ei, a.j, a.ej) < std::tie(b.dtheta, b.gap, b.i, b.ei, b.j, b.ej);
    });

    // partner[2 * i + e] = 2 * j + f when end e of segment i links to end f of j.
    std::vector<int> partner(static_cast<std::size_t>(2 * n), -1);
    DisjointSets sets(static_cast<std::size_t>(n));
    for (const Link& l : links) {
        const auto a = static_cast<std::size_t>(2 * l.i + l.ei);
        const auto b = static_cast<std::size_t>(2 * l.j + l.ej);
        if (partner[a] >= 0 || partner[b] >= 0) continue;
        if (!sets.unite(static_cast<std::size_t>(l.i), static_cast<std::size_t>(l.j))) continue;
        partner[a] = static_cast<int>(b);
        partner[b] = static_cast<int>(a);
    }

    std::vector<Chain> chains;
    std::vector<bool> placed(static_cast<std::size_t>(n), false);
    for (int start = 0; start < n; ++start) {
        if (placed[static_cast<std::size_t>(start)]) continue;
        const bool head_free = partner[static_cast<std::size_t>(2 * start)] < 0;
        const bool tail_free = partner[static_cast<std::size_t>(2 * start + 1)] < 0;
        if (!head_free && !tail_free) continue;  // interior member; reached from an end
        Chain chain;
        int seg = start;
        int entry = head_free ? 0 : 1;
        while (true) {
            placed[static_cast<std::size_t>(seg)] = true;
            chain.members.push_back(seg);
            chain.reversed.push_back(entry == 1);
            const int exit = 1 - entry;
            const int next = partner[static_cast<std::size_t>(2 * seg + exit)];
            if (next < 0) break;
            seg = next / 2;
            entry = next % 2;
        }
        chains.push_back(std::move(chain));
    }
    return chains;
}

bool is_straight(const Chain& chain, const std::vector<SketchSegment>& segments, double theta0_deg) {
    for (std::size_t k = 0; k + 1 < chain.members.size(); ++k) {
        const SketchSegment& a = segments[static_cast<std::size_t>(chain.members[k])];
        const SketchSegment& b = segments[static_cast<std::size_t>(chain.members[k + 1])];
        if (!(orientation_gap(a.theta_deg, b.theta_deg) < theta0_deg)) return false;
        const Point a_start = chain.reversed[k] ? a.tail : a.head;
        const Point b_end = chain.reversed[k + 1] ? b.head : b.tail;
        if (!(distance(a_start, b_end) > std::max(a.length, b.length))) return false;
    }
    return true;
}

int label_long_straight(const std::vector<Chain>& chains, std::vector<SketchSegment>& segments, double theta0_deg,
                        double top_fraction) {
    struct Candidate {
        double length;
        std::size_t chain;
    };
    std::vector<Candidate> straight;
    for (std::size_t c = 0; c < chains.size(); ++c) {
        if (chains[c].members.empty() || !is_straight(chains[c], segments, theta0_deg)) continue;
        double total = 0.0;
        for (int m : chains[c].members) total += segments[static_cast<std::size_t>(m)].length;
        straight.push_back({total, c});
    }
    if (straight.empty()) return 0;
    std::stable_sort(straight.begin(), straight.end(),
                     [](const Candidate& a, const Candidate& b) { return a.length > b.length; });
    const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(top_fraction * straight.size()));
    for (std::size_t t = 0; t < take && t < straight.size(); ++t) {
        for (int m : chains[straight[t].chain].members) segments[static_cast<std::size_t>(m)].label = SegmentLabel::IS;
    }
    return static_cast<int>(std::min(take, straight.size()));
}

Neighbourhood nearest_segments(const std::vector<SketchSegment>& segments, const std::vector<int>& pool, int i, int k,
                               double wedge_deg) {
    const SketchSegment& s = segments[static_cast<std::size_t>(i)];
    const Point c = s.center();
    const Point dir = s.direction();
    const double cos_wedge = std::cos(wedge_deg * kPi / 180.0);

    struct Candidate {
        double d;
        GeometryKey key;
        int index;
        bool in_wedge;
    };
    std::vector<Candidate> all;
    all.reserve(pool.size());
    for (int j : pool) {
        if (j == i) continue;
        const Point cj = segments[static_cast<std::size_t>(j)].center();
        const double d = distance(c, cj);
        bool in_wedge = false;
        if (wedge_deg > 0.0 && d > 0.0) {
            const double along = std::abs((cj.x - c.x) * dir.x + (cj.y - c.y) * dir.y) / d;
            in_wedge = along >= cos_wedge;
        }
        all.push_back({d, geometry_key(segments[static_cast<std::size_t>(j)]), j, in_wedge});
    }
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.d, a.key, a.index) < std::tie(b.d, b.key, b.index);
    });
    const bool any_outside = std::any_of(all.begin(), all.end(), [](const Candidate& a) { return !a.in_wedge; });

    Neighbourhood out;
    for (const Candidate& cand : all) {
        if (static_cast<int>(out.neighbours.size()) >= k) break;
        if (any_outside && cand.in_wedge) continue;
        out.neighbours.push_back(cand.index);
        out.distances.push_back(cand.d);
    }
    return out;
}

AggregationStats aggregation_degree(const std::vector<SketchSegment>& segments, const std::vector<int>& pool, int k,
                                    double wedge_deg) {
    if (k < 1) throw Error("K must be >= 1");
    AggregationStats stats;
    stats.k = k;
    stats.members = pool;
    for (int i : pool) {
        Neighbourhood hood = nearest_segments(segments, pool, i, k, wedge_deg);
        double ad = 0.0;
        if (!hood.distances.empty()) {
            ad = std::accumulate(hood.distances.begin(), hood.distances.end(), 0.0) /
                 static_cast<double>(hood.distances.size());
        }
        stats.ad.push_back(ad);
        stats.hoods.push_back(std::move(hood));
    }
    if (stats.ad.empty()) return stats;
    const auto [lo, hi] = std::minmax_element(stats.ad.begin(), stats.ad.end());
    stats.bin_origin = *lo;
    stats.bin_width = std::max(1.0, (*hi - *lo) / 64.0);
    const int bins = static_cast<int>(std::floor((*hi - *lo) / stats.bin_width)) + 1;
    stats.adh.assign(static_cast<std::size_t>(bins), 0);
    for (double a : stats.ad) {
        const int b = std::min(bins - 1, static_cast<int>(std::floor((a - stats.bin_origin) / stats.bin_width)));
        ++stats.adh[static_cast<std::size_t>(b)];
    }
    return stats;
}

double select_delta1(const AggregationStats& stats, double r) {
    if (stats.adh.empty()) return 0.0;
    const double max_ad = *std::max_element(stats.ad.begin(), stats.ad.end());
    const double total = static_cast<double>(stats.ad.size());
    double cumulative = 0.0;
    for (std::size_t b = 0; b < stats.adh.size(); ++b) {
        cumulative += stats.adh[b];
        if (cumulative >= r * total - 1e-9 * total) {
            return std::min(stats.bin_origin + static_cast<double>(b + 1) * stats.bin_width, max_ad);
        }
    }
    return max_ad;
}

double select_delta2(const AggregationStats& stats) {
    if (stats.ad.empty()) return 0.0;
    return std::accumulate(stats.ad.begin(), stats.ad.end(), 0.0) / static_cast<double>(stats.ad.size());
}

double adh_peak(const AggregationStats& stats) {
    if (stats.adh.empty()) return 0.0;
    const auto peak = std::max_element(stats.adh.begin(), stats.adh.end()) - stats.adh.begin();
    return stats.bin_origin + static_cast<double>(peak) * stats.bin_width;
}

const char* rank_name(SpatialRank rank) {
    switch (rank) {
        case SpatialRank::DAS: return "DAS";
        case SpatialRank::SAS: return "SAS";
        case SpatialRank::ZAS: return "ZAS";
    }
    return "?";
}

SpatialRank spatial_rank(const std::vector<SketchSegment>& segments, const AggregationStats& stats, int member,
                         double delta1, double side_fraction) {
    const auto m = static_cast<std::size_t>(member);
    const SketchSegment& s = segments[static_cast<std::size_t>(stats.members[m])];
    const Point c = s.center();
    const Point dir = s.direction();
    int close = 0;
    int left = 0;
    int right = 0;
    const Neighbourhood& hood = stats.hoods[m];
    for (std::size_t n = 0; n < hood.neighbours.size(); ++n) {
        if (hood.distances[n] > delta1) continue;
        ++close;
        const Point cj = segments[static_cast<std::size_t>(hood.neighbours[n])].center();
        const double cross = dir.x * (cj.y - c.y) - dir.y * (cj.x - c.x);
        if (cross > 0.0) ++left;
        else if (cross < 0.0) ++right;
    }
    if (close == 0) return SpatialRank::ZAS;
    const int sided = left + right;
    if (sided > 0 && static_cast<double>(std::max(left, right)) >= side_fraction * sided) return SpatialRank::SAS;
    return SpatialRank::DAS;
}

LabelResult label_segments(std::vector<SketchSegment>& segments, const LabelOptions& opts) {
    LabelResult result;
    for (auto& s : segments) s.label = SegmentLabel::Unlabeled;
    result.chains = connect_lines(segments, opts.max_gap);
    result.long_straight_chains = label_long_straight(result.chains, segments, opts.theta0_deg, opts.top_fraction);

    std::vector<int> rest;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (segments[i].label == SegmentLabel::Unlabeled) rest.push_back(static_cast<int>(i));
    }
    if (static_cast<int>(rest.size()) < opts.k + 1) {
        result.degenerate = true;
        for (int i : rest) segments[static_cast<std::size_t>(i)].label = SegmentLabel::IS;
        result.stats.k = opts.k;
        result.stats.r = opts.r;
        return result;
    }

    result.stats = aggregation_degree(segments, rest, opts.k, opts.wedge_deg);
    result.stats.r = opts.r;
    result.stats.delta1 = select_delta1(result.stats, opts.r);
    result.stats.delta2 = select_delta2(result.stats);
    result.stats.delta2_below_peak = result.stats.delta2 < adh_peak(result.stats);
    for (std::size_t m = 0; m < rest.size(); ++m) {
        const SpatialRank rank =
            spatial_rank(segments, result.stats, static_cast<int>(m), result.stats.delta1, opts.side_fraction);
        result.ranks.push_back(rank);
        const bool aggregated = result.stats.ad[m] <= result.stats.delta1 && rank == SpatialRank::DAS;
        segments[static_cast<std::size_t>(rest[m])].label = aggregated ? SegmentLabel::AS : SegmentLabel::IS;
    }
    return result;
}

std::vector<SegmentGroup> group_segments(std::vector<SketchSegment>& segments, double delta2, int k) {
    std::vector<int> as;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (segments[i].label == SegmentLabel::AS) as.push_back(static_cast<int>(i));
    }
    DisjointSets sets(segments.size());
    for (int i : as) {
        const Neighbourhood hood = nearest_segments(segments, as, i, k, 0.0);
        for (std::size_t n = 0; n < hood.neighbours.size(); ++n) {
            // Membership in either K-NN list suffices, so visiting every i covers both directions.
            if (hood.distances[n] <= delta2) sets.unite(static_cast<std::size_t>(i), static_cast<std::size_t>(hood.neighbours[n]));
        }
    }
    std::vector<std::vector<int>> components;
    std::vector<int> slot(segments.size(), -1);
    for (int i : as) {
        const std::size_t root = sets.find(static_cast<std::size_t>(i));
        if (slot[root] < 0) {
            slot[root] = static_cast<int>(components.size());
            components.emplace_back();
        }
        components[static_cast<std::size_t>(slot[root])].push_back(i);
    }
    std::vector<SegmentGroup> groups;
    for (auto& members : components) {
        if (static_cast<int>(members.size()) < k) {
            for (int m : members) segments[static_cast<std::size_t>(m)].label = SegmentLabel::IS;
            continue;
        }
        groups.push_back({static_cast<int>(groups.size()), std::move(members)});
    }
    return groups;
}

void draw_segment(MaskRaster& mask, const SketchSegment& s) {
    int x0 = static_cast<int>(std::lround(s.head.x));
    int y0 = static_cast<int>(std::lround(s.head.y));
    const int x1 = static_cast<int>(std::lround(s.tail.x));
    const int y1 = static_cast<int>(std::lround(s.tail.y));
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (mask.contains(x0, y0)) mask.at(x0, y0) = 1;
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

namespace {

constexpr double kFar = 1e20;

/// 1-D lower envelope of parabolas (squared distance transform of samples f).
void distance_1d(double* f, int n, int stride, std::vector<int>& v, std::vector<double>& z, std::vector<double>& buf) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = f[static_cast<std::ptrdiff_t>(i) * stride];
    auto at = [&](auto& vec, int i) -> auto& { return vec[static_cast<std::size_t>(i)]; };
    int k = 0;
    at(v, 0) = 0;
    at(z, 0) = -inf;
    at(z, 1) = inf;
    for (int q = 1; q < n; ++q) {
        auto meet = [&](int p) { return ((at(buf, q) + double(q) * q) - (at(buf, p) + double(p) * p)) / (2.0 * (q - p)); };
        double s = meet(at(v, k));
        while (s <= at(z, k)) {
            --k;
            s = meet(at(v, k));
        }
        ++k;
        at(v, k) = q;
        at(z, k) = s;
        at(z, k + 1) = inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (at(z, k + 1) < q) ++k;
        const int p = at(v, k);
        f[static_cast<std::ptrdiff_t>(q) * stride] = double(q - p) * (q - p) + at(buf, p);
    }
}

std::vector<double> edt(const std::vector<std::uint8_t>& set, int w, int h) {
    std::vector<double> d(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) d[i] = set[i] ? 0.0 : kFar;
    const int n = std::max(w, h);
    std::vector<int> v(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n + 1)), buf(static_cast<std::size_t>(n));
    for (int x = 0; x < w; ++x) distance_1d(d.data() + x, h, w, v, z, buf);
    for (int y = 0; y < h; ++y) {
        double* row = d.data() + static_cast<std::ptrdiff_t>(y) * w;
        distance_1d(row, w, 1, v, z, buf);
    }
    return d;
}

struct Padded {
    std::vector<std::uint8_t> px;
    int w, h, pad;
};

Padded pad_mask(const MaskRaster& mask, int pad) {
    Padded p{{}, mask.width() + 2 * pad, mask.height() + 2 * pad, pad};
    p.px.assign(static_cast<std::size_t>(p.w) * static_cast<std::size_t>(p.h), 0);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            p.px[static_cast<std::size_t>(y + pad) * static_cast<std::size_t>(p.w) + static_cast<std::size_t>(x + pad)] =
                mask.at(x, y) ? 1 : 0;
    return p;
}

MaskRaster crop(const Padded& p, int width, int height) {
    MaskRaster out(width, height, 0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.at(x, y) = p.px[static_cast<std::size_t>(y + p.pad) * static_cast<std::size_t>(p.w) +
                                static_cast<std::size_t>(x + p.pad)];
    return out;
}

void dilate_in_place(Padded& p, int radius) {
    const std::vector<double> d = edt(p.px, p.w, p.h);
    const double r2 = double(radius) * radius;
    for (std::size_t i = 0; i < p.px.size(); ++i) p.px[i] = d[i] <= r2 ? 1 : 0;
}

void erode_in_place(Padded& p, int radius) {
    std::vector<std::uint8_t> complement(p.px.size());
    for (std::size_t i = 0; i < p.px.size(); ++i) complement[i] = p.px[i] ? 0 : 1;
    const std::vector<double> d = edt(complement, p.w, p.h);
    const double r2 = double(radius) * radius;
    for (std::size_t i = 0; i < p.px.size(); ++i) p.px[i] = d[i] > r2 ? 1 : 0;
}

}  // namespace

std::vector<double> squared_distance_transform(const MaskRaster& mask) {
    return edt(mask.data(), mask.width(), mask.height());
}

MaskRaster dilate_mask(const MaskRaster& mask, int radius) {
    if (radius < 0) throw Error("negative structuring radius");
    Padded p = pad_mask(mask, 0);
    dilate_in_place(p, radius);
    return crop(p, mask.width(), mask.height());
}

MaskRaster erode_mask(const MaskRaster& mask, int radius) {
    if (radius < 0) throw Error("negative structuring radius");
    Padded p = pad_mask(mask, 1);
    erode_in_place(p, radius);
    return crop(p, mask.width(), mask.height());
}

MaskRaster close_mask(const MaskRaster& mask, int radius) {
    if (radius < 0) throw Error("negative structuring radius");
    Padded p = pad_mask(mask, radius + 1);
    dilate_in_place(p, radius);
    erode_in_place(p, radius);
    return crop(p, mask.width(), mask.height());
}

MaskRaster close_regions(const SegmentGroup& group, const std::vector<SketchSegment>& segments, double delta2,
                         int width, int height) {
    MaskRaster mask(width, height, 0);
    for (int m : group.members) draw_segment(mask, segments[static_cast<std::size_t>(m)]);
    return close_mask(mask, static_cast<int>(std::lround(delta2)));
}

bool in_structural_block(const SketchSegment& s, double block_width, double px, double py) {
    const Point d = s.direction();
    const double rx = px - s.head.x;
    const double ry = py - s.head.y;
    const double u = rx * d.x + ry * d.y;
    const double v = -rx * d.y + ry * d.x;
    return u >= -0.5 && u < s.length + 0.5 && std::abs(v) < block_width / 2.0;
}

MaskRaster structural_blocks(const std::vector<SketchSegment>& segments, double block_width, int width, int height) {
    MaskRaster mask(width, height, 0);
    const double reach = block_width / 2.0 + 1.0;
    for (const auto& s : segments) {
        if (s.label != SegmentLabel::IS) continue;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.head.x, s.tail.x) - reach)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(s.head.x, s.tail.x) + reach)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.head.y, s.tail.y) - reach)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(s.head.y, s.tail.y) + reach)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                if (in_structural_block(s, block_width, x, y)) mask.at(x, y) = 1;
    }
    return mask;
}

const char* region_label_name(RegionLabel label) {
    switch (label) {
        case RegionLabel::Homogenous: return "homogenous";
        case RegionLabel::Structural: return "structural";
        case RegionLabel::Aggregated: return "aggregated";
    }
    return "?";
}

RegionMap build_region_map(const std::vector<MaskRaster>& group_masks, const std::vector<int>& group_ids,
                           const MaskRaster& structural, int width, int height) {
    if (group_masks.size() != group_ids.size()) throw Error("group masks and ids differ in count");
    RegionMap map;
    map.labels = Raster<std::uint8_t>(width, height, static_cast<std::uint8_t>(RegionLabel::Homogenous));
    map.aggregated_id = LabelRaster(width, height, -1);
    if (!structural.empty()) {
        if (structural.width() != width || structural.height() != height) throw Error("structural mask shape mismatch");
        for (std::size_t i = 0; i < structural.size(); ++i)
            if (structural[i]) map.labels[i] = static_cast<std::uint8_t>(RegionLabel::Structural);
    }
    for (std::size_t g = 0; g < group_masks.size(); ++g) {
        const MaskRaster& m = group_masks[g];
        if (m.width() != width || m.height() != height) throw Error("group mask shape mismatch");
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (!m[i] || map.aggregated_id[i] >= 0) continue;
            map.labels[i] = static_cast<std::uint8_t>(RegionLabel::Aggregated);
            map.aggregated_id[i] = group_ids[g];
        }
    }
    return map;
}

RegionResult build_region_map(const sketch::SketchMap& sketch, const RegionOptions& opts) {
    RegionResult result;
    result.segments = sketch.segments();
    result.labeling = label_segments(result.segments, opts.labels);
    if (!result.labeling.degenerate) {
        result.groups = group_segments(result.segments, result.labeling.stats.delta2, opts.labels.k);
    }
    std::vector<MaskRaster> masks;
    std::vector<int> ids;
    for (const auto& g : result.groups) {
        masks.push_back(close_regions(g, result.segments, result.labeling.stats.delta2, sketch.width, sketch.height));
        ids.push_back(g.id);
    }
    const MaskRaster structural = structural_blocks(result.segments, opts.block_width, sketch.width, sketch.height);
    result.map = build_region_map(masks, ids, structural, sketch.width, sketch.height);
    return result;
}

}  // namespace phsm::region
