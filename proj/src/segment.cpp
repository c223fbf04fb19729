#include "phsm/segment.hpp"

#include "phsm/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

namespace phsm::segment {

Matrix3c RegionStats::mean() const {
    if (count == 0) return Matrix3c::Zero();
    return sum / static_cast<double>(count);
}

void RegionStats::add(const RegionStats& other) {
    count += other.count;
    sum += other.sum;
}

namespace {

/// Renumbers labels by first appearance; returns old -> new for labels seen.
std::map<std::int32_t, std::int32_t> compact(LabelRaster& ids) {
    std::map<std::int32_t, std::int32_t> remap;
    for (auto& v : ids.data()) {
        auto [it, inserted] = remap.emplace(v, static_cast<std::int32_t>(remap.size()));
        v = it->second;
    }
    return remap;
}

}  // namespace

Partition make_partition(const CoherencyImage& img, const LabelRaster& ids) {
    if (!ids.same_shape(img.pixels)) throw Error("partition shape differs from image");
    Partition p;
    p.ids = ids;
    for (auto v : p.ids.data()) {
        if (v < 0) throw Error("negative region id");
    }
    compact(p.ids);
    int count = 0;
    for (auto v : p.ids.data()) count = std::max(count, v + 1);
    p.regions.assign(static_cast<std::size_t>(count), RegionStats{});
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
        RegionStats& r = p.regions[static_cast<std::size_t>(p.ids[i])];
        ++r.count;
        r.sum += img.pixels[i];
    }
    return p;
}

std::vector<std::pair<int, int>> adjacency(const LabelRaster& ids) {
    std::vector<std::pair<int, int>> pairs;
    for (int y = 0; y < ids.height(); ++y) {
        for (int x = 0; x < ids.width(); ++x) {
            const int a = ids.at(x, y);
            if (x + 1 < ids.width() && ids.at(x + 1, y) != a) pairs.emplace_back(std::min(a, ids.at(x + 1, y)), std::max(a, ids.at(x + 1, y)));
            if (y + 1 < ids.height() && ids.at(x, y + 1) != a) pairs.emplace_back(std::min(a, ids.at(x, y + 1)), std::max(a, ids.at(x, y + 1)));
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

std::vector<std::array<double, 3>> log_pauli_features(const CoherencyImage& img) {
    double mean_power = 0.0;
    for (const Matrix3c& t : img.pixels.data()) mean_power += t.trace().real();
    if (!img.pixels.empty()) mean_power /= 3.0 * static_cast<double>(img.pixels.size());
    const double floor = mean_power > 0.0 ? 1e-10 * mean_power : 1e-30;
    std::vector<std::array<double, 3>> out(img.pixels.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Matrix3c& t = img.pixels[i];
        const double powers[3] = {t(1, 1).real(), t(2, 2).real(), t(0, 0).real()};
        for (int c = 0; c < 3; ++c) out[i][static_cast<std::size_t>(c)] = 10.0 * std::log10(std::max(powers[c], floor));
    }
    return out;
}

namespace {

double range_dist2(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return s;
}

std::vector<std::array<double, 3>> filter_modes(const std::vector<std::array<double, 3>>& f, int w, int h,
                                                const MeanShiftOptions& opts) {
    const double hs = opts.h_spatial;
    const double hr = opts.h_range;
    const int reach = static_cast<int>(std::floor(hs));
    const double tol2 = opts.tolerance * opts.tolerance;
    std::vector<std::array<double, 3>> modes(f.size());
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            double cx = x0, cy = y0;
            std::array<double, 3> cf = f[static_cast<std::size_t>(y0) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x0)];
            for (int it = 0; it < opts.max_iterations; ++it) {
                const int ix = static_cast<int>(std::lround(cx));
                const int iy = static_cast<int>(std::lround(cy));
                double sx = 0.0, sy = 0.0, n = 0.0;
                std::array<double, 3> sf{0.0, 0.0, 0.0};
                for (int qy = std::max(0, iy - reach); qy <= std::min(h - 1, iy + reach); ++qy) {
                    for (int qx = std::max(0, ix - reach); qx <= std::min(w - 1, ix + reach); ++qx) {
                        const double ds = ((qx - cx) * (qx - cx) + (qy - cy) * (qy - cy)) / (hs * hs);
                        if (ds > 1.0) continue;
                        const auto& fq = f[static_cast<std::size_t>(qy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(qx)];
                        if (range_dist2(fq, cf) > hr * hr) continue;
                        sx += qx;
                        sy += qy;
                        for (std::size_t c = 0; c < 3; ++c) sf[c] += fq[c];
                        n += 1.0;
                    }
                }
                if (n == 0.0) break;
                const double nx = sx / n, ny = sy / n;
                std::array<double, 3> nf{sf[0] / n, sf[1] / n, sf[2] / n};
                const double shift = ((nx - cx) * (nx - cx) + (ny - cy) * (ny - cy)) / (hs * hs) + range_dist2(nf, cf) / (hr * hr);
                cx = nx;
                cy = ny;
                cf = nf;
                if (shift < tol2) break;
            }
            modes[static_cast<std::size_t>(y0) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x0)] = cf;
        }
    }
    return modes;
}

}  // namespace

Partition mean_shift_superpixels(const CoherencyImage& img, const MeanShiftOptions& opts) {
    if (!(opts.h_spatial > 0.0) || !(opts.h_range > 0.0)) throw Error("mean-shift bandwidths must be positive");
    const int w = img.width();
    const int h = img.height();
    const auto features = log_pauli_features(img);
    const auto modes = filter_modes(features, w, h, opts);

    // Group neighbouring pixels whose modes agree within h_range / 2.
    LabelRaster ids(w, h, -1);
    const double join2 = (opts.h_range / 2.0) * (opts.h_range / 2.0);
    int next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < ids.size(); ++start) {
        if (ids[start] >= 0) continue;
        ids[start] = next;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(i % static_cast<std::size_t>(w));
            const int y = static_cast<int>(i / static_cast<std::size_t>(w));
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4; ++k) {
                if (!ids.contains(nx[k], ny[k])) continue;
                const std::size_t j = ids.index(nx[k], ny[k]);
                if (ids[j] >= 0 || range_dist2(modes[i], modes[j]) >= join2) continue;
                ids[j] = next;
                stack.push_back(j);
            }
        }
        ++next;
    }

    // Absorb small regions, smallest first, into the neighbour with the closest mean mode.
    std::vector<std::int64_t> size(static_cast<std::size_t>(next), 0);
    std::vector<std::array<double, 3>> mode_sum(static_cast<std::size_t>(next), {0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto r = static_cast<std::size_t>(ids[i]);
        ++size[r];
        for (std::size_t c = 0; c < 3; ++c) mode_sum[r][c] += modes[i][c];
    }
    std::vector<std::set<int>> adj(static_cast<std::size_t>(next));
    for (auto [a, b] : adjacency(ids)) {
        adj[static_cast<std::size_t>(a)].insert(b);
        adj[static_cast<std::size_t>(b)].insert(a);
    }
    std::vector<int> parent(static_cast<std::size_t>(next));
    std::iota(parent.begin(), parent.end(), 0);
    auto mean_mode = [&](int r) {
        const auto& s = mode_sum[static_cast<std::size_t>(r)];
        const double n = static_cast<double>(size[static_cast<std::size_t>(r)]);
        return std::array<double, 3>{s[0] / n, s[1] / n, s[2] / n};
    };
    std::set<std::pair<std::int64_t, int>> small;
    for (int r = 0; r < next; ++r) {
        if (size[static_cast<std::size_t>(r)] < opts.min_region) small.insert({size[static_cast<std::size_t>(r)], r});
    }
    while (!small.empty()) {
        const int r = small.begin()->second;
        small.erase(small.begin());
        auto& nbrs = adj[static_cast<std::size_t>(r)];
        if (nbrs.empty()) continue;  // the whole image is this one region
        const auto mr = mean_mode(r);
        int best = -1;
        double best_d = 0.0;
        for (int q : nbrs) {
            const double d = range_dist2(mr, mean_mode(q));
            if (best < 0 || d < best_d) {
                best = q;
                best_d = d;
            }
        }
        small.erase({size[static_cast<std::size_t>(best)], best});
        parent[static_cast<std::size_t>(r)] = best;
        size[static_cast<std::size_t>(best)] += size[static_cast<std::size_t>(r)];
        for (std::size_t c = 0; c < 3; ++c) mode_sum[static_cast<std::size_t>(best)][c] += mode_sum[static_cast<std::size_t>(r)][c];
        for (int q : nbrs) {
            auto& qn = adj[static_cast<std::size_t>(q)];
            qn.erase(r);
            if (q != best) {
                qn.insert(best);
                adj[static_cast<std::size_t>(best)].insert(q);
            }
        }
        nbrs.clear();
        if (size[static_cast<std::size_t>(best)] < opts.min_region) small.insert({size[static_cast<std::size_t>(best)], best});
    }
    auto root = [&](int r) {
        while (parent[static_cast<std::size_t>(r)] != r) r = parent[static_cast<std::size_t>(r)];
        return r;
    };
    for (auto& v : ids.data()) v = root(v);
    return make_partition(img, ids);
}

std::vector<RegionLabel> map_region_to_superpixels(const Partition& partition, const region::RegionMap& map) {
    if (!partition.ids.same_shape(map.labels)) throw Error("region map shape differs from partition");
    std::vector<std::array<std::int64_t, 3>> counts(partition.regions.size(), {0, 0, 0});
    for (std::size_t i = 0; i < partition.ids.size(); ++i) {
        ++counts[static_cast<std::size_t>(partition.ids[i])][map.labels[i]];
    }
    std::vector<RegionLabel> out;
    out.reserve(counts.size());
    for (const auto& c : counts) {
        RegionLabel best = RegionLabel::Aggregated;
        for (RegionLabel l : {RegionLabel::Structural, RegionLabel::Homogenous}) {
            if (c[static_cast<std::size_t>(l)] > c[static_cast<std::size_t>(best)]) best = l;
        }
        out.push_back(best);
    }
    return out;
}

AggregatedMerge merge_aggregated(const CoherencyImage& img, const Partition& partition, const region::RegionMap& map) {
    if (!partition.ids.same_shape(map.labels)) throw Error("region map shape differs from partition");
    const int n = partition.count();
    std::vector<std::map<int, std::int64_t>> overlap(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < partition.ids.size(); ++i) {
        const int g = map.aggregated_id[i];
        if (g >= 0) ++overlap[static_cast<std::size_t>(partition.ids[i])][g];
    }
    std::vector<int> target(static_cast<std::size_t>(n), -1);
    for (int r = 0; r < n; ++r) {
        for (const auto& [g, c] : overlap[static_cast<std::size_t>(r)]) {
            if (2 * c > partition.regions[static_cast<std::size_t>(r)].count) target[static_cast<std::size_t>(r)] = g;
        }
    }
    LabelRaster ids = partition.ids;
    for (auto& v : ids.data()) {
        const int g = target[static_cast<std::size_t>(v)];
        if (g >= 0) v = n + g;
    }
    AggregatedMerge out;
    out.partition = make_partition(img, ids);
    out.group_of_region.assign(static_cast<std::size_t>(out.partition.count()), -1);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= n) out.group_of_region[static_cast<std::size_t>(out.partition.ids[i])] = ids[i] - n;
    }
    return out;
}

double region_cost(const RegionStats& r, double looks) {
    if (r.count == 0) return 0.0;
    return looks * static_cast<double>(r.count) * loaded_log_det(r.mean());
}

double sc_criterion(const RegionStats& a, const RegionStats& b, double looks) {
    RegionStats pooled = a;
    pooled.add(b);
    return region_cost(pooled, looks) - region_cost(a, looks) - region_cost(b, looks);
}

MergeResult hierarchical_merge(const Partition& partition, const std::vector<bool>& eligible, int n_r, double looks,
                               bool record_costs) {
    const int n = partition.count();
    if (static_cast<int>(eligible.size()) != n) throw Error("eligibility list does not match partition");
    if (n_r < 1) throw Error("N_r must be >= 1");

    std::vector<RegionStats> stats = partition.regions;
    std::vector<double> cost(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < n; ++r) cost[static_cast<std::size_t>(r)] = region_cost(stats[static_cast<std::size_t>(r)], looks);
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::set<int>> adj(static_cast<std::size_t>(n));
    for (auto [a, b] : adjacency(partition.ids)) {
        if (!eligible[static_cast<std::size_t>(a)] || !eligible[static_cast<std::size_t>(b)]) continue;
        adj[static_cast<std::size_t>(a)].insert(b);
        adj[static_cast<std::size_t>(b)].insert(a);
    }
    std::vector<bool> alive(eligible);
    std::vector<int> version(static_cast<std::size_t>(n), 0);

    using Entry = std::tuple<double, int, int, int, int>;  // sc, a, b, version a, version b
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
    auto pair_sc = [&](int a, int b) {
        const double merged = region_cost([&] {
            RegionStats s = stats[static_cast<std::size_t>(a)];
            s.add(stats[static_cast<std::size_t>(b)]);
            return s;
        }(), looks);
        return merged - cost[static_cast<std::size_t>(a)] - cost[static_cast<std::size_t>(b)];
    };
    auto push = [&](int a, int b) {
        if (b < a) std::swap(a, b);
        queue.emplace(pair_sc(a, b), a, b, version[static_cast<std::size_t>(a)], version[static_cast<std::size_t>(b)]);
    };
    for (int a = 0; a < n; ++a)
        for (int b : adj[static_cast<std::size_t>(a)])
            if (a < b) push(a, b);

    MergeResult result;
    int remaining = static_cast<int>(std::count(eligible.begin(), eligible.end(), true));
    if (n_r > remaining) result.target_unreachable = true;
    auto total_cost = [&] {
        double sum = 0.0;
        for (int r = 0; r < n; ++r)
            if (alive[static_cast<std::size_t>(r)]) sum += region_cost(stats[static_cast<std::size_t>(r)], looks);
        return sum;
    };
    double running = record_costs ? total_cost() : 0.0;
    while (remaining > n_r && !queue.empty()) {
        const auto [sc, a, b, va, vb] = queue.top();
        queue.pop();
        if (!alive[static_cast<std::size_t>(a)] || !alive[static_cast<std::size_t>(b)] ||
            va != version[static_cast<std::size_t>(a)] || vb != version[static_cast<std::size_t>(b)]) {
            continue;
        }
        MergeStep step{a, b, sc, running, 0.0};
        stats[static_cast<std::size_t>(a)].add(stats[static_cast<std::size_t>(b)]);
        cost[static_cast<std::size_t>(a)] = region_cost(stats[static_cast<std::size_t>(a)], looks);
        alive[static_cast<std::size_t>(b)] = false;
        parent[static_cast<std::size_t>(b)] = a;
        ++version[static_cast<std::size_t>(a)];
        for (int q : adj[static_cast<std::size_t>(b)]) {
            auto& qn = adj[static_cast<std::size_t>(q)];
            qn.erase(b);
            if (q != a) {
                qn.insert(a);
                adj[static_cast<std::size_t>(a)].insert(q);
            }
        }
        adj[static_cast<std::size_t>(b)].clear();
        adj[static_cast<std::size_t>(a)].erase(a);
        for (int q : adj[static_cast<std::size_t>(a)]) push(a, q);
        --remaining;
        if (record_costs) {
            step.cost_after = total_cost();
            running = step.cost_after;
        }
        result.steps.push_back(step);
    }

    auto root = [&](int r) {
        while (parent[static_cast<std::size_t>(r)] != r) r = parent[static_cast<std::size_t>(r)];
        return r;
    };
    LabelRaster ids = partition.ids;
    for (auto& v : ids.data()) v = root(v);
    const auto remap = compact(ids);
    result.old_to_new.assign(static_cast<std::size_t>(n), -1);
    for (int r = 0; r < n; ++r) {
        const auto it = remap.find(root(r));
        if (it != remap.end()) result.old_to_new[static_cast<std::size_t>(r)] = it->second;
    }
    result.partition.ids = std::move(ids);
    result.partition.regions.assign(remap.size(), RegionStats{});
    for (int r = 0; r < n; ++r) {
        if (root(r) == r) result.partition.regions[static_cast<std::size_t>(result.old_to_new[static_cast<std::size_t>(r)])] = stats[static_cast<std::size_t>(r)];
    }
    return result;
}

std::vector<StructuralBlock> carve_structural(const std::vector<sketch::SketchSegment>& segments,
                                              const region::RegionMap& map, double block_width) {
    const int w = map.labels.width();
    const int h = map.labels.height();
    MaskRaster claimed(w, h, 0);
    std::vector<StructuralBlock> blocks;
    const double reach = block_width / 2.0 + 1.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (s.label != sketch::SegmentLabel::IS) continue;
        StructuralBlock block{static_cast<int>(i), {}};
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.head.x, s.tail.x) - reach)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(s.head.x, s.tail.x) + reach)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.head.y, s.tail.y) - reach)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(s.head.y, s.tail.y) + reach)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (claimed.at(x, y) || map.at(x, y) != RegionLabel::Structural) continue;
                if (!region::in_structural_block(s, block_width, x, y)) continue;
                claimed.at(x, y) = 1;
                block.pixels.push_back({x, y});
            }
        }
        if (!block.pixels.empty()) blocks.push_back(std::move(block));
    }
    return blocks;
}

SplitOutcome split_structural(const StructuralBlock& block, const sketch::SketchSegment& segment,
                              const ScalarRaster& energy, double block_width) {
    SplitOutcome out;
    if (block_width < 3.0) {
        out.reason = "block too thin to split";
        return out;
    }
    const Point d = segment.direction();
    struct Sample {
        int t, o;
    };
    std::vector<Sample> samples;
    samples.reserve(block.pixels.size());
    std::map<int, std::pair<int, double>> best;  // t -> (offset, energy)
    auto better = [](int o, double e, int bo, double be) {
        if (e != be) return e > be;
        if (std::abs(o) != std::abs(bo)) return std::abs(o) < std::abs(bo);
        return o < bo;
    };
    for (Pixel p : block.pixels) {
        const double rx = p.x - segment.head.x;
        const double ry = p.y - segment.head.y;
        const int t = static_cast<int>(std::lround(rx * d.x + ry * d.y));
        const int o = static_cast<int>(std::lround(-rx * d.y + ry * d.x));
        samples.push_back({t, o});
        const double e = energy.at(p.x, p.y);
        auto it = best.find(t);
        if (it == best.end() || better(o, e, it->second.first, it->second.second)) best[t] = {o, e};
    }
    std::vector<int> ts, raw;
    for (const auto& [t, oe] : best) {
        ts.push_back(t);
        raw.push_back(oe.first);
    }
    std::map<int, int> edge;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        int smoothed = raw[k];
        if (k > 0 && k + 1 < raw.size()) {
            std::array<int, 3> w3{raw[k - 1], raw[k], raw[k + 1]};
            std::sort(w3.begin(), w3.end());
            smoothed = w3[1];
        }
        edge[ts[k]] = smoothed;
        out.edge_offsets.push_back(smoothed);
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (samples[i].o <= edge[samples[i].t] ? out.side_a : out.side_b).push_back(block.pixels[i]);
    }
    out.split = !out.side_a.empty() && !out.side_b.empty();
    if (!out.split) out.reason = "edge leaves one side empty";
    return out;
}

Segmentation segment_image(const CoherencyImage& img, const Partition& superpixels, const region::RegionResult& regions,
                           const ScalarRaster& energy, const SegmentOptions& opts) {
    Segmentation seg;
    seg.superpixels = superpixels.count();
    if (!opts.use_region_map) {
        // Without the region map the superpixels are the segmentation.
        seg.region_id = superpixels.ids;
        seg.subspace.assign(superpixels.regions.size(), RegionLabel::Homogenous);
        return seg;
    }

    const region::RegionMap& map = regions.map;
    const std::vector<StructuralBlock> blocks = carve_structural(regions.segments, map, opts.block_width);
    seg.structural_blocks = static_cast<int>(blocks.size());

    // Blocks become regions of their own; superpixels keep what is left.
    const int base = superpixels.count();
    LabelRaster ids = superpixels.ids;
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (Pixel p : blocks[b].pixels) ids.at(p.x, p.y) = base + static_cast<int>(b);
    const Partition carved = make_partition(img, ids);

    AggregatedMerge agg = merge_aggregated(img, carved, map);
    const Partition& p2 = agg.partition;
    std::vector<int> block_region(blocks.size());
    std::vector<bool> is_block(static_cast<std::size_t>(p2.count()), false);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const Pixel first = blocks[b].pixels.front();
        block_region[b] = p2.ids.at(first.x, first.y);
        is_block[static_cast<std::size_t>(block_region[b])] = true;
    }
    const std::vector<RegionLabel> subspace = map_region_to_superpixels(p2, map);
    std::vector<bool> eligible(static_cast<std::size_t>(p2.count()));
    for (int r = 0; r < p2.count(); ++r) {
        const auto i = static_cast<std::size_t>(r);
        eligible[i] = !is_block[i] && agg.group_of_region[i] < 0 && subspace[i] == RegionLabel::Homogenous;
    }
    seg.aggregated_regions = static_cast<int>(std::count_if(agg.group_of_region.begin(), agg.group_of_region.end(),
                                                             [](int g) { return g >= 0; }));

    MergeResult merged = hierarchical_merge(p2, eligible, opts.n_r, img.looks);
    if (merged.target_unreachable) seg.warnings.push_back("N_r exceeds the homogenous region count");
    seg.merge_steps = std::move(merged.steps);

    std::vector<RegionLabel> tags(merged.partition.regions.size(), RegionLabel::Homogenous);
    for (int r = 0; r < p2.count(); ++r) {
        const auto i = static_cast<std::size_t>(r);
        const int out = merged.old_to_new[i];
        if (out < 0) continue;
        if (is_block[i]) tags[static_cast<std::size_t>(out)] = RegionLabel::Structural;
        else if (agg.group_of_region[i] >= 0 || subspace[i] == RegionLabel::Aggregated) tags[static_cast<std::size_t>(out)] = RegionLabel::Aggregated;
    }

    LabelRaster final_ids = std::move(merged.partition.ids);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& segment = regions.segments[static_cast<std::size_t>(blocks[b].segment)];
        const SplitOutcome split = split_structural(blocks[b], segment, energy, opts.block_width);
        if (!split.split) {
            seg.warnings.push_back("structural block " + std::to_string(b) + " unsplit: " + split.reason);
            continue;
        }
        const int child = static_cast<int>(tags.size());
        tags.push_back(RegionLabel::Structural);
        for (Pixel p : split.side_b) final_ids.at(p.x, p.y) = child;
        ++seg.structural_splits;
    }

    const auto remap = compact(final_ids);
    seg.subspace.assign(remap.size(), RegionLabel::Homogenous);
    for (const auto& [old_id, new_id] : remap) seg.subspace[static_cast<std::size_t>(new_id)] = tags[static_cast<std::size_t>(old_id)];
    seg.region_id = std::move(final_ids);
    return seg;
}

}  // namespace phsm::segment
