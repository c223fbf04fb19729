#include "phsm/sketch.hpp"

#include "phsm/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace phsm::sketch {

const char* label_name(SegmentLabel label) {
    switch (label) {
        case SegmentLabel::AS: return "AS";
        case SegmentLabel::IS: return "IS";
        case SegmentLabel::Unlabeled: break;
    }
    return "U";
}

SegmentLabel parse_label(const std::string& name) {
    if (name == "AS") return SegmentLabel::AS;
    if (name == "IS") return SegmentLabel::IS;
    if (name == "U") return SegmentLabel::Unlabeled;
    throw Error("unknown segment label: " + name);
}

Point SketchSegment::direction() const {
    const double dx = tail.x - head.x;
    const double dy = tail.y - head.y;
    const double len = std::hypot(dx, dy);
    if (!(len > 0.0)) return {1.0, 0.0};
    return {dx / len, dy / len};
}

SketchSegment make_segment(Point head, Point tail, SegmentLabel label) {
    SketchSegment s;
    s.head = head;
    s.tail = tail;
    s.length = std::hypot(tail.x - head.x, tail.y - head.y);
    double theta = std::atan2(tail.y - head.y, tail.x - head.x) * 180.0 / kPi;
    theta = std::fmod(theta + 360.0, 180.0);
    if (theta >= 180.0) theta -= 180.0;
    s.theta_deg = theta;
    s.label = label;
    return s;
}

double SketchLine::total_length() const {
    double sum = 0.0;
    for (const auto& s : segments) sum += s.length;
    return sum;
}

std::vector<SketchSegment> SketchMap::segments() const {
    std::vector<SketchSegment> out;
    for (const auto& line : lines) out.insert(out.end(), line.segments.begin(), line.segments.end());
    return out;
}

std::size_t SketchMap::segment_count() const {
    std::size_t n = 0;
    for (const auto& line : lines) n += line.segments.size();
    return n;
}

namespace {

struct Axis {
    Point centroid;
    Point dir;
};

Axis fit_axis(const std::vector<Pixel>& pts, std::size_t begin, std::size_t end) {
    const double count = static_cast<double>(end - begin);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        mx += pts[i].x;
        my += pts[i].y;
    }
    mx /= count;
    my /= count;
    double cxx = 0.0, cyy = 0.0, cxy = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double dx = pts[i].x - mx;
        const double dy = pts[i].y - my;
        cxx += dx * dx;
        cyy += dy * dy;
        cxy += dx * dy;
    }
    Point dir{1.0, 0.0};
    if (cxx + cyy > 0.0) {
        const double phi = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
        dir = {std::cos(phi), std::sin(phi)};
    }
    // Orient along the run so head -> tail follows trace order.
    const double run_dx = pts[end - 1].x - pts[begin].x;
    const double run_dy = pts[end - 1].y - pts[begin].y;
    if (dir.x * run_dx + dir.y * run_dy < 0.0) dir = {-dir.x, -dir.y};
    return {{mx, my}, dir};
}

double max_deviation(const std::vector<Pixel>& pts, std::size_t begin, std::size_t end, const Axis& axis) {
    double worst = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double dx = pts[i].x - axis.centroid.x;
        const double dy = pts[i].y - axis.centroid.y;
        worst = std::max(worst, std::abs(-axis.dir.y * dx + axis.dir.x * dy));
    }
    return worst;
}

Point project(const Axis& axis, Pixel p) {
    const double t = (p.x - axis.centroid.x) * axis.dir.x + (p.y - axis.centroid.y) * axis.dir.y;
    return {axis.centroid.x + t * axis.dir.x, axis.centroid.y + t * axis.dir.y};
}

constexpr std::array<Pixel, 8> kNeighbours = {
    Pixel{-1, -1}, Pixel{0, -1}, Pixel{1, -1}, Pixel{-1, 0}, Pixel{1, 0}, Pixel{-1, 1}, Pixel{0, 1}, Pixel{1, 1}};

/// Follows unvisited edge pixels from `start`, preferring the step closest to
/// the running direction and never turning back by more than 90 degrees.
std::vector<Pixel> trace_arm(const MaskRaster& edges, MaskRaster& visited, Pixel start, Point dir) {
    std::vector<Pixel> arm;
    std::vector<Pixel> history{start};
    Pixel cur = start;
    while (true) {
        int best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 8; ++k) {
            const Pixel q{cur.x + kNeighbours[k].x, cur.y + kNeighbours[k].y};
            if (!edges.contains(q.x, q.y) || !edges.at(q.x, q.y) || visited.at(q.x, q.y)) continue;
            const double len = std::hypot(kNeighbours[k].x, kNeighbours[k].y);
            const double cosine = (kNeighbours[k].x * dir.x + kNeighbours[k].y * dir.y) / len;
            if (cosine < -1e-9) continue;
            // Straighter first; among equals the shorter (4-connected) step.
            const double score = cosine - 1e-6 * len;
            if (score > best_score + 1e-12) {
                best_score = score;
                best = k;
            }
        }
        if (best < 0) break;
        cur = {cur.x + kNeighbours[best].x, cur.y + kNeighbours[best].y};
        visited.at(cur.x, cur.y) = 1;
        arm.push_back(cur);
        history.push_back(cur);
        const Pixel back = history[history.size() - 1 - std::min<std::size_t>(3, history.size() - 1)];
        const double dx = cur.x - back.x;
        const double dy = cur.y - back.y;
        const double len = std::hypot(dx, dy);
        if (len > 0.0) dir = {dx / len, dy / len};
    }
    return arm;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> split_chain(const std::vector<Pixel>& chain, double max_dev) {
    std::vector<std::pair<std::size_t, std::size_t>> pieces;
    std::size_t begin = 0;
    while (begin < chain.size()) {
        std::size_t end = begin + 1;
        while (end < chain.size()) {
            const Axis axis = fit_axis(chain, begin, end + 1);
            if (max_deviation(chain, begin, end + 1, axis) > max_dev) break;
            ++end;
        }
        pieces.emplace_back(begin, end);
        begin = end;
    }
    return pieces;
}

SketchSegment fit_segment(const std::vector<Pixel>& run) {
    if (run.empty()) throw Error("fit_segment: empty run");
    const Axis axis = fit_axis(run, 0, run.size());
    SketchSegment s = make_segment(project(axis, run.front()), project(axis, run.back()));
    s.support = run;
    return s;
}

std::vector<SketchLine> pursue_sketch(const MaskRaster& edges, const detect::EnergyField& energy,
                                      const PursuitOptions& opts) {
    if (!edges.same_shape(energy.energy)) throw Error("pursue_sketch: shape mismatch");
    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (edges[i]) seeds.push_back(i);
    }
    std::stable_sort(seeds.begin(), seeds.end(),
                     [&](std::size_t a, std::size_t b) { return energy.energy[a] > energy.energy[b]; });

    const int w = edges.width();
    MaskRaster visited(w, edges.height(), 0);
    std::vector<SketchLine> lines;
    for (std::size_t idx : seeds) {
        if (visited[idx]) continue;
        visited[idx] = 1;
        const Pixel seed{static_cast<int>(idx % static_cast<std::size_t>(w)), static_cast<int>(idx / static_cast<std::size_t>(w))};
        Point dir{1.0, 0.0};
        if (energy.orientation[idx] >= 0) {
            const double t = energy.orientation_deg(seed.x, seed.y) * kPi / 180.0;
            dir = {std::cos(t), std::sin(t)};
        }
        std::vector<Pixel> backward = trace_arm(edges, visited, seed, {-dir.x, -dir.y});
        const std::vector<Pixel> forward = trace_arm(edges, visited, seed, dir);
        std::vector<Pixel> chain(backward.rbegin(), backward.rend());
        chain.push_back(seed);
        chain.insert(chain.end(), forward.begin(), forward.end());
        if (static_cast<double>(chain.size()) < opts.min_segment_length) continue;

        SketchLine line;
        for (const auto& [b, e] : split_chain(chain, opts.max_deviation)) {
            SketchSegment seg = fit_segment({chain.begin() + static_cast<std::ptrdiff_t>(b),
                                             chain.begin() + static_cast<std::ptrdiff_t>(e)});
            if (seg.length < opts.min_segment_length) continue;
            if (!line.segments.empty()) {
                const Point& prev = line.segments.back().tail;
                if (std::hypot(seg.head.x - prev.x, seg.head.y - prev.y) > 2.0) {
                    lines.push_back(std::move(line));
                    line = SketchLine{};
                }
            }
            line.segments.push_back(std::move(seg));
        }
        if (!line.segments.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

Flanks line_flanks(const SketchLine& line, int width, int height, int flank_width) {
    auto key = [width](Pixel p) { return static_cast<long>(p.y) * width + p.x; };
    Flanks out;
    std::vector<long> left, right;
    for (const auto& seg : line.segments) {
        const Point d = seg.direction();
        const Point n{-d.y, d.x};
        const int steps = static_cast<int>(std::ceil(seg.length * 2.0));
        for (int i = 0; i <= steps; ++i) {
            const double t = steps == 0 ? 0.0 : seg.length * i / steps;
            const double px = seg.head.x + t * d.x;
            const double py = seg.head.y + t * d.y;
            for (int k = 1; k <= flank_width; ++k) {
                for (int side : {1, -1}) {
                    const Pixel q{static_cast<int>(std::lround(px + side * k * n.x)),
                                  static_cast<int>(std::lround(py + side * k * n.y))};
                    if (q.x < 0 || q.y < 0 || q.x >= width || q.y >= height) {
                        ++(side > 0 ? out.clipped_left : out.clipped_right);
                        continue;
                    }
                    (side > 0 ? left : right).push_back(key(q));
                }
            }
        }
    }
    auto unique_sorted = [](std::vector<long>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    unique_sorted(left);
    unique_sorted(right);
    std::vector<long> both;
    std::set_intersection(left.begin(), left.end(), right.begin(), right.end(), std::back_inserter(both));
    auto keep = [&](const std::vector<long>& src, std::vector<Pixel>& dst) {
        for (long k : src) {
            if (std::binary_search(both.begin(), both.end(), k)) continue;
            dst.push_back({static_cast<int>(k % width), static_cast<int>(k / width)});
        }
    };
    keep(left, out.left);
    keep(right, out.right);
    return out;
}

double Flanks::clipped_fraction() const {
    const double total = static_cast<double>(left.size() + right.size() + clipped_left + clipped_right);
    if (!(total > 0.0)) return 1.0;
    return static_cast<double>(std::max(clipped_left, clipped_right)) / total * 2.0;
}

double line_significance(const SketchLine& line, const CoherencyImage& img, int flank_width) {
    const Flanks f = line_flanks(line, img.width(), img.height(), flank_width);
    if (f.left.empty() || f.right.empty()) return 0.0;
    if (f.clipped_fraction() > kMaxClippedFraction) return 0.0;
    auto mean = [&](const std::vector<Pixel>& px) {
        Matrix3c sum = Matrix3c::Zero();
        for (Pixel p : px) sum += img.pixels.at(p.x, p.y);
        return Matrix3c(sum / static_cast<double>(px.size()));
    };
    const double n = img.looks * static_cast<double>(f.left.size());
    const double m = img.looks * static_cast<double>(f.right.size());
    return detect::wishart_energy(mean(f.left), mean(f.right), n, m);
}

double first_peak_threshold(const std::vector<double>& clg, int bins, double upper_quantile) {
    if (clg.empty()) return 0.0;
    if (bins < 1) throw Error("histogram needs at least one bin");
    const double hi = percentile(clg, upper_quantile);
    if (!(hi > 0.0)) return 0.0;
    // Binned on log(1 + clg): the noise mode sits at a few tens while real
    // boundaries reach thousands, so linear bins would swallow the noise mode.
    const double top = std::log1p(hi);
    std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
    for (double v : clg) {
        // Untestable lines score exactly 0 and would otherwise form a spurious first mode.
        if (!(v > 0.0) || v > hi) continue;
        const int b = std::min(bins - 1, static_cast<int>(std::log1p(v) / top * bins));
        hist[static_cast<std::size_t>(b)] += 1.0;
    }
    std::vector<double> smooth(hist.size(), 0.0);
    for (int i = 0; i < bins; ++i) {
        double s = 0.0;
        for (int j = i - 1; j <= i + 1; ++j) {
            if (j >= 0 && j < bins) s += hist[static_cast<std::size_t>(j)];
        }
        smooth[static_cast<std::size_t>(i)] = s / 3.0;
    }
    for (int i = 0; i < bins; ++i) {
        const double s = smooth[static_cast<std::size_t>(i)];
        if (!(s > 0.0)) continue;
        const bool rising = i == 0 || s >= smooth[static_cast<std::size_t>(i - 1)];
        const bool falling = i == bins - 1 || s > smooth[static_cast<std::size_t>(i + 1)];
        if (!(rising && falling)) continue;
        // The top edge is returned exactly so ties at the maximum survive.
        return i == bins - 1 ? hi : std::expm1(top * (i + 1) / bins);
    }
    return hi;
}

Selection select_lines(std::vector<SketchLine> lines, int width, int height, const SelectOptions& opts) {
    Selection out;
    out.map.width = width;
    out.map.height = height;
    double threshold = opts.value;
    if (opts.mode == ClgMode::Auto) {
        std::vector<double> clg;
        clg.reserve(lines.size());
        for (const auto& l : lines) clg.push_back(l.clg);
        threshold = std::max(first_peak_threshold(clg, opts.bins, opts.upper_quantile), opts.floor);
    }
    out.map.threshold = threshold;
    const bool had_lines = !lines.empty();
    for (auto& l : lines) {
        if (l.clg >= threshold) out.map.lines.push_back(std::move(l));
    }
    out.empty_warning = had_lines && out.map.lines.empty();
    return out;
}

std::string to_text(const SketchMap& map) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "# phsm sketch map\n";
    os << "size " << map.width << ' ' << map.height << '\n';
    os << "threshold " << map.threshold << '\n';
    os << "# line head_x head_y tail_x tail_y theta length label clg\n";
    for (std::size_t i = 0; i < map.lines.size(); ++i) {
        for (const auto& s : map.lines[i].segments) {
            os << i << ' ' << s.head.x << ' ' << s.head.y << ' ' << s.tail.x << ' ' << s.tail.y << ' '
               << s.theta_deg << ' ' << s.length << ' ' << label_name(s.label) << ' ' << map.lines[i].clg << '\n';
        }
    }
    return os.str();
}

SketchMap from_text(const std::string& text) {
    SketchMap map;
    std::istringstream is(text);
    std::string row;
    while (std::getline(is, row)) {
        if (row.empty() || row[0] == '#') continue;
        std::istringstream rs(row);
        std::string first;
        rs >> first;
        if (first == "size") {
            rs >> map.width >> map.height;
        } else if (first == "threshold") {
            rs >> map.threshold;
        } else {
            const std::size_t id = std::stoul(first);
            double hx, hy, tx, ty, theta, length, clg;
            std::string label;
            if (!(rs >> hx >> hy >> tx >> ty >> theta >> length >> label >> clg)) {
                throw Error("malformed sketch record: " + row);
            }
            if (id > map.lines.size()) throw Error("sketch line ids must be consecutive");
            if (id == map.lines.size()) map.lines.emplace_back();
            SketchSegment s = make_segment({hx, hy}, {tx, ty}, parse_label(label));
            map.lines[id].segments.push_back(std::move(s));
            map.lines[id].clg = clg;
        }
    }
    if (!is.eof() && is.fail()) throw Error("cannot parse sketch map");
    return map;
}

}  // namespace phsm::sketch
