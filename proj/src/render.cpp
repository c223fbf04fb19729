#include "phsm/render.hpp"

#include "phsm/image_ops.hpp"

#include <algorithm>
#include <cmath>

namespace phsm::render {

Rgb label_colour(std::int64_t id) {
    // splitmix64 finalizer
    std::uint64_t z = static_cast<std::uint64_t>(id) + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return {static_cast<std::uint8_t>(40 + (z & 0xff) * 200 / 255), static_cast<std::uint8_t>(40 + ((z >> 8) & 0xff) * 200 / 255),
            static_cast<std::uint8_t>(40 + ((z >> 16) & 0xff) * 200 / 255)};
}

Rgb class_colour(int id) {
    static constexpr Rgb fixed[] = {{0, 90, 200},   {230, 60, 40},  {40, 170, 60},  {240, 200, 40}, {150, 60, 200},
                                    {0, 200, 200},  {250, 130, 20}, {130, 90, 50},  {220, 100, 180}};
    if (id >= 0 && id < static_cast<int>(std::size(fixed))) return fixed[id];
    return label_colour(id);
}

namespace {

template <typename F>
Raster<Rgb> paint(const LabelRaster& labels, F&& colour) {
    Raster<Rgb> out(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = colour(labels[i]);
    return out;
}

}  // namespace

Raster<Rgb> label_palette(const LabelRaster& labels) { return paint(labels, label_colour); }

Raster<Rgb> class_palette(const LabelRaster& classes) { return paint(classes, class_colour); }

Raster<Rgb> region_map_palette(const region::RegionMap& map) {
    Raster<Rgb> out(map.labels.width(), map.labels.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (static_cast<region::RegionLabel>(map.labels[i])) {
            case region::RegionLabel::Homogenous: out[i] = {150, 150, 150}; break;
            case region::RegionLabel::Structural: out[i] = {220, 40, 40}; break;
            case region::RegionLabel::Aggregated: out[i] = {40, 80, 220}; break;
        }
    }
    return out;
}

ScalarRaster unit_scale(const ScalarRaster& r) {
    ScalarRaster out(r.width(), r.height(), 0.0);
    if (r.empty()) return out;
    const auto [lo, hi] = std::minmax_element(r.data().begin(), r.data().end());
    if (!(*hi > *lo)) return out;
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = (r[i] - *lo) / (*hi - *lo);
    return out;
}

ScalarRaster span_db_unit(const ScalarRaster& span) {
    ScalarRaster db(span.width(), span.height());
    for (std::size_t i = 0; i < span.size(); ++i) db[i] = 10.0 * std::log10(std::max(span[i], 1e-30));
    if (db.empty()) return db;
    const double lo = percentile(db.data(), 0.02);
    const double hi = percentile(db.data(), 0.98);
    for (auto& v : db.data()) v = hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.0;
    return db;
}

Raster<Rgb> grey_to_rgb(const ScalarRaster& unit) {
    Raster<Rgb> out(unit.width(), unit.height());
    for (std::size_t i = 0; i < unit.size(); ++i) {
        const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(unit[i], 0.0, 1.0) * 255.0));
        out[i] = {g, g, g};
    }
    return out;
}

void draw_sketch(Raster<Rgb>& canvas, const std::vector<sketch::SketchSegment>& segments) {
    MaskRaster mask(canvas.width(), canvas.height(), 0);
    for (const auto& s : segments) {
        std::fill(mask.data().begin(), mask.data().end(), 0);
        region::draw_segment(mask, s);
        Rgb colour{240, 220, 0};
        if (s.label == sketch::SegmentLabel::AS) colour = {0, 220, 0};
        if (s.label == sketch::SegmentLabel::IS) colour = {255, 0, 0};
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) canvas[i] = colour;
    }
}

}  // namespace phsm::render
