#pragma once

#include "phsm/io.hpp"
#include "phsm/region.hpp"
#include "phsm/sketch.hpp"
#include "phsm/types.hpp"

namespace phsm::render {

using io::Rgb;

/// Stable pseudo-random colour of a label id.
Rgb label_colour(std::int64_t id);

/// Fixed colours for small class ids, label_colour beyond them.
Rgb class_colour(int id);

Raster<Rgb> label_palette(const LabelRaster& labels);
Raster<Rgb> class_palette(const LabelRaster& classes);

/// Homogenous grey, structural red, aggregated blue.
Raster<Rgb> region_map_palette(const region::RegionMap& map);

/// Min-max scaling to [0, 1]; a flat raster maps to 0.
ScalarRaster unit_scale(const ScalarRaster& r);

/// Span in dB, clipped at its 2nd and 98th percentiles.
ScalarRaster span_db_unit(const ScalarRaster& span);

Raster<Rgb> grey_to_rgb(const ScalarRaster& unit);

/// Draws the segments of a sketch over a background: AS green, IS red,
/// unlabeled yellow.
void draw_sketch(Raster<Rgb>& canvas, const std::vector<sketch::SketchSegment>& segments);

}  // namespace phsm::render
