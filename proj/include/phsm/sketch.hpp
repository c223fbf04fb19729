#pragma once

#include "phsm/detect.hpp"
#include "phsm/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace phsm::sketch {

enum class SegmentLabel { Unlabeled, AS, IS };

const char* label_name(SegmentLabel label);
SegmentLabel parse_label(const std::string& name);

/// Straight primitive fitted to a traced run of edge pixels.
/// head/tail are the run's end pixels projected onto the fitted axis.
struct SketchSegment {
    Point head;
    Point tail;
    double length = 0.0;       ///< |tail - head|
    double theta_deg = 0.0;    ///< direction of tail - head, modulo 180, in [0, 180)
    SegmentLabel label = SegmentLabel::Unlabeled;
    std::vector<Pixel> support;  ///< traced edge pixels, in trace order

    Point center() const { return {(head.x + tail.x) / 2.0, (head.y + tail.y) / 2.0}; }
    /// Unit vector from head to tail; (1, 0) for a zero-length segment.
    Point direction() const;
};

/// Builds a segment from two end points (support left empty).
SketchSegment make_segment(Point head, Point tail, SegmentLabel label = SegmentLabel::Unlabeled);

struct SketchLine {
    std::vector<SketchSegment> segments;
    double clg = 0.0;

    double total_length() const;
};

struct SketchMap {
    std::vector<SketchLine> lines;
    int width = 0;
    int height = 0;
    double threshold = 0.0;  ///< CLG threshold the lines were selected with

    std::vector<SketchSegment> segments() const;
    std::size_t segment_count() const;
};

struct PursuitOptions {
    double min_segment_length = 5.0;
    double max_deviation = 1.0;  ///< orthogonal fit tolerance, pixels
};

/// Greedy sketch pursuit: seeds at the strongest unvisited edge pixel (ties in
/// row-major order), traces both ways along the local orientation, fits
/// straight segments and chains them into lines. Segments shorter than
/// min_segment_length are dropped, which can break a line in two.
std::vector<SketchLine> pursue_sketch(const MaskRaster& edges, const detect::EnergyField& energy,
                                      const PursuitOptions& opts = {});

/// Splits an ordered pixel chain into straight pieces: a piece grows until some
/// pixel deviates from its orthogonal least-squares axis by more than max_deviation.
/// Returns [begin, end) index ranges.
std::vector<std::pair<std::size_t, std::size_t>> split_chain(const std::vector<Pixel>& chain, double max_deviation);

/// Fits one segment to a pixel run (orthogonal least squares, ends projected).
SketchSegment fit_segment(const std::vector<Pixel>& run);

/// Flank pixels of a line: offsets 1..width along the left (+) and right (-)
/// normal of every segment, deduplicated, clipped to the image, and with
/// pixels claimed by both sides removed.
struct Flanks {
    std::vector<Pixel> left;
    std::vector<Pixel> right;
    std::size_t clipped_left = 0;   ///< flank samples that fell outside the image
    std::size_t clipped_right = 0;

    /// Clipped samples of the worse side relative to an average side.
    double clipped_fraction() const;
};

/// Lines whose flanks lose more than this share to the image border are not
/// testable and score 0.
inline constexpr double kMaxClippedFraction = 0.25;
Flanks line_flanks(const SketchLine& line, int width, int height, int flank_width = 3);

/// -2 rho ln Q between the pooled left and right flank coherencies; 0 when a
/// flank is empty or too clipped by the border.
double line_significance(const SketchLine& line, const CoherencyImage& img, int flank_width = 3);

enum class ClgMode { Auto, Fixed };

struct SelectOptions {
    ClgMode mode = ClgMode::Auto;
    double value = 0.0;      ///< fixed threshold
    double floor = 40.0;     ///< auto mode lower bound, calibrated on uniform speckle
    int bins = 64;
    double upper_quantile = 0.995;
};

/// First-peak threshold of the smoothed histogram of log(1 + clg), taken as
/// the right edge of the first local-maximum bin and mapped back to CLG units.
/// Empty input gives 0.
double first_peak_threshold(const std::vector<double>& clg, int bins = 64, double upper_quantile = 0.995);

struct Selection {
    SketchMap map;
    bool empty_warning = false;  ///< lines existed but none survived
};

/// Keeps lines with clg >= threshold. Auto: max(first-peak threshold, floor).
Selection select_lines(std::vector<SketchLine> lines, int width, int height, const SelectOptions& opts = {});

/// One record per segment: line id, head x y, tail x y, theta, length, label, line clg.
std::string to_text(const SketchMap& map);
SketchMap from_text(const std::string& text);

}  // namespace phsm::sketch
