#pragma once

#include "phsm/sketch.hpp"
#include "phsm/types.hpp"

#include <vector>

namespace phsm::region {

using sketch::SegmentLabel;
using sketch::SketchSegment;

/// Segment indices of one head-tail chain, in chain order. reversed[i] tells
/// whether member i is walked tail -> head.
struct Chain {
    std::vector<int> members;
    std::vector<bool> reversed;
};

/// Links segment ends closer than max_gap into maximal chains. Candidate links
/// are taken greedily by smallest orientation difference (then gap, then
/// indices); each segment end takes at most one link and no cycles form.
std::vector<Chain> connect_lines(const std::vector<SketchSegment>& segments, double max_gap = 2.0);

/// Orientation difference folded into [0, 90] degrees.
double orientation_gap(double a_deg, double b_deg);

/// Straight-and-forward test of a chain: every consecutive orientation gap is
/// below theta0 and the far ends of consecutive members are farther apart than
/// the longer of the two.
bool is_straight(const Chain& chain, const std::vector<SketchSegment>& segments, double theta0_deg);

/// Marks IS on the members of the longest straight chains: the top
/// fraction by total length, at least one when any chain qualifies.
/// Returns the number of chains labeled.
int label_long_straight(const std::vector<Chain>& chains, std::vector<SketchSegment>& segments,
                        double theta0_deg = 30.0, double top_fraction = 0.05);

struct Neighbourhood {
    std::vector<int> neighbours;  ///< up to K nearest, nearest first
    std::vector<double> distances;
};

/// Midpoint K-nearest neighbours of segment i among `pool` (indices into
/// segments), skipping neighbours inside the double wedge within +-wedge_deg
/// of the segment's axis. If the wedge leaves nothing, the plain K nearest
/// are used. wedge_deg <= 0 disables the wedge. Ties go to the smaller
/// canonical geometry key, so the result does not depend on index order.
Neighbourhood nearest_segments(const std::vector<SketchSegment>& segments, const std::vector<int>& pool, int i,
                               int k, double wedge_deg);

struct AggregationStats {
    int k = 9;
    std::vector<int> members;          ///< segment indices the statistics cover
    std::vector<double> ad;            ///< aggregation degree per member
    std::vector<Neighbourhood> hoods;  ///< per member
    double bin_width = 1.0;
    double bin_origin = 0.0;
    std::vector<int> adh;              ///< histogram counts
    double delta1 = 0.0;
    double delta2 = 0.0;
    double r = 0.92;
    bool delta2_below_peak = false;    ///< warning: delta2 under the ADH peak
};

/// ad(i) = mean midpoint distance to the (wedge-filtered) K nearest segments
/// of the pool; also fills the ADH with bin width max(1, range / 64).
AggregationStats aggregation_degree(const std::vector<SketchSegment>& segments, const std::vector<int>& pool, int k,
                                    double wedge_deg = 10.0);

/// Smallest ADH bin right edge whose cumulative mass reaches r of the total,
/// capped at the largest ad.
double select_delta1(const AggregationStats& stats, double r);

/// Mean ad.
double select_delta2(const AggregationStats& stats);

/// Left edge of the fullest ADH bin (smallest such bin on ties).
double adh_peak(const AggregationStats& stats);

enum class SpatialRank { DAS, SAS, ZAS };

const char* rank_name(SpatialRank rank);

/// Classifies member `member` of the stats by the side distribution of its
/// neighbours within delta1.
SpatialRank spatial_rank(const std::vector<SketchSegment>& segments, const AggregationStats& stats, int member,
                         double delta1, double side_fraction = 0.8);

struct LabelOptions {
    int k = 9;
    double theta0_deg = 30.0;
    double top_fraction = 0.05;
    double r = 0.92;
    double wedge_deg = 10.0;
    double side_fraction = 0.8;
    double max_gap = 2.0;
};

struct LabelResult {
    std::vector<Chain> chains;
    AggregationStats stats;
    std::vector<SpatialRank> ranks;  ///< per stats member
    int long_straight_chains = 0;
    bool degenerate = false;         ///< too few segments for aggregation statistics
};

/// Segment labelling: connect, long straight lines -> IS, aggregation degree
/// on the rest, delta1 split, single/zero-sided neighbourhoods -> IS.
/// Labels are written into `segments`.
LabelResult label_segments(std::vector<SketchSegment>& segments, const LabelOptions& opts = {});

struct SegmentGroup {
    int id = 0;
    std::vector<int> members;  ///< segment indices, ascending
};

/// Connected components of the graph joining AS segments i, j when one is
/// among the other's K nearest (plain, among the AS set) and their midpoint
/// distance is <= delta2. Components smaller than K are dissolved and their
/// members relabeled IS. Groups are ordered by smallest member.
std::vector<SegmentGroup> group_segments(std::vector<SketchSegment>& segments, double delta2, int k);

/// Rasterizes a segment as a 1-pixel line between its rounded end points.
void draw_segment(MaskRaster& mask, const SketchSegment& s);

/// Exact squared Euclidean distance to the nearest set pixel (huge where none).
std::vector<double> squared_distance_transform(const MaskRaster& mask);

/// Morphological closing with the digital disc x^2 + y^2 <= radius^2; the
/// outside of the raster counts as background.
MaskRaster close_mask(const MaskRaster& mask, int radius);
MaskRaster dilate_mask(const MaskRaster& mask, int radius);
MaskRaster erode_mask(const MaskRaster& mask, int radius);

/// Closing of the rasterized group members with radius round(delta2).
MaskRaster close_regions(const SegmentGroup& group, const std::vector<SketchSegment>& segments, double delta2,
                         int width, int height);

/// Pixel-centre test for the oriented block of one segment: along-axis
/// coordinate in [-0.5, length + 0.5), across-axis |v| < width / 2.
bool in_structural_block(const SketchSegment& s, double block_width, double px, double py);

/// Union of the blocks of all IS segments.
MaskRaster structural_blocks(const std::vector<SketchSegment>& segments, double block_width, int width, int height);

enum class RegionLabel : std::uint8_t { Homogenous = 0, Structural = 1, Aggregated = 2 };

const char* region_label_name(RegionLabel label);

struct RegionMap {
    Raster<std::uint8_t> labels;  ///< RegionLabel values
    LabelRaster aggregated_id;    ///< group id or -1

    RegionLabel at(int x, int y) const { return static_cast<RegionLabel>(labels.at(x, y)); }
};

/// Precedence Aggregated > Structural > Homogenous. Overlapping group masks go
/// to the earlier group.
RegionMap build_region_map(const std::vector<MaskRaster>& group_masks, const std::vector<int>& group_ids,
                           const MaskRaster& structural, int width, int height);

struct RegionOptions {
    LabelOptions labels;
    double block_width = 3.0;
};

struct RegionResult {
    std::vector<SketchSegment> segments;  ///< labeled
    LabelResult labeling;
    std::vector<SegmentGroup> groups;
    RegionMap map;
};

/// Full region-map construction from a sketch map.
RegionResult build_region_map(const sketch::SketchMap& sketch, const RegionOptions& opts = {});

}  // namespace phsm::region
