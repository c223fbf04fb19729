#pragma once

#include "phsm/detect.hpp"
#include "phsm/region.hpp"
#include "phsm/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace phsm::segment {

using region::RegionLabel;

struct RegionStats {
    std::int64_t count = 0;
    Matrix3c sum = Matrix3c::Zero();

    Matrix3c mean() const;
    void add(const RegionStats& other);
};

/// Region-id raster with per-region statistics. Ids run 0..count-1.
struct Partition {
    LabelRaster ids;
    std::vector<RegionStats> regions;

    int count() const { return static_cast<int>(regions.size()); }
};

/// Renumbers ids by first appearance in row-major order and accumulates
/// statistics from the image. Negative ids are not allowed.
Partition make_partition(const CoherencyImage& img, const LabelRaster& ids);

/// 4-connected region adjacency pairs (a < b), sorted.
std::vector<std::pair<int, int>> adjacency(const LabelRaster& ids);

/// Mean-shift features: Pauli powers |T22|, |T33|, |T11| in dB, floored.
std::vector<std::array<double, 3>> log_pauli_features(const CoherencyImage& img);

struct MeanShiftOptions {
    double h_spatial = 7.0;
    double h_range = 6.5;   ///< dB
    int min_region = 20;
    int max_iterations = 20;
    double tolerance = 0.01;  ///< stop when the normalized shift falls below this
};

/// Flat-kernel mean-shift filtering in the joint (x, y, log-Pauli) domain,
/// 4-connected grouping of pixels whose modes differ by less than h_range / 2
/// in range, then absorption of regions smaller than min_region into the
/// adjacent region with the closest mean mode.
Partition mean_shift_superpixels(const CoherencyImage& img, const MeanShiftOptions& opts = {});

/// Subspace owning the largest share of each region's pixels; ties go to
/// Aggregated, then Structural, then Homogenous.
std::vector<RegionLabel> map_region_to_superpixels(const Partition& partition, const region::RegionMap& map);

/// Absorbs every region with more than half of its pixels inside aggregated
/// group g into a single region per g. Returns the new partition and, per new
/// region, the group it represents (-1 for untouched regions).
struct AggregatedMerge {
    Partition partition;
    std::vector<int> group_of_region;
};
AggregatedMerge merge_aggregated(const CoherencyImage& img, const Partition& partition,
                                 const region::RegionMap& map);

/// Wishart log-likelihood merging cost
/// L [ (ni + nj) ln|Zij| - ni ln|Zi| - nj ln|Zj| ] with Zij the pooled mean.
double sc_criterion(const RegionStats& a, const RegionStats& b, double looks);

/// L n ln|Z| summed over the given regions: the within-region cost whose
/// increase per merge equals the merge's SC.
double region_cost(const RegionStats& r, double looks);

struct MergeStep {
    int a = 0;            ///< surviving id (smaller)
    int b = 0;            ///< absorbed id
    double sc = 0.0;
    double cost_before = 0.0;
    double cost_after = 0.0;  ///< recomputed from scratch after the merge
};

struct MergeResult {
    Partition partition;          ///< compacted
    std::vector<int> old_to_new;  ///< input id -> output id
    std::vector<MergeStep> steps;
    bool target_unreachable = false;  ///< n_r exceeded the eligible count
};

/// Repeatedly merges the adjacent eligible pair with minimum SC (ties by
/// smallest (a, b)) until n_r eligible regions remain or no adjacent eligible
/// pair is left. Non-eligible regions are never touched.
MergeResult hierarchical_merge(const Partition& partition, const std::vector<bool>& eligible, int n_r, double looks,
                               bool record_costs = false);

/// A structural block carved out of the superpixels for one IS segment.
struct StructuralBlock {
    int segment = -1;
    std::vector<Pixel> pixels;
};

/// Claims the Structural pixels of each IS segment's block, first segment first.
std::vector<StructuralBlock> carve_structural(const std::vector<sketch::SketchSegment>& segments,
                                              const region::RegionMap& map, double block_width);

struct SplitOutcome {
    std::vector<Pixel> side_a;
    std::vector<Pixel> side_b;
    std::vector<int> edge_offsets;  ///< smoothed edge offset per cross-section
    bool split = false;
    std::string reason;             ///< why the block stayed whole
};

/// Locates the true edge inside a block: per cross-section (integer along-axis
/// position) the across-axis offset with maximum energy (ties to the offset
/// nearest the axis, then the negative side), smoothed by a 3-tap median.
/// Pixels at or below the edge offset form side A, the rest side B.
SplitOutcome split_structural(const StructuralBlock& block, const sketch::SketchSegment& segment,
                              const ScalarRaster& energy, double block_width);

struct SegmentOptions {
    MeanShiftOptions mean_shift;
    int n_r = 30;
    double block_width = 3.0;
    bool use_region_map = true;  ///< false: superpixels pass through unmerged
};

struct Segmentation {
    LabelRaster region_id;
    std::vector<RegionLabel> subspace;  ///< per output region
    int superpixels = 0;
    int aggregated_regions = 0;
    int structural_blocks = 0;
    int structural_splits = 0;
    std::vector<MergeStep> merge_steps;
    std::vector<std::string> warnings;

    int count() const { return static_cast<int>(subspace.size()); }
};

/// Segmentation of the image given its superpixels and region map.
Segmentation segment_image(const CoherencyImage& img, const Partition& superpixels, const region::RegionResult& regions,
                           const ScalarRaster& energy, const SegmentOptions& opts);

}  // namespace phsm::segment
