#pragma once

#include "phsm/types.hpp"

#include <string>
#include <vector>

namespace phsm::classify {

struct HAlpha {
    double entropy = 0.0;    ///< [0, 1], log base 3
    double alpha_deg = 0.0;  ///< [0, 90]
};

/// Eigen-decomposition of one coherency matrix. A zero-trace matrix gives (0, 0).
HAlpha h_alpha(const Matrix3c& t);

struct HAlphaField {
    ScalarRaster entropy;
    ScalarRaster alpha;
};

HAlphaField h_alpha(const CoherencyImage& img);

/// Boundaries of the H / alpha plane. Entropy splits at h_low and h_high;
/// each entropy band has its own pair of alpha splits.
struct ZoneBounds {
    double h_low = 0.5;
    double h_high = 0.9;
    double low_alpha[2] = {42.5, 47.5};
    double mid_alpha[2] = {40.0, 50.0};
    double high_alpha[2] = {40.0, 55.0};
    bool nine_zones = false;  ///< keep the infeasible high-entropy low-alpha zone apart
};

/// Zone ids, low alpha to high alpha within each entropy band:
///   0..2 low entropy, 3..5 medium entropy, 6..7 high entropy.
/// In eight-zone mode the high-entropy low-alpha corner joins zone 6;
/// in nine-zone mode it gets id 8.
int zone_of(double entropy, double alpha_deg, const ZoneBounds& bounds = {});
int zone_count(const ZoneBounds& bounds);

struct ClassMap {
    LabelRaster labels;
    std::vector<Matrix3c> centers;  ///< per class; empty until computed
    int class_count = 0;
};

ClassMap init_zones(const HAlphaField& field, const ZoneBounds& bounds = {});

/// Mean coherency per class (zero for empty classes).
std::vector<Matrix3c> class_centers(const CoherencyImage& img, const LabelRaster& labels, int class_count);

/// ln|V| + Re Tr(V^-1 T).
double wishart_distance(const Matrix3c& t, const Matrix3c& v_inverse, double log_det_v);

/// Nearest center per pixel; ties go to the smaller class id.
LabelRaster assign_classes(const CoherencyImage& img, const std::vector<Matrix3c>& centers);

/// Sum over pixels of the distance to their own class center.
double wishart_objective(const CoherencyImage& img, const LabelRaster& labels, const std::vector<Matrix3c>& centers);

/// Drops empty classes and renumbers the rest in id order.
int compact_classes(LabelRaster& labels, int class_count);

struct WishartOptions {
    int max_iterations = 10;
    double min_change = 0.001;  ///< fraction of pixels
};

struct WishartResult {
    ClassMap map;
    int iterations = 0;
    std::vector<std::int64_t> changes;  ///< label changes per iteration
};

WishartResult wishart_iterate(const CoherencyImage& img, const ClassMap& init, const WishartOptions& opts = {});

/// Relabels every region with its most frequent class (smallest id on ties).
/// Centers and class count are carried over unchanged.
ClassMap semantic_vote(const ClassMap& classes, const LabelRaster& region_id);

/// Number of 4-connected components of equal label.
int connected_components(const LabelRaster& labels);

inline constexpr int kIgnoreLabel = -1;

struct Confusion {
    int truth_classes = 0;
    int predicted_classes = 0;
    std::vector<int> mapping;                       ///< predicted class -> truth class, -1 if unmapped
    std::vector<std::vector<std::int64_t>> counts;  ///< truth x mapped class
    std::vector<double> class_accuracy;             ///< percent, per truth class
    double average_accuracy = 0.0;                  ///< mean over truth classes present
    double overall_accuracy = 0.0;                  ///< percent of counted pixels
    std::int64_t counted = 0;

    std::string to_csv() const;
};

/// Maps each predicted class to the truth class it overlaps most (smallest id
/// on ties, several classes may share a target). Pixels whose truth equals
/// ignore_label are excluded everywhere.
std::vector<int> greedy_mapping(const LabelRaster& predicted, const LabelRaster& truth, int ignore_label = kIgnoreLabel);

/// Confusion under `mapping`; an empty mapping means greedy_mapping.
Confusion evaluate(const LabelRaster& predicted, const LabelRaster& truth, std::vector<int> mapping = {},
                   int ignore_label = kIgnoreLabel);

}  // namespace phsm::classify
