#pragma once

#include "phsm/hermitian.hpp"
#include "phsm/types.hpp"

#include <span>
#include <vector>

namespace phsm::detect {

/// Weighted pixel-offset set of one filter region. Weights sum to 1.
struct OffsetSet {
    std::vector<Pixel> offsets;
    std::vector<double> weights;

    /// 1 / sum(w^2): the number of equally weighted samples with the same variance.
    double equivalent_count() const;
};

/// One oriented filter at one scale.
///
/// Axis coordinates: u along the orientation, v across it (v > 0 on side 1).
/// Edge test: side1 vs side2. Line test: center strip vs flank1 and flank2.
struct Filter {
    int scale_index = 0;
    int orientation_index = 0;
    double orientation_deg = 0.0;
    OffsetSet side1, side2;
    OffsetSet center, flank1, flank2;
};

/// Multi-scale, multi-orientation bank of anisotropic Gaussian filters.
///
/// Each scale value s is the along-axis Gaussian sigma; the across-axis sigma
/// is s / 3 and both are truncated at 3 sigma, so the window half-length along
/// the axis is 3 s. Orientations are evenly spaced over [0, 180) degrees,
/// measured from +x towards +y (image rows grow downwards).
class FilterBank {
public:
    FilterBank(std::vector<double> scales, int orientations);

    const std::vector<double>& scales() const { return scales_; }
    int orientation_count() const { return orientations_; }
    const std::vector<Filter>& filters() const { return filters_; }
    const Filter& filter(int scale_index, int orientation_index) const;
    /// Largest |dx| or |dy| over all offsets.
    int reach() const { return reach_; }
    double orientation_deg(int index) const { return 180.0 * index / orientations_; }

private:
    std::vector<double> scales_;
    int orientations_;
    std::vector<Filter> filters_;
    int reach_ = 0;
};

enum class EnergyKind { Edge, Line };

/// Per-pixel maximum energy over the bank with the winning filter.
/// orientation / scale are -1 where no filter responded.
struct EnergyField {
    ScalarRaster energy;
    LabelRaster orientation;
    LabelRaster scale;
    EnergyKind kind = EnergyKind::Edge;
    int orientation_count = 18;

    EnergyField() = default;
    EnergyField(int width, int height, EnergyKind k, int orientations);
    double orientation_deg(int x, int y) const;
};

/// Reflect-101 index into [0, n).
int mirror(int i, int n);

/// Z = sum_i w_i T(center + offset_i), with mirrored borders.
Matrix3c weighted_mean_coherency(const CoherencyImage& img, const OffsetSet& set, Pixel center);

/// Bartlett-corrected scale factor rho for the Wishart likelihood-ratio test.
double wishart_rho(double n, double m, int p = kChannels);

/// ln Q for the Wishart equality test of two sample coherencies with n and m looks.
/// Always <= 0 up to rounding; determinants below the floor get diagonal loading.
double wishart_log_ratio(const Matrix3c& zi, const Matrix3c& zj, double n, double m, int p = kChannels);

/// -2 rho ln Q, clamped at 0.
double wishart_energy(const Matrix3c& zi, const Matrix3c& zj, double n, double m, int p = kChannels);

/// Effective look count of a Gaussian-weighted region: looks / sum(w^2), rounded, >= 1.
double effective_looks(const OffsetSet& set, double looks);

struct PixelEnergy {
    double value = 0.0;
    int orientation_index = -1;
    int scale_index = -1;
};

/// Single-pixel evaluations. Useful for probing; the raster pass below is the fast path.
PixelEnergy cfar_edge_energy(const CoherencyImage& img, const FilterBank& bank, Pixel p);
PixelEnergy cfar_line_energy(const CoherencyImage& img, const FilterBank& bank, Pixel p);

struct GradientEnergy {
    PixelEnergy edge;  ///< unshifted ln(eps + ||.||)
    PixelEnergy line;
};
GradientEnergy gradient_energy(const CoherencyImage& img, const FilterBank& bank, Pixel p);

inline constexpr double kGradientEpsilon = 1e-12;

/// All four detector fields for a whole image.
struct DetectorFields {
    EnergyField cfar_edge;
    EnergyField cfar_line;
    EnergyField grad_edge;  ///< ln(eps + ||.||) - ln(eps), so the floor is 0
    EnergyField grad_line;
};

struct DetectorOptions {
    bool gradient_log = true;  ///< false: raw norm instead of the log transform
};

DetectorFields detect_fields(const CoherencyImage& img, const FilterBank& bank, const DetectorOptions& opts = {});

/// Maps [q-quantile, max] onto [0, 1] and clamps; a flat field maps to 0.
/// The quantile floor discards the background level each detector reports on
/// homogeneous speckle, which differs wildly between the CFAR and log-gradient fields.
ScalarRaster normalize_unit(const ScalarRaster& e, double floor_quantile = 0.5);

/// Pointwise max of the two normalized fields; the winner supplies the
/// orientation and scale. An all-zero input passes the other through.
EnergyField fuse_energy(const EnergyField& cfar, const EnergyField& grad, double floor_quantile = 0.5);

/// Edge raster handed to sketch pursuit with the energy used for seeding.
struct SketchSource {
    EnergyField field;
    MaskRaster edges;
};

/// NMS of the fused edge field; with_lines adds line-NMS pixels wherever the
/// fused line energy beats the fused edge energy.
SketchSource sketch_source(const EnergyField& fused_edge, const EnergyField& fused_line, bool with_lines);

/// Keeps pixels whose energy is > 0 and strictly greater than both neighbours
/// along the normal to the winning orientation.
MaskRaster nonmax_suppress(const EnergyField& field);

/// Normal step of an orientation, rounded to the 8-neighbourhood.
Pixel normal_step(double orientation_deg);

}  // namespace phsm::detect
