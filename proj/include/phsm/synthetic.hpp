#pragma once

#include "phsm/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace phsm {

/// A sampled scene with its planted truth.
///
/// `layout` indexes `class_matrices` and drives the sampler. `truth` is the
/// semantic class raster used for evaluation; it equals `layout` except for
/// composite scenes where several generating classes form one semantic class
/// (an urban block grid is one class made of roofs and streets).
struct SyntheticScene {
    CoherencyImage image;
    LabelRaster truth;
    LabelRaster layout;
    std::vector<Matrix3c> class_matrices;
    std::uint64_t seed = 0;
};

/// Draws every pixel as (1/looks) sum_k z z^H with z ~ CN(0, C_class).
/// Deterministic in (seed, x, y). Throws "invalid covariance" on non-PSD input.
SyntheticScene sample_wishart_scene(const LabelRaster& layout,
                                    const std::vector<Matrix3c>& class_matrices,
                                    int looks, std::uint64_t seed);

/// Canonical class covariances used by the scene layouts.
namespace targets {
Matrix3c surface(double power = 1.0);     ///< odd-bounce, low entropy
Matrix3c dihedral(double power = 1.0);    ///< double-bounce, low entropy
Matrix3c volume(double power = 1.0);      ///< random volume, high entropy
Matrix3c vegetation(double power = 1.0);  ///< medium entropy, correlated
}  // namespace targets

double db_to_ratio(double db);

/// Scene recipes. All are square `size` x `size` rasters.
struct SceneSpec {
    enum class Kind { TwoClassEdge, BrightLine, DotGrid, Mosaic, Composite, Uniform };
    Kind kind = Kind::TwoClassEdge;
    int size = 128;
    double contrast_db = 6.0;
    int looks = 4;
    std::uint64_t seed = 1;
    int classes = 3;       ///< Mosaic only
    int tile = 32;         ///< Mosaic only
    int line_width = 3;    ///< BrightLine / Composite
};

SceneSpec::Kind parse_scene_kind(const std::string& name);
std::string scene_kind_name(SceneSpec::Kind kind);

/// Truth layout of a recipe without sampling (used by count oracles).
SyntheticScene make_scene(const SceneSpec& spec);

/// Geometry of the composite scene, exposed for evaluation.
struct CompositeGeometry {
    int urban_x0, urban_y0, urban_x1, urban_y1;  ///< half-open urban quadrant
    int line_y0, line_y1;                        ///< half-open rows of the bright line
    int line_x0, line_x1;
    int block, period;                           ///< roof block size and grid period
};
CompositeGeometry composite_geometry(int size, int line_width);

/// Semantic class ids of the composite scene.
enum CompositeClass : std::int32_t { kBackground = 0, kUrban = 1, kLine = 2, kWater = 3 };

}  // namespace phsm
