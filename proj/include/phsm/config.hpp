#pragma once

#include "phsm/synthetic.hpp"
#include "phsm/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace phsm {

/// Invalid or unreadable configuration. The CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct PipelineConfig {
    // Input: either a file (container or T3 directory) or a synthetic scene.
    std::string input;
    std::string input_format = "container";
    std::string truth;                 ///< optional label raster
    std::optional<SceneSpec> scene;    ///< used when input is empty
    int ignore_label = -1;

    // detect
    std::vector<double> scales = {2.0, 3.0, 4.0};
    int orientations = 18;
    bool gradient_log = true;
    double floor_quantile = 0.5;
    bool sketch_lines = false;         ///< also trace line-detector maxima

    // sketch
    std::string clg_mode = "auto";     ///< auto | fixed
    double clg_value = 0.0;            ///< threshold in fixed mode
    double clg_floor = 40.0;
    double min_segment = 5.0;
    double max_deviation = 1.0;

    // region
    int k = 9;
    double theta0_deg = 30.0;
    double r = 0.92;
    double side_fraction = 0.8;
    double wedge_deg = 10.0;
    double top_fraction = 0.05;
    double max_gap = 2.0;
    double structural_width = 3.0;

    // segment
    double h_spatial = 7.0;
    double h_range = 6.5;
    int min_region = 20;
    int n_r = 30;
    bool use_region_map = true;        ///< false runs the superpixel-only ablation

    // classify
    int zones = 8;                     ///< 8 or 9
    int max_iterations = 10;
    double min_change = 0.001;

    std::uint64_t seed = 1;
    std::string output_dir = "phsm_out";

    /// Throws ConfigError naming the first bad field.
    void validate() const;
};

/// Pretty-printed JSON with every field present.
std::string to_json_text(const PipelineConfig& cfg);

/// Missing fields keep their defaults; unknown fields and wrong types are errors.
PipelineConfig config_from_json_text(const std::string& text);

PipelineConfig load_config(const std::string& path);

}  // namespace phsm
