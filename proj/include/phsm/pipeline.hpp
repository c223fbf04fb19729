#pragma once

#include "phsm/classify.hpp"
#include "phsm/config.hpp"
#include "phsm/detect.hpp"
#include "phsm/region.hpp"
#include "phsm/segment.hpp"
#include "phsm/sketch.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace phsm {

/// Failure inside one pipeline stage. The CLI maps it to exit code 3.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message);
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct PipelineInput {
    CoherencyImage image;
    std::optional<LabelRaster> truth;
    bool synthetic = false;
};

struct DetectStage {
    detect::EnergyField edge;  ///< fused
    detect::EnergyField line;  ///< fused
    detect::SketchSource source;
};

struct SketchStage {
    std::size_t candidates = 0;
    sketch::Selection selection;
};

struct PipelineResult {
    PipelineInput input;
    std::optional<DetectStage> detect;  ///< absent when the region map is disabled
    std::optional<SketchStage> sketch;
    std::optional<region::RegionResult> region;
    segment::Partition superpixels;
    segment::Segmentation segmentation;
    classify::HAlphaField h_alpha;
    classify::WishartResult wishart;
    classify::ClassMap voted;
    std::optional<classify::Confusion> confusion_pre;  ///< before the vote
    std::optional<classify::Confusion> confusion;
    std::vector<std::string> warnings;
};

PipelineInput load_input(const PipelineConfig& cfg);
detect::FilterBank make_filter_bank(const PipelineConfig& cfg);
DetectStage run_detect(const PipelineConfig& cfg, const CoherencyImage& img);
SketchStage run_sketch(const PipelineConfig& cfg, const CoherencyImage& img, const DetectStage& det);
region::RegionResult run_region(const PipelineConfig& cfg, const sketch::SketchMap& map);
segment::Partition run_superpixels(const PipelineConfig& cfg, const CoherencyImage& img);
classify::WishartResult run_wishart(const PipelineConfig& cfg, const CoherencyImage& img,
                                    classify::HAlphaField* field = nullptr);

/// Runs every stage. With an output directory each stage writes its
/// artifacts as soon as it finishes, so a failure leaves the earlier ones.
/// Stage failures are rethrown as StageError.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::optional<std::filesystem::path>& out = std::nullopt);

/// Diagnostics of a finished run as pretty JSON.
std::string diagnostics_json(const PipelineResult& result);

/// Per-region statistics: id, subspace, n, then the nine real entries of the mean.
std::string regions_csv(const CoherencyImage& img, const segment::Segmentation& seg);

enum class SweepParameter { K, NR };

SweepParameter parse_sweep_parameter(const std::string& name);

struct SweepRow {
    double value = 0.0;
    std::optional<double> average_accuracy;
    std::optional<double> overall_accuracy;
    int regions = 0;
    std::string error;  ///< set when the run failed
};

/// Runs the pipeline per value, reusing every stage the parameter does not
/// affect. Requires truth. A failing value yields a row without accuracy.
std::vector<SweepRow> run_sweep(const PipelineConfig& cfg, SweepParameter param, const std::vector<double>& values);

std::string sweep_csv(SweepParameter param, const std::vector<SweepRow>& rows);

}  // namespace phsm
