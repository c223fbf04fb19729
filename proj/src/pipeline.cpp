#include "phsm/pipeline.hpp"

#include "phsm/hermitian.hpp"
#include "phsm/image_ops.hpp"
#include "phsm/io.hpp"
#include "phsm/render.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace phsm {

namespace fs = std::filesystem;
using nlohmann::json;

StageError::StageError(std::string stage, const std::string& message)
    : Error(stage + ": " + message), stage_(std::move(stage)) {}

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

LabelRaster to_labels(const Raster<std::uint8_t>& r) {
    LabelRaster out(r.width(), r.height());
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i];
    return out;
}

/// Sketch map whose segments carry the labels assigned by the region stage.
sketch::SketchMap labeled_sketch(const sketch::SketchMap& map, const std::vector<sketch::SketchSegment>& labeled) {
    sketch::SketchMap out = map;
    std::size_t k = 0;
    for (auto& line : out.lines)
        for (auto& s : line.segments)
            if (k < labeled.size()) s.label = labeled[k++].label;
    return out;
}

void write_input(const fs::path& dir, const PipelineInput& in) {
    if (in.synthetic) io::save_container(dir / "scene.phsm", in.image);
    if (in.truth) {
        io::save_labels(dir / "truth.labels", *in.truth);
        io::save_ppm(dir / "truth.ppm", render::class_palette(*in.truth));
    }
    const ScalarRaster s = span(in.image);
    io::save_scalar(dir / "span.scalar", s);
    io::save_pgm(dir / "span.pgm", render::span_db_unit(s));
    const PauliRgb p = pauli_rgb(in.image);
    Raster<io::Rgb> rgb(p.r.width(), p.r.height());
    for (std::size_t i = 0; i < rgb.size(); ++i) {
        auto byte = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
        rgb[i] = {byte(p.r[i]), byte(p.g[i]), byte(p.b[i])};
    }
    io::save_ppm(dir / "pauli.ppm", rgb);
}

void write_detect(const fs::path& dir, const DetectStage& d) {
    io::save_scalar(dir / "edge_energy.scalar", d.edge.energy);
    io::save_scalar(dir / "line_energy.scalar", d.line.energy);
    io::save_pgm(dir / "edge_energy.pgm", render::unit_scale(d.edge.energy));
    io::save_pgm(dir / "line_energy.pgm", render::unit_scale(d.line.energy));
    ScalarRaster edges(d.source.edges.width(), d.source.edges.height());
    for (std::size_t i = 0; i < edges.size(); ++i) edges[i] = d.source.edges[i] ? 1.0 : 0.0;
    io::save_pgm(dir / "edges.pgm", edges);
}

Raster<io::Rgb> span_canvas(const CoherencyImage& img) { return render::grey_to_rgb(render::span_db_unit(span(img))); }

void write_sketch(const fs::path& dir, const CoherencyImage& img, const SketchStage& s) {
    io::write_text(dir / "sketch.txt", sketch::to_text(s.selection.map));
    Raster<io::Rgb> canvas = span_canvas(img);
    render::draw_sketch(canvas, s.selection.map.segments());
    io::save_ppm(dir / "sketch_overlay.ppm", canvas);
}

void write_region(const fs::path& dir, const CoherencyImage& img, const sketch::SketchMap& map,
                  const region::RegionResult& r) {
    io::write_text(dir / "sketch_labeled.txt", sketch::to_text(labeled_sketch(map, r.segments)));
    io::save_labels(dir / "region_map.labels", to_labels(r.map.labels));
    io::save_labels(dir / "aggregated_groups.labels", r.map.aggregated_id);
    io::save_ppm(dir / "region_map.ppm", render::region_map_palette(r.map));
    Raster<io::Rgb> canvas = span_canvas(img);
    render::draw_sketch(canvas, r.segments);
    io::save_ppm(dir / "segment_labels.ppm", canvas);
}

void write_segment(const fs::path& dir, const CoherencyImage& img, const segment::Partition& sp,
                   const segment::Segmentation& seg) {
    io::save_labels(dir / "superpixels.labels", sp.ids);
    io::save_ppm(dir / "superpixels.ppm", render::label_palette(sp.ids));
    io::save_labels(dir / "segmentation.labels", seg.region_id);
    io::save_ppm(dir / "segmentation.ppm", render::label_palette(seg.region_id));
    io::write_text(dir / "regions.csv", regions_csv(img, seg));
}

void write_classes(const fs::path& dir, const PipelineResult& r) {
    io::save_labels(dir / "classes_pre.labels", r.wishart.map.labels);
    io::save_ppm(dir / "classes_pre.ppm", render::class_palette(r.wishart.map.labels));
    io::save_labels(dir / "classes.labels", r.voted.labels);
    io::save_ppm(dir / "classes.ppm", render::class_palette(r.voted.labels));
    io::save_scalar(dir / "entropy.scalar", r.h_alpha.entropy);
    io::save_scalar(dir / "alpha.scalar", r.h_alpha.alpha);
    if (r.confusion_pre) io::write_text(dir / "confusion_pre.csv", r.confusion_pre->to_csv());
    if (r.confusion) io::write_text(dir / "confusion.csv", r.confusion->to_csv());
}

classify::ZoneBounds zone_bounds(const PipelineConfig& cfg) {
    classify::ZoneBounds b;
    b.nine_zones = cfg.zones == 9;
    return b;
}

segment::SegmentOptions segment_options(const PipelineConfig& cfg) {
    segment::SegmentOptions o;
    o.mean_shift.h_spatial = cfg.h_spatial;
    o.mean_shift.h_range = cfg.h_range;
    o.mean_shift.min_region = cfg.min_region;
    o.n_r = cfg.n_r;
    o.block_width = cfg.structural_width;
    o.use_region_map = cfg.use_region_map;
    return o;
}

}  // namespace

PipelineInput load_input(const PipelineConfig& cfg) {
    return stage("input", [&] {
        PipelineInput in;
        if (!cfg.input.empty()) {
            in.image = io::load_image(cfg.input, io::parse_format(cfg.input_format));
        } else {
            SceneSpec spec = *cfg.scene;
            spec.seed = cfg.seed;
            SyntheticScene scene = make_scene(spec);
            in.image = std::move(scene.image);
            in.truth = std::move(scene.truth);
            in.synthetic = true;
        }
        if (!cfg.truth.empty()) in.truth = io::load_labels(cfg.truth);
        if (in.truth && !in.truth->same_shape(in.image.pixels)) throw Error("truth shape differs from image");
        if (in.image.pixels.empty()) throw Error("empty image");
        return in;
    });
}

detect::FilterBank make_filter_bank(const PipelineConfig& cfg) { return detect::FilterBank(cfg.scales, cfg.orientations); }

DetectStage run_detect(const PipelineConfig& cfg, const CoherencyImage& img) {
    return stage("detect", [&] {
        const detect::FilterBank bank = make_filter_bank(cfg);
        detect::DetectorOptions opts;
        opts.gradient_log = cfg.gradient_log;
        const detect::DetectorFields f = detect::detect_fields(img, bank, opts);
        DetectStage d;
        d.edge = detect::fuse_energy(f.cfar_edge, f.grad_edge, cfg.floor_quantile);
        d.line = detect::fuse_energy(f.cfar_line, f.grad_line, cfg.floor_quantile);
        d.source = detect::sketch_source(d.edge, d.line, cfg.sketch_lines);
        return d;
    });
}

SketchStage run_sketch(const PipelineConfig& cfg, const CoherencyImage& img, const DetectStage& det) {
    return stage("sketch", [&] {
        sketch::PursuitOptions po;
        po.min_segment_length = cfg.min_segment;
        po.max_deviation = cfg.max_deviation;
        std::vector<sketch::SketchLine> lines = sketch::pursue_sketch(det.source.edges, det.source.field, po);
        for (auto& l : lines) l.clg = sketch::line_significance(l, img);
        sketch::SelectOptions so;
        so.mode = cfg.clg_mode == "fixed" ? sketch::ClgMode::Fixed : sketch::ClgMode::Auto;
        so.value = cfg.clg_value;
        so.floor = cfg.clg_floor;
        SketchStage s;
        s.candidates = lines.size();
        s.selection = sketch::select_lines(std::move(lines), img.width(), img.height(), so);
        return s;
    });
}

region::RegionResult run_region(const PipelineConfig& cfg, const sketch::SketchMap& map) {
    return stage("region", [&] {
        region::RegionOptions o;
        o.labels.k = cfg.k;
        o.labels.theta0_deg = cfg.theta0_deg;
        o.labels.r = cfg.r;
        o.labels.side_fraction = cfg.side_fraction;
        o.labels.wedge_deg = cfg.wedge_deg;
        o.labels.top_fraction = cfg.top_fraction;
        o.labels.max_gap = cfg.max_gap;
        o.block_width = cfg.structural_width;
        return region::build_region_map(map, o);
    });
}

segment::Partition run_superpixels(const PipelineConfig& cfg, const CoherencyImage& img) {
    return stage("segment", [&] { return segment::mean_shift_superpixels(img, segment_options(cfg).mean_shift); });
}

classify::WishartResult run_wishart(const PipelineConfig& cfg, const CoherencyImage& img, classify::HAlphaField* field) {
    return stage("classify", [&] {
        classify::HAlphaField f = classify::h_alpha(img);
        const classify::ClassMap init = classify::init_zones(f, zone_bounds(cfg));
        classify::WishartOptions o;
        o.max_iterations = cfg.max_iterations;
        o.min_change = cfg.min_change;
        classify::WishartResult r = classify::wishart_iterate(img, init, o);
        if (field) *field = std::move(f);
        return r;
    });
}

namespace {

segment::Segmentation segment_stage(const PipelineConfig& cfg, const PipelineInput& in, const segment::Partition& sp,
                                    const std::optional<region::RegionResult>& region,
                                    const std::optional<DetectStage>& det) {
    return stage("segment", [&] {
        const segment::SegmentOptions o = segment_options(cfg);
        if (!o.use_region_map) return segment::segment_image(in.image, sp, region::RegionResult{}, ScalarRaster{}, o);
        return segment::segment_image(in.image, sp, *region, det->edge.energy, o);
    });
}

void vote_and_evaluate(const PipelineConfig& cfg, PipelineResult& r) {
    stage("classify", [&] {
        r.voted = classify::semantic_vote(r.wishart.map, r.segmentation.region_id);
        return 0;
    });
    if (!r.input.truth) return;
    stage("evaluate", [&] {
        r.confusion_pre = classify::evaluate(r.wishart.map.labels, *r.input.truth, {}, cfg.ignore_label);
        r.confusion = classify::evaluate(r.voted.labels, *r.input.truth, {}, cfg.ignore_label);
        return 0;
    });
}

template <typename F>
void emit(const std::optional<fs::path>& out, F&& body) {
    if (!out) return;
    stage("write", [&] {
        body(*out);
        return 0;
    });
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, const std::optional<fs::path>& out) {
    cfg.validate();
    PipelineResult r;
    emit(out, [&](const fs::path& dir) {
        fs::create_directories(dir);
        io::write_text(dir / "config.json", to_json_text(cfg));
    });
    r.input = load_input(cfg);
    emit(out, [&](const fs::path& dir) { write_input(dir, r.input); });

    if (cfg.use_region_map) {
        r.detect = run_detect(cfg, r.input.image);
        emit(out, [&](const fs::path& dir) { write_detect(dir, *r.detect); });
        r.sketch = run_sketch(cfg, r.input.image, *r.detect);
        if (r.sketch->selection.empty_warning) r.warnings.push_back("no sketch line survived selection");
        emit(out, [&](const fs::path& dir) { write_sketch(dir, r.input.image, *r.sketch); });
        r.region = run_region(cfg, r.sketch->selection.map);
        if (r.region->labeling.degenerate) r.warnings.push_back("too few segments for aggregation statistics");
        if (r.region->labeling.stats.delta2_below_peak) r.warnings.push_back("delta2 lies below the ADH peak");
        emit(out, [&](const fs::path& dir) { write_region(dir, r.input.image, r.sketch->selection.map, *r.region); });
    }

    r.superpixels = run_superpixels(cfg, r.input.image);
    r.segmentation = segment_stage(cfg, r.input, r.superpixels, r.region, r.detect);
    for (const auto& w : r.segmentation.warnings) r.warnings.push_back(w);
    emit(out, [&](const fs::path& dir) { write_segment(dir, r.input.image, r.superpixels, r.segmentation); });

    r.wishart = run_wishart(cfg, r.input.image, &r.h_alpha);
    vote_and_evaluate(cfg, r);
    emit(out, [&](const fs::path& dir) {
        write_classes(dir, r);
        io::write_text(dir / "diagnostics.json", diagnostics_json(r));
    });
    return r;
}

std::string diagnostics_json(const PipelineResult& r) {
    json j;
    j["image"] = {{"width", r.input.image.width()}, {"height", r.input.image.height()}, {"looks", r.input.image.looks}};
    if (r.sketch) {
        const auto& m = r.sketch->selection.map;
        j["sketch"] = {{"candidate_lines", r.sketch->candidates},
                       {"selected_lines", m.lines.size()},
                       {"segments", m.segment_count()},
                       {"clg_threshold", m.threshold}};
    }
    if (r.region) {
        const auto& lab = r.region->labeling;
        int as = 0, is = 0;
        for (const auto& s : r.region->segments) {
            as += s.label == sketch::SegmentLabel::AS;
            is += s.label == sketch::SegmentLabel::IS;
        }
        std::int64_t counts[3] = {0, 0, 0};
        for (auto v : r.region->map.labels.data()) ++counts[v];
        j["region"] = {{"chains", lab.chains.size()},
                       {"long_straight_chains", lab.long_straight_chains},
                       {"degenerate", lab.degenerate},
                       {"as_segments", as},
                       {"is_segments", is},
                       {"groups", r.region->groups.size()},
                       {"delta1", lab.stats.delta1},
                       {"delta2", lab.stats.delta2},
                       {"adh_bin_width", lab.stats.bin_width},
                       {"adh_origin", lab.stats.bin_origin},
                       {"adh", lab.stats.adh},
                       {"delta2_below_peak", lab.stats.delta2_below_peak},
                       {"pixels_homogenous", counts[0]},
                       {"pixels_structural", counts[1]},
                       {"pixels_aggregated", counts[2]}};
    }
    const auto& seg = r.segmentation;
    j["segment"] = {{"superpixels", seg.superpixels},
                    {"regions", seg.count()},
                    {"aggregated_regions", seg.aggregated_regions},
                    {"structural_blocks", seg.structural_blocks},
                    {"structural_splits", seg.structural_splits},
                    {"merge_steps", seg.merge_steps.size()}};
    j["classify"] = {{"classes", r.wishart.map.class_count},
                     {"iterations", r.wishart.iterations},
                     {"changes", r.wishart.changes},
                     {"components_pre", classify::connected_components(r.wishart.map.labels)},
                     {"components", classify::connected_components(r.voted.labels)}};
    if (r.confusion) {
        j["accuracy"] = {{"average_pre", r.confusion_pre->average_accuracy},
                         {"overall_pre", r.confusion_pre->overall_accuracy},
                         {"average", r.confusion->average_accuracy},
                         {"overall", r.confusion->overall_accuracy},
                         {"class", r.confusion->class_accuracy}};
    }
    j["warnings"] = r.warnings;
    return j.dump(2) + "\n";
}

std::string regions_csv(const CoherencyImage& img, const segment::Segmentation& seg) {
    const segment::Partition p = segment::make_partition(img, seg.region_id);
    std::ostringstream out;
    out << std::setprecision(10);
    out << "id,subspace,n,t11,t22,t33,t12_re,t12_im,t13_re,t13_im,t23_re,t23_im\n";
    for (int i = 0; i < p.count(); ++i) {
        const auto& reg = p.regions[static_cast<std::size_t>(i)];
        const region::RegionLabel tag = i < seg.count() ? seg.subspace[static_cast<std::size_t>(i)] : region::RegionLabel::Homogenous;
        out << i << ',' << region::region_label_name(tag) << ',' << reg.count;
        for (double v : to_vector(reg.mean())) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

SweepParameter parse_sweep_parameter(const std::string& name) {
    if (name == "k" || name == "K") return SweepParameter::K;
    if (name == "n_r" || name == "N_r" || name == "nr") return SweepParameter::NR;
    throw ConfigError("unknown sweep parameter: " + name);
}

std::vector<SweepRow> run_sweep(const PipelineConfig& base, SweepParameter param, const std::vector<double>& values) {
    base.validate();
    PipelineResult shared;
    shared.input = load_input(base);
    if (!shared.input.truth) throw ConfigError("sweep needs truth");
    if (base.use_region_map) {
        shared.detect = run_detect(base, shared.input.image);
        shared.sketch = run_sketch(base, shared.input.image, *shared.detect);
        if (param == SweepParameter::NR) shared.region = run_region(base, shared.sketch->selection.map);
    }
    shared.superpixels = run_superpixels(base, shared.input.image);
    shared.wishart = run_wishart(base, shared.input.image);

    std::vector<SweepRow> rows;
    for (double v : values) {
        SweepRow row;
        row.value = v;
        try {
            PipelineConfig cfg = base;
            if (param == SweepParameter::K) cfg.k = static_cast<int>(std::lround(v));
            else cfg.n_r = static_cast<int>(std::lround(v));
            cfg.validate();
            std::optional<region::RegionResult> region = shared.region;
            if (cfg.use_region_map && param == SweepParameter::K) region = run_region(cfg, shared.sketch->selection.map);
            PipelineResult r;
            r.input = shared.input;
            r.wishart = shared.wishart;
            r.segmentation = segment_stage(cfg, shared.input, shared.superpixels, region, shared.detect);
            vote_and_evaluate(cfg, r);
            row.average_accuracy = r.confusion->average_accuracy;
            row.overall_accuracy = r.confusion->overall_accuracy;
            row.regions = r.segmentation.count();
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_csv(SweepParameter param, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << (param == SweepParameter::K ? "k" : "n_r") << ",average_accuracy,overall_accuracy,regions,error\n";
    for (const auto& r : rows) {
        out << std::setprecision(0) << r.value << std::setprecision(4) << ',';
        if (r.average_accuracy) out << *r.average_accuracy;
        out << ',';
        if (r.overall_accuracy) out << *r.overall_accuracy;
        std::string error = r.error;
        std::replace(error.begin(), error.end(), ',', ';');
        out << ',' << r.regions << ',' << error << '\n';
    }
    return out.str();
}

}  // namespace phsm
