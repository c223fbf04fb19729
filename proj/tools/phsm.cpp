#include "phsm/classify.hpp"
#include "phsm/config.hpp"
#include "phsm/image_ops.hpp"
#include "phsm/io.hpp"
#include "phsm/pipeline.hpp"
#include "phsm/render.hpp"
#include "phsm/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace phsm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr const char* kOutputEnv = "PHSM_OUTPUT_DIR";

struct ConfigFlags {
    std::string config_path;
    std::optional<std::string> input, format, truth, scene, output;
    std::optional<int> size, k, n_r, zones, classes, tile, line_width, looks;
    std::optional<double> contrast;
    std::optional<std::uint64_t> seed;
    bool disable_region_map = false;

    void add_to(CLI::App* app) {
        app->add_option("-c,--config", config_path, "JSON config; written with defaults if missing");
        app->add_option("-i,--input", input, "input image (container file or T3 directory)");
        app->add_option("--format", format, "input format: container | t3");
        app->add_option("--truth", truth, "truth label raster");
        app->add_option("--scene", scene, "synthetic scene instead of an input file: edge | line | dotgrid | mosaic | composite | uniform");
        app->add_option("--size", size, "synthetic scene size");
        app->add_option("--contrast", contrast, "synthetic scene contrast, dB");
        app->add_option("--looks", looks, "synthetic scene looks");
        app->add_option("--classes", classes, "mosaic class count");
        app->add_option("--tile", tile, "mosaic tile size");
        app->add_option("--line-width", line_width, "bright line width");
        app->add_option("-k,--k", k, "aggregation neighbourhood size K");
        app->add_option("--nr", n_r, "homogenous region count after merging");
        app->add_option("--zones", zones, "initial H/alpha zones: 8 | 9");
        app->add_option("--seed", seed, "random seed");
        app->add_option("-o,--output", output, "output directory");
        app->add_flag("--disable-region-map", disable_region_map, "superpixel-only ablation");
    }

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (!config_path.empty()) {
            if (fs::exists(config_path)) {
                cfg = load_config(config_path);
            } else {
                io::write_text(config_path, to_json_text(cfg));
                std::cerr << "wrote default config to " << config_path << "\n";
            }
        }
        if (input) cfg.input = *input;
        if (format) cfg.input_format = *format;
        if (truth) cfg.truth = *truth;
        if (scene) {
            SceneSpec spec = cfg.scene.value_or(SceneSpec{});
            try {
                spec.kind = parse_scene_kind(*scene);
            } catch (const Error&) {
                throw ConfigError("unknown scene kind: " + *scene);
            }
            cfg.scene = spec;
            cfg.input.clear();
        }
        if (cfg.scene) {
            if (size) cfg.scene->size = *size;
            if (contrast) cfg.scene->contrast_db = *contrast;
            if (looks) cfg.scene->looks = *looks;
            if (classes) cfg.scene->classes = *classes;
            if (tile) cfg.scene->tile = *tile;
            if (line_width) cfg.scene->line_width = *line_width;
        }
        if (k) cfg.k = *k;
        if (n_r) cfg.n_r = *n_r;
        if (zones) cfg.zones = *zones;
        if (seed) cfg.seed = *seed;
        if (disable_region_map) cfg.use_region_map = false;
        if (const char* env = std::getenv(kOutputEnv); env && *env) cfg.output_dir = env;
        if (output) cfg.output_dir = *output;
        cfg.validate();
        return cfg;
    }
};

int cmd_run(const ConfigFlags& flags) {
    const PipelineConfig cfg = flags.resolve();
    const PipelineResult r = run_pipeline(cfg, fs::path(cfg.output_dir));
    std::cout << "regions " << r.segmentation.count() << ", classes " << r.voted.class_count;
    if (r.confusion) std::cout << ", average accuracy " << r.confusion->average_accuracy << "%";
    std::cout << "\nartifacts in " << cfg.output_dir << "\n";
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    return kExitOk;
}

struct SynthFlags {
    std::string kind = "composite";
    SceneSpec spec;
    std::string format = "container";
    std::optional<std::string> output;
};

int cmd_synth(const SynthFlags& f) {
    SceneSpec spec = f.spec;
    try {
        spec.kind = parse_scene_kind(f.kind);
    } catch (const Error&) {
        throw ConfigError("unknown scene kind: " + f.kind);
    }
    if (spec.size < 16 || spec.looks < 1 || spec.classes < 1 || spec.tile < 1 || spec.line_width < 1) {
        throw ConfigError("invalid scene spec");
    }
    io::ImageFormat format;
    try {
        format = io::parse_format(f.format);
    } catch (const Error&) {
        throw ConfigError("unknown format: " + f.format);
    }
    fs::path dir = "phsm_synth";
    if (const char* env = std::getenv(kOutputEnv); env && *env) dir = env;
    if (f.output) dir = *f.output;
    try {
        const SyntheticScene scene = make_scene(spec);
        fs::create_directories(dir);
        if (format == io::ImageFormat::Container) io::save_container(dir / "scene.phsm", scene.image);
        else io::save_t3_dir(dir / "T3", scene.image);
        io::save_labels(dir / "truth.labels", scene.truth);
        io::save_ppm(dir / "truth.ppm", render::class_palette(scene.truth));
        io::save_pgm(dir / "span.pgm", render::span_db_unit(span(scene.image)));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("synth", e.what());
    }
    std::cout << "scene written to " << dir.string() << "\n";
    return kExitOk;
}

struct SweepFlags {
    std::string param = "k";
    std::optional<double> from, to, step;
};

int cmd_sweep(const ConfigFlags& flags, const SweepFlags& s) {
    const PipelineConfig cfg = flags.resolve();
    const SweepParameter param = parse_sweep_parameter(s.param);
    const bool is_k = param == SweepParameter::K;
    const double from = s.from.value_or(is_k ? 3 : 10);
    const double to = s.to.value_or(is_k ? 21 : 50);
    const double step = s.step.value_or(is_k ? 2 : 5);
    if (!(step > 0.0) || to < from) throw ConfigError("bad sweep range");
    std::vector<double> values;
    for (double v = from; v <= to + 1e-9; v += step) values.push_back(v);
    const auto rows = run_sweep(cfg, param, values);
    const std::string csv = sweep_csv(param, rows);
    fs::create_directories(cfg.output_dir);
    io::write_text(fs::path(cfg.output_dir) / ("sweep_" + std::string(is_k ? "k" : "n_r") + ".csv"), csv);
    std::cout << csv;
    return kExitOk;
}

std::string file_magic(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    char buf[6] = {};
    in.read(buf, 6);
    return std::string(buf, static_cast<std::size_t>(in.gcount()));
}

struct RenderFlags {
    std::string input;
    std::string output;
    std::string kind = "auto";
    std::optional<std::string> background;
};

int cmd_render(const RenderFlags& f) {
    std::string kind = f.kind;
    if (fs::is_directory(f.input)) {
        if (kind == "auto") kind = "t3";
    } else if (!fs::exists(f.input)) {
        throw ConfigError("no such file: " + f.input);
    }
    if (kind == "auto") {
        const std::string magic = file_magic(f.input);
        if (magic == "PHSMLB") kind = "labels";
        else if (magic == "PHSMSR") kind = "scalar";
        else if (magic == "PHSMT3") kind = "image";
        else if (magic.rfind("# phsm", 0) == 0) kind = "sketch";
        else throw ConfigError("cannot tell the artifact type of " + f.input + "; pass --kind");
    }
    try {
        if (kind == "labels") io::save_ppm(f.output, render::label_palette(io::load_labels(f.input)));
        else if (kind == "classes") io::save_ppm(f.output, render::class_palette(io::load_labels(f.input)));
        else if (kind == "regionmap") {
            const LabelRaster l = io::load_labels(f.input);
            region::RegionMap map{Raster<std::uint8_t>(l.width(), l.height()), LabelRaster(l.width(), l.height(), -1)};
            for (std::size_t i = 0; i < l.size(); ++i) {
                if (l[i] < 0 || l[i] > 2) throw Error("not a region map");
                map.labels[i] = static_cast<std::uint8_t>(l[i]);
            }
            io::save_ppm(f.output, render::region_map_palette(map));
        } else if (kind == "scalar") io::save_pgm(f.output, render::unit_scale(io::load_scalar(f.input)));
        else if (kind == "image" || kind == "t3") {
            const CoherencyImage img =
                io::load_image(f.input, kind == "t3" ? io::ImageFormat::T3Dir : io::ImageFormat::Container);
            const PauliRgb p = pauli_rgb(img);
            Raster<io::Rgb> rgb(img.width(), img.height());
            for (std::size_t i = 0; i < rgb.size(); ++i) {
                auto byte = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
                rgb[i] = {byte(p.r[i]), byte(p.g[i]), byte(p.b[i])};
            }
            io::save_ppm(f.output, rgb);
        } else if (kind == "sketch") {
            const sketch::SketchMap map = sketch::from_text(io::read_text(f.input));
            Raster<io::Rgb> canvas(map.width, map.height, io::Rgb{0, 0, 0});
            if (f.background) {
                const CoherencyImage img = io::load_container(*f.background);
                if (img.width() != map.width || img.height() != map.height) throw Error("background size differs from sketch");
                canvas = render::grey_to_rgb(render::span_db_unit(span(img)));
            }
            render::draw_sketch(canvas, map.segments());
            io::save_ppm(f.output, canvas);
        } else {
            throw ConfigError("unknown render kind: " + kind);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("render", e.what());
    }
    std::cout << "rendered " << f.output << "\n";
    return kExitOk;
}

struct EvalFlags {
    std::string predicted;
    std::string truth;
    int ignore = classify::kIgnoreLabel;
    std::optional<std::string> output;
};

int cmd_eval(const EvalFlags& f) {
    std::string csv;
    try {
        const LabelRaster pred = io::load_labels(f.predicted);
        const LabelRaster truth = io::load_labels(f.truth);
        csv = classify::evaluate(pred, truth, {}, f.ignore).to_csv();
    } catch (const std::exception& e) {
        throw StageError("eval", e.what());
    }
    if (f.output) io::write_text(*f.output, csv);
    std::cout << csv;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polarimetric hierarchical semantic model: sketch map, region map, segmentation and classification"};
    app.require_subcommand(1);

    ConfigFlags run_flags;
    CLI::App* run = app.add_subcommand("run", "run the whole pipeline and write its artifacts");
    run_flags.add_to(run);

    SynthFlags synth_flags;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic Wishart scene with truth");
    synth->add_option("--kind", synth_flags.kind, "edge | line | dotgrid | mosaic | composite | uniform");
    synth->add_option("--size", synth_flags.spec.size, "raster size");
    synth->add_option("--contrast", synth_flags.spec.contrast_db, "contrast, dB");
    synth->add_option("--looks", synth_flags.spec.looks, "looks");
    synth->add_option("--seed", synth_flags.spec.seed, "random seed");
    synth->add_option("--classes", synth_flags.spec.classes, "mosaic class count");
    synth->add_option("--tile", synth_flags.spec.tile, "mosaic tile size");
    synth->add_option("--line-width", synth_flags.spec.line_width, "bright line width");
    synth->add_option("--format", synth_flags.format, "container | t3");
    synth->add_option("-o,--output", synth_flags.output, "output directory");

    ConfigFlags sweep_flags;
    SweepFlags sweep_range;
    CLI::App* sweep = app.add_subcommand("sweep", "accuracy versus K or N_r");
    sweep_flags.add_to(sweep);
    sweep->add_option("--param", sweep_range.param, "k | n_r");
    sweep->add_option("--from", sweep_range.from, "first value");
    sweep->add_option("--to", sweep_range.to, "last value");
    sweep->add_option("--step", sweep_range.step, "increment");

    RenderFlags render_flags;
    CLI::App* render = app.add_subcommand("render", "re-render a saved artifact as PGM / PPM");
    render->add_option("input", render_flags.input, "artifact file or T3 directory")->required();
    render->add_option("output", render_flags.output, "image to write")->required();
    render->add_option("--kind", render_flags.kind, "auto | labels | classes | regionmap | scalar | image | t3 | sketch");
    render->add_option("--background", render_flags.background, "container image drawn under a sketch");

    EvalFlags eval_flags;
    CLI::App* eval = app.add_subcommand("eval", "confusion matrix of a class map against truth");
    eval->add_option("predicted", eval_flags.predicted, "predicted class labels")->required();
    eval->add_option("truth", eval_flags.truth, "truth labels")->required();
    eval->add_option("--ignore", eval_flags.ignore, "truth label excluded from the counts");
    eval->add_option("-o,--output", eval_flags.output, "CSV file to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (synth->parsed()) return cmd_synth(synth_flags);
        if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_range);
        if (render->parsed()) return cmd_render(render_flags);
        if (eval->parsed()) return cmd_eval(eval_flags);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const StageError& e) {
        std::cerr << "stage " << e.stage() << " failed: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return kExitConfig;
}
