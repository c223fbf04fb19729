#include "phsm/config.hpp"

#include "phsm/io.hpp"

#include <json.hpp>

#include <set>

namespace phsm {

using nlohmann::json;

namespace {

/// Calls f(section, key, member) for every plain field.
template <typename Config, typename F>
void visit_fields(Config& c, F&& f) {
    f("input", "path", c.input);
    f("input", "format", c.input_format);
    f("input", "truth", c.truth);
    f("input", "ignore_label", c.ignore_label);
    f("detect", "scales", c.scales);
    f("detect", "orientations", c.orientations);
    f("detect", "gradient_log", c.gradient_log);
    f("detect", "floor_quantile", c.floor_quantile);
    f("detect", "sketch_lines", c.sketch_lines);
    f("sketch", "clg_mode", c.clg_mode);
    f("sketch", "clg_value", c.clg_value);
    f("sketch", "clg_floor", c.clg_floor);
    f("sketch", "min_segment", c.min_segment);
    f("sketch", "max_deviation", c.max_deviation);
    f("region", "k", c.k);
    f("region", "theta0_deg", c.theta0_deg);
    f("region", "r", c.r);
    f("region", "side_fraction", c.side_fraction);
    f("region", "wedge_deg", c.wedge_deg);
    f("region", "top_fraction", c.top_fraction);
    f("region", "max_gap", c.max_gap);
    f("region", "structural_width", c.structural_width);
    f("segment", "h_spatial", c.h_spatial);
    f("segment", "h_range", c.h_range);
    f("segment", "min_region", c.min_region);
    f("segment", "n_r", c.n_r);
    f("segment", "use_region_map", c.use_region_map);
    f("classify", "zones", c.zones);
    f("classify", "max_iterations", c.max_iterations);
    f("classify", "min_change", c.min_change);
    f("run", "seed", c.seed);
    f("run", "output_dir", c.output_dir);
}

template <typename F>
void visit_scene(SceneSpec& s, F&& f) {
    f("size", s.size);
    f("contrast_db", s.contrast_db);
    f("looks", s.looks);
    f("classes", s.classes);
    f("tile", s.tile);
    f("line_width", s.line_width);
}

json scene_to_json(const SceneSpec& spec) {
    SceneSpec s = spec;
    json j;
    j["kind"] = scene_kind_name(s.kind);
    visit_scene(s, [&](const char* key, auto& v) { j[key] = v; });
    return j;
}

template <typename T>
void read_value(const json& j, const std::string& where, T& out) {
    try {
        out = j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for " + where);
    }
}

SceneSpec scene_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("input.scene must be an object or null");
    SceneSpec s;
    std::set<std::string> known{"kind"};
    if (j.contains("kind")) {
        std::string kind;
        read_value(j.at("kind"), "input.scene.kind", kind);
        try {
            s.kind = parse_scene_kind(kind);
        } catch (const Error&) {
            throw ConfigError("unknown scene kind: " + kind);
        }
    }
    visit_scene(s, [&](const char* key, auto& v) {
        known.insert(key);
        if (j.contains(key)) read_value(j.at(key), std::string("input.scene.") + key, v);
    });
    for (const auto& item : j.items())
        if (!known.count(item.key())) throw ConfigError("unknown field input.scene." + item.key());
    return s;
}

}  // namespace

void PipelineConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
    if (input.empty() && !scene) fail("need input.path or input.scene");
    if (input_format != "container" && input_format != "t3") fail("input.format must be container or t3");
    if (scales.empty()) fail("detect.scales is empty");
    for (double s : scales)
        if (!(s >= 1.0)) fail("detect.scales must be >= 1");
    if (orientations < 1) fail("detect.orientations must be >= 1");
    if (!(floor_quantile >= 0.0 && floor_quantile < 1.0)) fail("detect.floor_quantile must be in [0, 1)");
    if (clg_mode != "auto" && clg_mode != "fixed") fail("sketch.clg_mode must be auto or fixed");
    if (!(min_segment > 0.0)) fail("sketch.min_segment must be positive");
    if (!(max_deviation > 0.0)) fail("sketch.max_deviation must be positive");
    if (k < 1) fail("region.k must be >= 1");
    if (!(theta0_deg > 0.0 && theta0_deg <= 90.0)) fail("region.theta0_deg must be in (0, 90]");
    if (!(r > 0.0 && r <= 1.0)) fail("region.r must be in (0, 1]");
    if (!(side_fraction > 0.5 && side_fraction <= 1.0)) fail("region.side_fraction must be in (0.5, 1]");
    if (!(top_fraction > 0.0 && top_fraction <= 1.0)) fail("region.top_fraction must be in (0, 1]");
    if (!(structural_width > 0.0)) fail("region.structural_width must be positive");
    if (!(h_spatial > 0.0) || !(h_range > 0.0)) fail("segment bandwidths must be positive");
    if (min_region < 1) fail("segment.min_region must be >= 1");
    if (n_r < 1) fail("segment.n_r must be >= 1");
    if (zones != 8 && zones != 9) fail("classify.zones must be 8 or 9");
    if (max_iterations < 1) fail("classify.max_iterations must be >= 1");
    if (!(min_change >= 0.0 && min_change < 1.0)) fail("classify.min_change must be in [0, 1)");
    if (output_dir.empty()) fail("run.output_dir is empty");
    if (scene) {
        if (scene->size < 16) fail("input.scene.size must be >= 16");
        if (scene->looks < 1) fail("input.scene.looks must be >= 1");
        if (scene->classes < 1 || scene->tile < 1 || scene->line_width < 1) fail("input.scene counts must be >= 1");
    }
}

std::string to_json_text(const PipelineConfig& cfg) {
    PipelineConfig c = cfg;
    json j = json::object();
    visit_fields(c, [&](const char* section, const char* key, auto& v) { j[section][key] = v; });
    j["input"]["scene"] = c.scene ? scene_to_json(*c.scene) : json(nullptr);
    return j.dump(2) + "\n";
}

PipelineConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig c;
    std::set<std::string> known{"input.scene"};
    std::set<std::string> sections;
    visit_fields(c, [&](const char* section, const char* key, auto& v) {
        const std::string name = std::string(section) + "." + key;
        known.insert(name);
        sections.insert(section);
        if (j.contains(section) && j.at(section).is_object() && j.at(section).contains(key)) read_value(j.at(section).at(key), name, v);
    });
    for (const auto& sec : j.items()) {
        if (!sections.count(sec.key())) throw ConfigError("unknown config section " + sec.key());
        if (!sec.value().is_object()) throw ConfigError("config section " + sec.key() + " must be an object");
        for (const auto& item : sec.value().items())
            if (!known.count(sec.key() + "." + item.key())) throw ConfigError("unknown field " + sec.key() + "." + item.key());
    }
    if (j.contains("input") && j["input"].contains("scene") && !j["input"]["scene"].is_null()) {
        c.scene = scene_from_json(j["input"]["scene"]);
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = io::read_text(path);
    } catch (const Error& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    return config_from_json_text(text);
}

}  // namespace phsm
