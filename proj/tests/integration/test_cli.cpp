#include "phsm/classify.hpp"
#include "phsm/config.hpp"
#include "phsm/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace phsm;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "phsm_cli_tests";

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PHSM_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh(const std::string& name) {
    const fs::path p = kRoot / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const std::string kSmallMosaic = "--scene mosaic --size 64 --tile 16 --classes 3";

}  // namespace

TEST(Cli, RunWritesArtifactsAndExitsZero) {
    const fs::path out = fresh("run");
    ASSERT_EQ(run_cli("run " + kSmallMosaic + " -o " + out.string()), 0);
    for (const char* f : {"config.json", "segmentation.labels", "classes.labels", "confusion.csv", "diagnostics.json",
                          "sketch.txt", "region_map.labels", "truth.labels"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    const PipelineConfig saved = load_config((out / "config.json").string());
    EXPECT_EQ(saved.k, 9);
    ASSERT_TRUE(saved.scene.has_value());
    EXPECT_EQ(saved.scene->size, 64);
}

TEST(Cli, ConfigErrorsExitTwo) {
    const fs::path out = fresh("config_errors");
    EXPECT_EQ(run_cli("run --scene nowhere -o " + out.string()), 2);
    EXPECT_EQ(run_cli("run --bogus-flag"), 2);
    EXPECT_EQ(run_cli("run " + kSmallMosaic + " --k 0 -o " + out.string()), 2);
    EXPECT_EQ(run_cli("run -o " + out.string()), 2);  // no input at all
    fs::create_directories(out);
    std::ofstream(out / "bad.json") << R"({"region": {"kay": 3}})";
    EXPECT_EQ(run_cli("run -c " + (out / "bad.json").string() + " " + kSmallMosaic), 2);
    EXPECT_EQ(run_cli("synth --kind spiral -o " + out.string()), 2);
    EXPECT_EQ(run_cli("sweep --param q " + kSmallMosaic + " -o " + out.string()), 2);
    EXPECT_EQ(run_cli(""), 2);
}

TEST(Cli, StageFailuresExitThree) {
    const fs::path out = fresh("stage_errors");
    fs::create_directories(out);
    std::ofstream(out / "bad.phsm") << "garbage";
    EXPECT_EQ(run_cli("run -i " + (out / "bad.phsm").string() + " -o " + (out / "run").string()), 3);
    EXPECT_EQ(run_cli("eval " + (out / "bad.phsm").string() + " " + (out / "bad.phsm").string()), 3);
}

TEST(Cli, MissingConfigIsWrittenWithDefaults) {
    const fs::path dir = fresh("default_config");
    fs::create_directories(dir);
    const fs::path cfg = dir / "phsm.json";
    ASSERT_EQ(run_cli("run -c " + cfg.string() + " " + kSmallMosaic + " -o " + (dir / "out").string()), 0);
    ASSERT_TRUE(fs::exists(cfg));
    const PipelineConfig c = load_config(cfg.string());
    EXPECT_EQ(c.k, 9);
    EXPECT_DOUBLE_EQ(c.theta0_deg, 30.0);
}

TEST(Cli, OutputEnvironmentVariableOverridesConfig) {
    const fs::path env_dir = fresh("env_out");
    const fs::path flag_dir = fresh("flag_out");
    const fs::path cfg_dir = fresh("cfg");
    fs::create_directories(cfg_dir);
    std::ofstream(cfg_dir / "c.json") << R"({"run": {"output_dir": ")" + (cfg_dir / "from_config").string() + R"("}})";
    ::setenv("PHSM_OUTPUT_DIR", env_dir.c_str(), 1);
    const int with_env = run_cli("run -c " + (cfg_dir / "c.json").string() + " " + kSmallMosaic);
    const int with_flag = run_cli("run " + kSmallMosaic + " -o " + flag_dir.string());
    const fs::path synth_env = fresh("env_out_synth");
    ::setenv("PHSM_OUTPUT_DIR", synth_env.c_str(), 1);
    const int synth = run_cli("synth --kind edge --size 32");
    ::unsetenv("PHSM_OUTPUT_DIR");
    EXPECT_EQ(with_env, 0);
    EXPECT_EQ(with_flag, 0);
    EXPECT_EQ(synth, 0);
    EXPECT_TRUE(fs::exists(env_dir / "classes.labels"));
    EXPECT_FALSE(fs::exists(cfg_dir / "from_config"));
    EXPECT_TRUE(fs::exists(flag_dir / "classes.labels"));
    EXPECT_TRUE(fs::exists(synth_env / "scene.phsm"));
}

TEST(Cli, RunsAreByteIdentical) {
    const fs::path a = fresh("det_a"), b = fresh("det_b");
    ASSERT_EQ(run_cli("run " + kSmallMosaic + " --seed 5 -o " + a.string()), 0);
    ASSERT_EQ(run_cli("run " + kSmallMosaic + " --seed 5 -o " + b.string()), 0);
    int files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const fs::path other = b / entry.path().filename();
        ASSERT_TRUE(fs::exists(other)) << other;
        const std::string name = entry.path().filename().string();
        if (name == "config.json") continue;  // records the output directory
        EXPECT_EQ(slurp(entry.path()), slurp(other)) << name;
        ++files;
    }
    EXPECT_GT(files, 20);
}

TEST(Cli, SynthThenRunFromFilesInBothFormats) {
    const fs::path dir = fresh("synth_formats");
    ASSERT_EQ(run_cli("synth --kind mosaic --size 64 --tile 16 --classes 3 -o " + (dir / "c").string()), 0);
    ASSERT_EQ(run_cli("synth --kind mosaic --size 64 --tile 16 --classes 3 --format t3 -o " + (dir / "t").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "c" / "scene.phsm"));
    EXPECT_TRUE(fs::exists(dir / "t" / "T3" / "config.txt"));
    const CoherencyImage a = io::load_container(dir / "c" / "scene.phsm");
    const CoherencyImage b = io::load_t3_dir(dir / "t" / "T3");
    ASSERT_EQ(a.width(), b.width());
    for (std::size_t i = 0; i < a.pixels.size(); ++i) EXPECT_TRUE(a.pixels[i].isApprox(b.pixels[i], 1e-6));

    ASSERT_EQ(run_cli("run -i " + (dir / "c" / "scene.phsm").string() + " --truth " + (dir / "c" / "truth.labels").string() +
                      " -o " + (dir / "run_c").string()),
              0);
    ASSERT_EQ(run_cli("run -i " + (dir / "t" / "T3").string() + " --format t3 --truth " +
                      (dir / "t" / "truth.labels").string() + " -o " + (dir / "run_t").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "run_c" / "confusion.csv"));
    EXPECT_TRUE(fs::exists(dir / "run_t" / "confusion.csv"));
}

TEST(Cli, EvalMatchesPipelineConfusion) {
    const fs::path dir = fresh("eval");
    ASSERT_EQ(run_cli("run " + kSmallMosaic + " -o " + (dir / "run").string()), 0);
    ASSERT_EQ(run_cli("eval " + (dir / "run" / "classes.labels").string() + " " + (dir / "run" / "truth.labels").string() +
                      " -o " + (dir / "eval.csv").string()),
              0);
    EXPECT_EQ(slurp(dir / "eval.csv"), slurp(dir / "run" / "confusion.csv"));
    const auto c = classify::evaluate(io::load_labels(dir / "run" / "classes.labels"),
                                      io::load_labels(dir / "run" / "truth.labels"));
    EXPECT_EQ(slurp(dir / "eval.csv"), c.to_csv());
}

TEST(Cli, RenderDetectsArtifactKinds) {
    const fs::path dir = fresh("render");
    ASSERT_EQ(run_cli("run " + kSmallMosaic + " -o " + (dir / "run").string()), 0);
    const fs::path run = dir / "run";
    EXPECT_EQ(run_cli("render " + (run / "segmentation.labels").string() + " " + (dir / "seg.ppm").string()), 0);
    EXPECT_EQ(run_cli("render " + (run / "classes.labels").string() + " " + (dir / "cls.ppm").string() + " --kind classes"), 0);
    EXPECT_EQ(run_cli("render " + (run / "entropy.scalar").string() + " " + (dir / "h.pgm").string()), 0);
    EXPECT_EQ(run_cli("render " + (run / "scene.phsm").string() + " " + (dir / "pauli.ppm").string()), 0);
    EXPECT_EQ(run_cli("render " + (run / "sketch.txt").string() + " " + (dir / "sketch.ppm").string() + " --background " +
                      (run / "scene.phsm").string()),
              0);
    const auto seg = io::load_ppm(dir / "seg.ppm");
    EXPECT_EQ(seg.width(), 64);
    EXPECT_EQ(seg.height(), 64);
    EXPECT_TRUE(fs::exists(dir / "h.pgm"));
    EXPECT_TRUE(fs::exists(dir / "sketch.ppm"));
    EXPECT_NE(run_cli("render " + (run / "missing").string() + " " + (dir / "x.ppm").string()), 0);
}

TEST(Cli, SweepWritesOneRowPerValue) {
    const fs::path dir = fresh("sweep");
    ASSERT_EQ(run_cli("sweep --param k --from 5 --to 9 --step 2 " + kSmallMosaic + " -o " + dir.string()), 0);
    const std::string csv = slurp(dir / "sweep_k.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    ASSERT_EQ(run_cli("sweep --param n_r --from 10 --to 20 --step 10 " + kSmallMosaic + " -o " + dir.string()), 0);
    EXPECT_TRUE(fs::exists(dir / "sweep_n_r.csv"));
}

TEST(Cli, AblationFlagSkipsRegionStages) {
    const fs::path out = fresh("ablation");
    ASSERT_EQ(run_cli("run " + kSmallMosaic + " --disable-region-map -o " + out.string()), 0);
    EXPECT_FALSE(fs::exists(out / "region_map.labels"));
    EXPECT_TRUE(fs::exists(out / "classes.labels"));
}
