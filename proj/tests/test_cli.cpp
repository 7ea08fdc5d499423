#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>

#include "jsmc/io.hpp"

#ifndef JSMC_CLI_PATH
#error "JSMC_CLI_PATH must point at the jsmc executable"
#endif

namespace jsmc {
namespace {

struct Outcome {
    int code;
    std::string out;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("jsmc_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }

    Outcome jsmc(const std::string& args) const {
        const fs::path out = dir_ / "stdout.txt";
        const std::string cmd = std::string(JSMC_CLI_PATH) + " " + args + " > " + out.string() +
                                " 2> " + (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        std::ifstream in(out);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, text};
    }

    std::string p(const std::string& name) const { return (dir_ / name).string(); }

    json read_json(const std::string& name) const {
        std::ifstream in(dir_ / name);
        return json::parse(in);
    }

    fs::path dir_;
};

TEST_F(Cli, SynthThenRun) {
    ASSERT_EQ(jsmc("synth --output " + p("data")).code, 0);
    ASSERT_TRUE(fs::exists(dir_ / "data" / "manifest.json"));
    const Outcome r = jsmc("run --manifest " + p("data/manifest.json") + " --output " + p("r.json") +
                           " --trace-csv " + p("trace.csv"));
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1) << r.out;
    const json j = read_json("r.json");
    EXPECT_GE(j["metrics"]["nmi"].get<double>(), 0.95);
    EXPECT_EQ(j["labels"].size(), 60u);
    EXPECT_EQ(j["config"]["clusters"], 3);
    EXPECT_TRUE(fs::exists(dir_ / "trace.csv"));
}

TEST_F(Cli, RunWithoutLabelsOmitsMetrics) {
    MultiViewDataset d = generate_synthetic({});
    d.labels.reset();
    save_dataset(d, dir_ / "data");
    ASSERT_EQ(jsmc("run --manifest " + p("data/manifest.json") + " --clusters 3 --output " + p("r.json")).code, 0);
    const json j = read_json("r.json");
    EXPECT_FALSE(j.contains("metrics"));
    EXPECT_EQ(j["labels"].size(), 60u);
}

TEST_F(Cli, MarkdownGridAblateBaselineBench) {
    ASSERT_EQ(jsmc("synth --per-cluster 10 --output " + p("data")).code, 0);
    const std::string m = " --manifest " + p("data/manifest.json");
    EXPECT_EQ(jsmc("run" + m + " --format md --output " + p("r.md")).code, 0);
    EXPECT_EQ(jsmc("grid" + m + " --grid alpha=0.1,1 --grid beta=1 --grid lambda=1 --workers 2 --output " +
                   p("g.json")).code, 0);
    EXPECT_EQ(read_json("g.json")["rows"].size(), 2u);
    EXPECT_EQ(jsmc("ablate" + m + " --drop lowrank --drop smoothness --output " + p("a.json")).code, 0);
    EXPECT_EQ(read_json("a.json").size(), 4u);
    EXPECT_EQ(jsmc("baseline" + m + " --output " + p("b.json")).code, 0);
    EXPECT_EQ(read_json("b.json")["views"].size(), 2u);
    EXPECT_EQ(jsmc("bench --sizes 40 --iterations 3 --output " + p("bench.json")).code, 0);
    EXPECT_EQ(read_json("bench.json")["rows"].size(), 1u);
}

TEST_F(Cli, InputErrorsExitWithTwo) {
    EXPECT_EQ(jsmc("run --manifest " + p("missing.json") + " --output " + p("r.json")).code, 2);
    EXPECT_EQ(jsmc("run --output " + p("r.json")).code, 2);
    EXPECT_EQ(jsmc("frobnicate").code, 2);
    ASSERT_EQ(jsmc("synth --output " + p("data")).code, 0);
    EXPECT_EQ(jsmc("grid --manifest " + p("data/manifest.json") + " --max-cells 10 --output " + p("g.json")).code, 2);
    EXPECT_EQ(jsmc("run --manifest " + p("data/manifest.json") + " --drop everything --output " +
                   p("r.json")).code, 2);
}

TEST_F(Cli, NumericalFailureExitsWithThree) {
    ASSERT_EQ(jsmc("synth --output " + p("data")).code, 0);
    // beta = 0 leaves the rank-deficient Gram matrix unregularized.
    EXPECT_EQ(jsmc("run --manifest " + p("data/manifest.json") + " --beta 0 --output " + p("r.json")).code, 3);
}

} // namespace
} // namespace jsmc
