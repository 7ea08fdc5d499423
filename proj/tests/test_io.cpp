#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "jsmc/harness.hpp"
#include "jsmc/io.hpp"
#include "oracles.hpp"

namespace jsmc {
namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("jsmc_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

TEST(Manifest, TwoViewsOfFourInstances) {
    TempDir dir;
    write_file(dir / "a.csv", "1,2\n3,4\n5,6\n7,8\n");
    write_file(dir / "b.csv", "x,y,z\n1,0,0\n0,1,0\n0,0,1\n1,1,1\n");
    write_file(dir / "labels.txt", "5\n5\n9\n9\n");
    write_file(dir / "m.json", R"({"views": [{"name": "a", "path": "a.csv"},
        {"name": "b", "path": "b.csv", "header": true}], "labels": "labels.txt"})");
    const MultiViewDataset d = load_manifest(dir / "m.json");
    EXPECT_EQ(d.num_views(), 2u);
    EXPECT_EQ(d.num_instances(), 4);
    EXPECT_EQ(d.views[0].rows(), 2);
    EXPECT_EQ(d.views[1].rows(), 3);
    EXPECT_EQ(d.views[0](1, 2), 6.0);  // CSV rows are instances
    EXPECT_EQ(*d.labels, (Labels{0, 0, 1, 1}));
    EXPECT_EQ(d.names, (std::vector<std::string>{"a", "b"}));
}

TEST(Manifest, Errors) {
    TempDir dir;
    write_file(dir / "a.csv", "1\n2\n3\n4\n");
    write_file(dir / "b.csv", "1\n2\n3\n4\n5\n");
    write_file(dir / "c.csv", "1\nabc\n3\n4\n");
    write_file(dir / "labels.txt", "0\n1\n0\n");
    write_file(dir / "shape.json", R"({"views": [{"path": "a.csv"}, {"path": "b.csv"}]})");
    write_file(dir / "cell.json", R"({"views": [{"path": "c.csv"}]})");
    write_file(dir / "labels.json", R"({"views": [{"path": "a.csv"}], "labels": "labels.txt"})");
    write_file(dir / "missing.json", R"({"views": [{"path": "nope.csv"}]})");
    write_file(dir / "bad.json", "{not json");
    for (const char* m : {"shape.json", "cell.json", "labels.json", "missing.json", "bad.json", "absent.json"})
        EXPECT_THROW(load_manifest(dir / m), InputError) << m;
}

TEST(Manifest, StandardizeFlag) {
    TempDir dir;
    std::mt19937_64 rng(1);
    Matrix rows = 3.0 * oracle::random_matrix(rng, 12, 4);
    rows.array() += 7.0;
    rows.col(2).setConstant(4.0);
    write_csv(dir / "v.csv", rows);
    write_file(dir / "m.json", R"({"views": [{"path": "v.csv"}], "standardize": true})");
    const MultiViewDataset d = load_manifest(dir / "m.json");
    const Matrix& x = d.views[0];
    for (Eigen::Index f = 0; f < x.rows(); ++f) {
        const double mean = x.row(f).mean();
        EXPECT_LE(std::abs(mean), 1e-10);
        const double var = (x.row(f).array() - mean).square().sum() / static_cast<double>(x.cols());
        if (f == 2) EXPECT_EQ(x.row(f).cwiseAbs().maxCoeff(), 0.0);
        else EXPECT_NEAR(std::sqrt(var), 1.0, 1e-10);
    }
}

TEST(Manifest, SaveLoadRoundTrip) {
    TempDir dir;
    SyntheticSpec spec;
    spec.view_dims = {3, 5, 2};
    const MultiViewDataset d = generate_synthetic(spec);
    const MultiViewDataset back = load_manifest(save_dataset(d, dir.path()));
    ASSERT_EQ(back.num_views(), 3u);
    for (size_t v = 0; v < 3; ++v)
        EXPECT_LE((back.views[v] - d.views[v]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(*back.labels, *d.labels);
    EXPECT_EQ(back.names, d.names);
}

TEST(Synthetic, NoiselessClustersAreIdenticalColumns) {
    SyntheticSpec spec;
    spec.noise_sigma = 0.0;
    const MultiViewDataset d = generate_synthetic(spec);
    for (const Matrix& x : d.views)
        for (Eigen::Index i = 0; i < x.cols(); ++i) {
            const Eigen::Index first = (*d.labels)[i] * spec.instances_per_cluster;
            EXPECT_EQ(x.col(i), x.col(first));
        }
    EXPECT_NE(d.views[0].col(0), d.views[0].col(20));
}

TEST(Synthetic, DeterministicUnderSeed) {
    SyntheticSpec spec;
    spec.inconsistent_view_fraction = 0.5;
    const MultiViewDataset a = generate_synthetic(spec), b = generate_synthetic(spec);
    for (size_t v = 0; v < a.num_views(); ++v) EXPECT_EQ(a.views[v], b.views[v]);
    spec.seed = 43;
    EXPECT_NE(generate_synthetic(spec).views[0], a.views[0]);
}

TEST(Synthetic, InconsistentViewsAreTheLastFloorFraction) {
    SyntheticSpec spec;
    spec.view_dims = {6, 6, 6};
    spec.inconsistent_view_fraction = 0.7;  // floor(2.1) = 2 views
    const MultiViewDataset clean = generate_synthetic({.view_dims = {6, 6, 6}});
    const MultiViewDataset noisy = generate_synthetic(spec);
    EXPECT_EQ(noisy.views[0], clean.views[0]);
    EXPECT_NE(noisy.views[1], clean.views[1]);
    EXPECT_NE(noisy.views[2], clean.views[2]);
}

TEST(Synthetic, SingleViewSpectralSanity) {
    const MultiViewDataset d = generate_synthetic({});
    PipelineOptions opt;
    opt.spectral.n_clusters = 3;
    const BaselineResult r = cmd_baseline(d, opt);
    EXPECT_GE(r.per_view[0].metrics->nmi, 0.9);
}

TEST(Synthetic, SpecValidation) {
    EXPECT_THROW(generate_synthetic({.n_clusters = 0}), InputError);
    EXPECT_THROW(generate_synthetic({.noise_sigma = -1.0}), InputError);
    EXPECT_THROW(generate_synthetic({.inconsistent_view_fraction = 1.5}), InputError);
}

ClusterReport sample_report() {
    ClusterReport r;
    r.name = "sample";
    r.labels = {0, 1, 1, 0};
    r.metrics = Metrics{0.5, -0.25, 0.75, 0.75};
    r.trace = {{1, 10.5, 9.5, 0.1, 0.2, 1.0}, {2, 9.25, 9.0, 0.01, 0.02, 1.0}};
    r.timings = {{"total", 0.5}};
    r.config = {{"alpha", 1.0}};
    r.converged = true;
    r.final_objective = 9.0;
    return r;
}

TEST(Report, JsonRoundTrip) {
    TempDir dir;
    const ClusterReport r = sample_report();
    write_report(r, dir / "r.json");
    const ClusterReport b = read_report(dir / "r.json");
    EXPECT_EQ(report_to_json(b), report_to_json(r));
    const json j = report_to_json(r);
    for (const char* key : {"labels", "metrics", "trace", "timings", "config"}) EXPECT_TRUE(j.contains(key));
    for (const char* key : {"iter", "lagrangian", "objective", "primal_residual"})
        EXPECT_TRUE(j["trace"][0].contains(key));
}

TEST(Report, MarkdownHasOneRowPerMetric) {
    const std::string md = reports_to_markdown({sample_report()});
    EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 6) << md;
    for (const char* m : {"| NMI |", "| ARI |", "| ACC |", "| PUR |"})
        EXPECT_NE(md.find(m), std::string::npos) << m;
    EXPECT_NE(md.find("50.00"), std::string::npos);
}

TEST(Report, NanMetricRejectedBeforeWrite) {
    TempDir dir;
    ClusterReport r = sample_report();
    r.metrics->nmi = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(write_report(r, dir / "r.json"), InputError);
    EXPECT_FALSE(fs::exists(dir / "r.json"));
    r = sample_report();
    r.metrics->acc = 1.5;
    EXPECT_THROW(validate_report(r), InputError);
}

TEST(Report, UnwritablePath) {
    TempDir dir;
    write_file(dir / "file", "x");
    EXPECT_THROW(write_report(sample_report(), dir / "file" / "r.json"), InputError);
}

TEST(Labels, NormalizationIsSortedAndContiguous) {
    EXPECT_EQ(normalize_labels({7, -1, 7, 3}), (Labels{2, 0, 2, 1}));
    EXPECT_EQ(count_distinct({4, 4, 9}), 2);
}

} // namespace
} // namespace jsmc
