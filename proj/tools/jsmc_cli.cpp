// Command-line harness: jsmc {run,grid,ablate,baseline,synth,bench}.
//
// Exit codes: 0 success, 2 bad input, 3 numerical failure, 1 anything else.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "jsmc/jsmc.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
    std::string manifest;
    int clusters = 0;
    double alpha = 1.0, beta = 1.0, lambda = 1.0, mu = 1.0, rho = 1.0;
    int k = 5;
    int max_iter = 100;
    double tol_primal = 1e-6, tol_objective = 1e-5;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string output;
    std::string format = "json";
    std::vector<std::string> drops;
    bool zero_diagonal = false;
    std::string weighting = "binary";
    double bandwidth = 1.0;
};

void add_model_flags(CLI::App* cmd, CommonFlags& f, bool hyper = true) {
    cmd->add_option("--manifest", f.manifest, "Dataset manifest (JSON)")->required();
    cmd->add_option("--clusters", f.clusters, "Number of clusters")->check(CLI::Range(2, 1 << 30));
    if (hyper) {
        cmd->add_option("--alpha", f.alpha, "Grouping-effect weight")->check(CLI::NonNegativeNumber);
        cmd->add_option("--beta", f.beta, "Inconsistency weight")->check(CLI::NonNegativeNumber);
        cmd->add_option("--lambda", f.lambda, "Nuclear-norm weight")->check(CLI::NonNegativeNumber);
    }
    cmd->add_option("--mu", f.mu, "Augmented Lagrangian penalty")->check(CLI::PositiveNumber);
    cmd->add_option("--rho", f.rho, "Penalty growth per iteration (1 = fixed)");
    cmd->add_option("--k", f.k, "K-NN neighbors")->check(CLI::PositiveNumber);
    cmd->add_option("--weighting", f.weighting, "K-NN edge weights")
        ->check(CLI::IsMember({"binary", "gaussian"}));
    cmd->add_option("--bandwidth", f.bandwidth, "Gaussian edge bandwidth")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", f.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--tol-primal", f.tol_primal, "Primal residual tolerance");
    cmd->add_option("--tol-objective", f.tol_objective, "Relative Lagrangian change tolerance");
    cmd->add_option("--seed", f.seed, "Random seed (spectral k-means)");
    cmd->add_option("--output", f.output, "Output file")->required();
    cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"json", "md"}));
    cmd->add_flag("--zero-diagonal", f.zero_diagonal, "Zero the affinity diagonal before partitioning");
}

jsmc::Ablation parse_drops(const std::vector<std::string>& drops) {
    jsmc::Ablation a;
    for (const auto& d : drops) {
        if (d == "inconsistency") a.drop_inconsistency = true;
        else if (d == "smoothness") a.drop_smoothness = true;
        else if (d == "lowrank") a.drop_lowrank = true;
        else throw jsmc::InputError("unknown --drop value '" + d + "'");
    }
    return a;
}

jsmc::PipelineOptions make_options(const CommonFlags& f, const jsmc::MultiViewDataset& data) {
    jsmc::PipelineOptions o;
    o.jsmc.alpha = f.alpha;
    o.jsmc.beta = f.beta;
    o.jsmc.lambda = f.lambda;
    o.jsmc.mu = f.mu;
    o.jsmc.rho = f.rho;
    o.jsmc.mu_max = std::max(o.jsmc.mu_max, f.mu);
    o.jsmc.knn.k = f.k;
    o.jsmc.knn.weighting =
        f.weighting == "gaussian" ? jsmc::EdgeWeighting::gaussian : jsmc::EdgeWeighting::binary;
    o.jsmc.knn.bandwidth = f.bandwidth;
    o.jsmc.max_iter = f.max_iter;
    o.jsmc.tol_primal = f.tol_primal;
    o.jsmc.tol_objective = f.tol_objective;
    o.jsmc.seed = f.seed;
    o.jsmc.ablation = parse_drops(f.drops);
    o.spectral.seed = f.seed;
    o.spectral.zero_diagonal = f.zero_diagonal;
    int clusters = f.clusters;
    if (clusters == 0) {
        if (!data.labels)
            throw jsmc::InputError("--clusters is required when the manifest has no labels");
        clusters = jsmc::count_distinct(*data.labels);
    }
    o.spectral.n_clusters = clusters;
    return o;
}

std::string metrics_summary(const jsmc::ClusterReport& r) {
    if (!r.metrics) return "no labels";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << "NMI=" << r.metrics->nmi
       << " ARI=" << r.metrics->ari << " ACC=" << r.metrics->acc << " PUR=" << r.metrics->pur;
    return os.str();
}

jsmc::ReportFormat parse_format(const std::string& s) {
    return s == "md" ? jsmc::ReportFormat::markdown : jsmc::ReportFormat::json;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("jsmc");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("JSMC_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Jointly smoothed multi-view subspace clustering"};
    app.require_subcommand(1);

    CommonFlags run_f, grid_f, ablate_f, base_f;
    std::string trace_csv;
    std::vector<std::string> grid_axes;
    std::size_t grid_cap = 2000;

    auto* run = app.add_subcommand("run", "Fit, cluster and evaluate one configuration");
    add_model_flags(run, run_f);
    run->add_option("--drop", run_f.drops, "Ablate a term (inconsistency, smoothness, lowrank)");
    run->add_option("--trace-csv", trace_csv, "Also write the convergence trace as CSV");

    auto* grid = app.add_subcommand("grid", "Grid search over alpha, beta, lambda");
    add_model_flags(grid, grid_f, false);
    grid->add_option("--grid", grid_axes, "Restrict an axis: alpha=0.1,1,10 (repeatable)");
    grid->add_option("--max-cells", grid_cap, "Refuse grids larger than this");
    grid->add_option("--workers", grid_f.workers, "Concurrent fits")->check(CLI::PositiveNumber);
    grid->add_option("--drop", grid_f.drops, "Ablate a term for every cell");

    auto* ablate = app.add_subcommand("ablate", "Full model plus ablation variants");
    add_model_flags(ablate, ablate_f);
    ablate->add_option("--drop", ablate_f.drops, "Terms to ablate; every non-empty subset is run");
    ablate->add_option("--workers", ablate_f.workers, "Concurrent fits")->check(CLI::PositiveNumber);

    auto* baseline = app.add_subcommand("baseline", "Spectral clustering on each single view");
    add_model_flags(baseline, base_f, false);

    jsmc::SyntheticSpec synth_spec;
    std::string synth_dir;
    auto* synth = app.add_subcommand("synth", "Write a synthetic multi-view dataset");
    synth->add_option("--clusters", synth_spec.n_clusters)->check(CLI::PositiveNumber);
    synth->add_option("--per-cluster", synth_spec.instances_per_cluster)->check(CLI::PositiveNumber);
    synth->add_option("--dims", synth_spec.view_dims, "Feature dimension of each view");
    synth->add_option("--separation", synth_spec.cluster_separation);
    synth->add_option("--noise", synth_spec.noise_sigma);
    synth->add_option("--inconsistent", synth_spec.inconsistent_view_fraction,
                      "Fraction of views that disagree with the shared grouping");
    synth->add_option("--seed", synth_spec.seed);
    synth->add_option("--output", synth_dir, "Output directory")->required();

    jsmc::BenchOptions bench_opt;
    std::string bench_manifest, bench_out, bench_format = "json";
    int bench_clusters = 0;
    auto* bench = app.add_subcommand("bench", "Time the pipeline at increasing n");
    bench->add_option("--sizes", bench_opt.sizes, "Instance counts")->expected(1, -1);
    bench->add_option("--iterations", bench_opt.iterations)->check(CLI::PositiveNumber);
    bench->add_option("--manifest", bench_manifest, "Use the first n instances of this dataset");
    bench->add_option("--clusters", bench_clusters, "Clusters (manifest mode)");
    bench->add_option("--seed", bench_opt.seed);
    bench->add_option("--output", bench_out)->required();
    bench->add_option("--format", bench_format)->check(CLI::IsMember({"json", "md"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    try {
        if (*run) {
            const auto data = jsmc::load_manifest(run_f.manifest);
            const auto opt = make_options(run_f, data);
            spdlog::info("run: V={} n={} clusters={}", data.num_views(), data.num_instances(),
                         opt.spectral.n_clusters);
            const auto report = jsmc::run_pipeline(data, opt);
            jsmc::write_report(report, run_f.output, parse_format(run_f.format));
            if (!trace_csv.empty()) jsmc::write_text(trace_csv, jsmc::trace_to_csv(report.trace));
            std::cout << "run: " << metrics_summary(report) << " iterations=" << report.trace.size()
                      << (report.converged ? " converged" : " not-converged") << " -> "
                      << run_f.output << '\n';
        } else if (*grid) {
            const auto data = jsmc::load_manifest(grid_f.manifest);
            const auto opt = make_options(grid_f, data);
            jsmc::GridSpec spec;
            spec.max_cells = grid_cap;
            for (const auto& axis : grid_axes) jsmc::apply_grid_axis(spec, axis);
            const auto result = jsmc::cmd_grid(data, opt, spec, grid_f.workers,
                                               [](const std::string& m) { spdlog::info(m); });
            if (grid_f.format == "md") jsmc::write_text(grid_f.output, jsmc::grid_to_markdown(result));
            else jsmc::write_text(grid_f.output, jsmc::grid_to_json(result).dump(2) + "\n");
            std::cout << "grid: " << result.rows.size() << " cells, best " << result.best_report().name
                      << " " << metrics_summary(result.best_report()) << " -> " << grid_f.output << '\n';
        } else if (*ablate) {
            const auto data = jsmc::load_manifest(ablate_f.manifest);
            auto opt = make_options(ablate_f, data);
            const auto drops = opt.jsmc.ablation;
            opt.jsmc.ablation = {};
            const auto reports = jsmc::cmd_ablate(data, opt, drops, ablate_f.workers);
            if (ablate_f.format == "md") {
                jsmc::write_text(ablate_f.output, jsmc::reports_to_markdown(reports));
            } else {
                jsmc::json j = jsmc::json::array();
                for (const auto& r : reports) {
                    jsmc::validate_report(r);
                    j.push_back(jsmc::report_to_json(r));
                }
                jsmc::write_text(ablate_f.output, j.dump(2) + "\n");
            }
            std::cout << "ablate: " << reports.size() << " variants, full model "
                      << metrics_summary(reports.front()) << " -> " << ablate_f.output << '\n';
        } else if (*baseline) {
            const auto data = jsmc::load_manifest(base_f.manifest);
            const auto opt = make_options(base_f, data);
            const auto result = jsmc::cmd_baseline(data, opt);
            if (base_f.format == "md") {
                jsmc::write_text(base_f.output, jsmc::reports_to_markdown(result.per_view));
            } else {
                jsmc::json j = {{"best", result.best}, {"views", jsmc::json::array()}};
                for (const auto& r : result.per_view) j["views"].push_back(jsmc::report_to_json(r));
                jsmc::write_text(base_f.output, j.dump(2) + "\n");
            }
            const auto& best = result.per_view[result.best];
            std::cout << "baseline: best " << best.name << " " << metrics_summary(best) << " -> "
                      << base_f.output << '\n';
        } else if (*synth) {
            const auto data = jsmc::generate_synthetic(synth_spec);
            const auto manifest = jsmc::save_dataset(data, synth_dir);
            std::cout << "synth: V=" << data.num_views() << " n=" << data.num_instances() << " -> "
                      << manifest.string() << '\n';
        } else if (*bench) {
            jsmc::PipelineOptions opt;
            std::vector<jsmc::BenchRow> rows;
            if (!bench_manifest.empty()) {
                const auto data = jsmc::load_manifest(bench_manifest);
                opt.spectral.n_clusters =
                    bench_clusters ? bench_clusters
                                   : (data.labels ? jsmc::count_distinct(*data.labels) : 2);
                rows = jsmc::cmd_bench(bench_opt, opt, &data);
            } else {
                rows = jsmc::cmd_bench(bench_opt, opt);
            }
            if (bench_format == "md") jsmc::write_text(bench_out, jsmc::bench_to_markdown(rows));
            else jsmc::write_text(bench_out, jsmc::bench_to_json(rows).dump(2) + "\n");
            std::cout << "bench: " << rows.size() << " sizes";
            if (rows.size() >= 2) std::cout << ", log-log slope " << jsmc::loglog_slope(rows);
            std::cout << " -> " << bench_out << '\n';
        }
    } catch (const jsmc::InputError& e) {
        spdlog::error("{}", e.what());
        return kExitInput;
    } catch (const jsmc::NumericalError& e) {
        spdlog::error("numerical failure: {}", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
