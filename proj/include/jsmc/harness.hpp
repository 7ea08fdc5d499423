#pragma once

// End-to-end drivers behind the command-line tool: single runs, grid search,
// ablations, the single-view spectral baseline, synthetic data and timing.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "jsmc/io.hpp"
#include "jsmc/metrics.hpp"
#include "jsmc/optimizer.hpp"
#include "jsmc/spectral.hpp"

namespace jsmc {

using LogFn = std::function<void(const std::string&)>;

struct PipelineOptions {
    JsmcConfig jsmc{};
    SpectralConfig spectral{};
    NmiNormalization nmi_norm = NmiNormalization::sqrt;
};

inline json pipeline_config_json(const PipelineOptions& o) {
    json j = config_to_json(o.jsmc);
    j["clusters"] = o.spectral.n_clusters;
    j["kmeans_restarts"] = o.spectral.kmeans_restarts;
    j["zero_diagonal"] = o.spectral.zero_diagonal;
    return j;
}

/// fit -> affinity -> spectral partition -> metrics (when labels exist).
inline ClusterReport run_pipeline(const MultiViewDataset& data, const PipelineOptions& opt,
                                  const std::string& name = "jsmc") {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    FitResult fitted = fit(data, opt.jsmc);

    const auto ts = clock::now();
    const AffinityGraph w = affinity_from_representation(fitted.c(), opt.spectral.zero_diagonal);
    ClusterReport report;
    report.name = name;
    report.labels = spectral_partition(w, opt.spectral);
    const auto t1 = clock::now();

    if (data.labels) report.metrics = evaluate(report.labels, *data.labels, opt.nmi_norm);
    report.trace = fitted.trace();
    report.converged = fitted.converged;
    if (!report.trace.empty()) report.final_objective = report.trace.back().objective;
    report.config = pipeline_config_json(opt);
    report.timings = {{"graph", fitted.timings.graph_seconds},
                      {"factorize", fitted.timings.factor_seconds},
                      {"iterate", fitted.timings.iterate_seconds},
                      {"spectral", std::chrono::duration<double>(t1 - ts).count()},
                      {"total", std::chrono::duration<double>(t1 - t0).count()}};
    return report;
}

// ---------------------------------------------------------------------------
// Parallel map with a bounded worker count. Results land at their input
// index, so output order never depends on scheduling.
// ---------------------------------------------------------------------------

template <class Result, class Fn>
std::vector<Result> parallel_map(size_t count, int workers, Fn&& fn) {
    std::vector<Result> out(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < count; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

inline std::vector<double> log_range(int lo_exp, int hi_exp) {
    std::vector<double> v;
    for (int e = lo_exp; e <= hi_exp; ++e) v.push_back(std::pow(10.0, e));
    return v;
}

struct GridSpec {
    std::vector<double> alpha = log_range(-5, 5);
    std::vector<double> beta = log_range(-5, 5);
    std::vector<double> lambda = log_range(-5, 5);
    size_t max_cells = 2000;

    size_t cells() const { return alpha.size() * beta.size() * lambda.size(); }
};

/// Parses "alpha=1,10" style axis restrictions into `grid`.
inline void apply_grid_axis(GridSpec& grid, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw InputError("grid axis must look like name=v1,v2: " + text);
    const std::string axis = text.substr(0, eq);
    std::vector<double> values;
    std::stringstream ss(text.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != tok.size() || !std::isfinite(v) || v < 0.0)
            throw InputError("grid value '" + tok + "' is not a nonnegative number");
        values.push_back(v);
    }
    if (values.empty()) throw InputError("grid axis '" + axis + "' has no values");
    if (axis == "alpha") grid.alpha = values;
    else if (axis == "beta") grid.beta = values;
    else if (axis == "lambda") grid.lambda = values;
    else throw InputError("unknown grid axis '" + axis + "' (expected alpha, beta or lambda)");
}

struct GridRow {
    double alpha = 0.0, beta = 0.0, lambda = 0.0;
    ClusterReport report;
};

struct GridResult {
    std::vector<GridRow> rows;
    size_t best = 0;
    bool ranked_by_nmi = false;

    const ClusterReport& best_report() const { return rows.at(best).report; }
};

/// Highest NMI wins when labels exist, lowest final objective otherwise.
/// Ties keep the earlier cell.
inline size_t pick_best(const std::vector<ClusterReport>& reports, bool by_nmi) {
    size_t best = 0;
    for (size_t i = 1; i < reports.size(); ++i) {
        if (by_nmi) {
            if (reports[i].metrics->nmi > reports[best].metrics->nmi) best = i;
        } else {
            const double a = reports[i].final_objective.value_or(INFINITY);
            const double b = reports[best].final_objective.value_or(INFINITY);
            if (a < b) best = i;
        }
    }
    return best;
}

inline GridResult cmd_grid(const MultiViewDataset& data, const PipelineOptions& base,
                           const GridSpec& grid, int workers = 1, const LogFn& log = {}) {
    const size_t cells = grid.cells();
    if (cells == 0) throw InputError("grid is empty");
    if (cells > grid.max_cells)
        throw InputError("grid has " + std::to_string(cells) + " cells, above the cap of " +
                         std::to_string(grid.max_cells) + "; restrict an axis or raise the cap");
    std::vector<GridRow> cfgs;
    for (double a : grid.alpha)
        for (double b : grid.beta)
            for (double l : grid.lambda) cfgs.push_back(GridRow{a, b, l, {}});

    std::mutex log_mutex;
    std::atomic<size_t> done{0};
    auto reports = parallel_map<ClusterReport>(cells, workers, [&](size_t i) {
        PipelineOptions opt = base;
        opt.jsmc.alpha = cfgs[i].alpha;
        opt.jsmc.beta = cfgs[i].beta;
        opt.jsmc.lambda = cfgs[i].lambda;
        std::ostringstream name;
        name << "a=" << cfgs[i].alpha << ",b=" << cfgs[i].beta << ",l=" << cfgs[i].lambda;
        ClusterReport r = run_pipeline(data, opt, name.str());
        if (log) {
            std::lock_guard lock(log_mutex);
            log("grid cell " + std::to_string(++done) + "/" + std::to_string(cells) + " " + r.name);
        }
        return r;
    });

    GridResult result;
    result.ranked_by_nmi = data.labels.has_value();
    result.best = pick_best(reports, result.ranked_by_nmi);
    for (size_t i = 0; i < cells; ++i) {
        cfgs[i].report = std::move(reports[i]);
        result.rows.push_back(std::move(cfgs[i]));
    }
    return result;
}

inline json grid_to_json(const GridResult& g) {
    json rows = json::array();
    for (size_t i = 0; i < g.rows.size(); ++i) {
        const GridRow& r = g.rows[i];
        json row = {{"alpha", r.alpha},
                    {"beta", r.beta},
                    {"lambda", r.lambda},
                    {"converged", r.report.converged},
                    {"best", i == g.best}};
        if (r.report.final_objective) row["objective"] = *r.report.final_objective;
        if (r.report.metrics)
            row["metrics"] = {{"nmi", r.report.metrics->nmi},
                              {"ari", r.report.metrics->ari},
                              {"acc", r.report.metrics->acc},
                              {"pur", r.report.metrics->pur}};
        rows.push_back(row);
    }
    return {{"ranked_by", g.ranked_by_nmi ? "nmi" : "objective"},
            {"best", report_to_json(g.best_report())},
            {"rows", rows}};
}

inline std::string grid_to_markdown(const GridResult& g) {
    std::ostringstream os;
    os << "| alpha | beta | lambda | NMI | ARI | ACC | PUR | objective | best |\n"
       << "|---|---|---|---|---|---|---|---|---|\n";
    for (size_t i = 0; i < g.rows.size(); ++i) {
        const GridRow& r = g.rows[i];
        os << "| " << r.alpha << " | " << r.beta << " | " << r.lambda << " |";
        if (r.report.metrics) {
            const Metrics& m = *r.report.metrics;
            os << ' ' << fmt_metric(m.nmi) << " | " << fmt_metric(m.ari) << " | "
               << fmt_metric(m.acc) << " | " << fmt_metric(m.pur) << " |";
        } else {
            os << " - | - | - | - |";
        }
        os << ' ' << r.report.final_objective.value_or(NAN) << " | " << (i == g.best ? "**best**" : "")
           << " |\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

/// The full model followed by every non-empty subset of `drops`.
inline std::vector<Ablation> ablation_variants(const Ablation& drops) {
    std::vector<Ablation> out{Ablation{}};
    for (int mask = 1; mask < 8; ++mask) {
        Ablation a{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0};
        if ((a.drop_inconsistency && !drops.drop_inconsistency) ||
            (a.drop_smoothness && !drops.drop_smoothness) || (a.drop_lowrank && !drops.drop_lowrank))
            continue;
        out.push_back(a);
    }
    // Single drops first, then pairs, then all three.
    std::stable_sort(out.begin() + 1, out.end(), [](const Ablation& x, const Ablation& y) {
        auto count = [](const Ablation& a) {
            return int(a.drop_inconsistency) + int(a.drop_smoothness) + int(a.drop_lowrank);
        };
        return count(x) < count(y);
    });
    return out;
}

inline std::vector<ClusterReport> cmd_ablate(const MultiViewDataset& data,
                                             const PipelineOptions& base, const Ablation& drops,
                                             int workers = 1) {
    const std::vector<Ablation> variants = ablation_variants(drops);
    return parallel_map<ClusterReport>(variants.size(), workers, [&](size_t i) {
        PipelineOptions opt = base;
        opt.jsmc.ablation = variants[i];
        return run_pipeline(data, opt, variants[i].name());
    });
}

// ---------------------------------------------------------------------------
// Single-view spectral clustering baseline
// ---------------------------------------------------------------------------

struct BaselineResult {
    std::vector<ClusterReport> per_view;
    size_t best = 0;
};

inline BaselineResult cmd_baseline(const MultiViewDataset& data, const PipelineOptions& opt) {
    validate(data);
    BaselineResult out;
    for (size_t v = 0; v < data.num_views(); ++v) {
        using clock = std::chrono::steady_clock;
        const auto t0 = clock::now();
        ClusterReport r;
        r.name = "SC(" + (v < data.names.size() ? data.names[v] : "view" + std::to_string(v)) + ")";
        r.labels = spectral_partition(knn_graph(data.views[v], opt.jsmc.knn), opt.spectral);
        if (data.labels) r.metrics = evaluate(r.labels, *data.labels, opt.nmi_norm);
        r.config = pipeline_config_json(opt);
        r.config["view"] = v;
        r.timings = {{"total", std::chrono::duration<double>(clock::now() - t0).count()}};
        r.converged = true;
        out.per_view.push_back(std::move(r));
    }
    if (data.labels) out.best = pick_best(out.per_view, true);
    return out;
}

// ---------------------------------------------------------------------------
// Timing benchmark
// ---------------------------------------------------------------------------

struct BenchRow {
    Eigen::Index n = 0;
    int iterations = 0;
    double graph = 0.0, factorize = 0.0, iterate = 0.0, spectral = 0.0, total = 0.0;
};

struct BenchOptions {
    std::vector<int> sizes{100, 200, 400};
    int iterations = 30;  // fixed per size so only n varies
    int n_clusters = 4;
    std::vector<int> view_dims{20, 30};
    std::uint64_t seed = 42;
};

/// Times the full pipeline at each size on synthetic data (or on the first n
/// instances of `source` when given). Tolerances are zeroed so every size
/// runs exactly `iterations` iterations.
inline std::vector<BenchRow> cmd_bench(const BenchOptions& bench, const PipelineOptions& base,
                                       const MultiViewDataset* source = nullptr) {
    std::vector<BenchRow> rows;
    for (int n : bench.sizes) {
        MultiViewDataset data;
        if (source) {
            if (n > source->num_instances())
                throw InputError("bench size " + std::to_string(n) + " exceeds dataset size");
            for (const Matrix& v : source->views) data.views.push_back(v.leftCols(n));
            data.names = source->names;
        } else {
            SyntheticSpec spec;
            spec.n_clusters = bench.n_clusters;
            spec.instances_per_cluster = std::max(1, n / bench.n_clusters);
            spec.view_dims = bench.view_dims;
            spec.seed = bench.seed;
            data = generate_synthetic(spec);
            data.labels.reset();
        }
        PipelineOptions opt = base;
        opt.jsmc.max_iter = bench.iterations;
        opt.jsmc.tol_primal = 0.0;
        opt.jsmc.tol_objective = 0.0;
        opt.spectral.n_clusters = source ? base.spectral.n_clusters : bench.n_clusters;
        const ClusterReport r = run_pipeline(data, opt, "bench");
        BenchRow row;
        row.n = data.num_instances();
        row.iterations = static_cast<int>(r.trace.size());
        row.graph = r.timings.at("graph");
        row.factorize = r.timings.at("factorize");
        row.iterate = r.timings.at("iterate");
        row.spectral = r.timings.at("spectral");
        row.total = r.timings.at("total");
        rows.push_back(row);
    }
    return rows;
}

/// Least-squares slope of log(total time) against log(n).
inline double loglog_slope(const std::vector<BenchRow>& rows) {
    if (rows.size() < 2) return NAN;
    double mx = 0, my = 0;
    for (const auto& r : rows) {
        mx += std::log(static_cast<double>(r.n));
        my += std::log(r.total);
    }
    mx /= rows.size();
    my /= rows.size();
    double sxy = 0, sxx = 0;
    for (const auto& r : rows) {
        const double dx = std::log(static_cast<double>(r.n)) - mx;
        sxy += dx * (std::log(r.total) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

inline json bench_to_json(const std::vector<BenchRow>& rows) {
    json j = json::array();
    for (const auto& r : rows)
        j.push_back({{"n", r.n},
                     {"iterations", r.iterations},
                     {"graph", r.graph},
                     {"factorize", r.factorize},
                     {"iterate", r.iterate},
                     {"spectral", r.spectral},
                     {"total", r.total}});
    json out = {{"rows", j}};
    if (rows.size() >= 2) out["loglog_slope"] = loglog_slope(rows);
    return out;
}

inline std::string bench_to_markdown(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "| n | iterations | graph (s) | factorize (s) | iterate (s) | spectral (s) | total (s) |\n"
       << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows)
        os << "| " << r.n << " | " << r.iterations << " | " << r.graph << " | " << r.factorize
           << " | " << r.iterate << " | " << r.spectral << " | " << r.total << " |\n";
    if (rows.size() >= 2) os << "\nlog-log slope of total time vs n: " << loglog_slope(rows) << '\n';
    return os.str();
}

inline std::string trace_to_csv(const std::vector<IterationRecord>& trace) {
    std::ostringstream os;
    os << std::setprecision(17) << "iter,lagrangian,objective,primal_residual\n";
    for (const auto& t : trace)
        os << t.iter << ',' << t.lagrangian << ',' << t.objective << ',' << t.primal_residual << '\n';
    return os.str();
}

} // namespace jsmc
