// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include "jsmc/jsmc.hpp"
#include "oracles.hpp"

using namespace jsmc;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget_s) {
        v.pass = false;
        v.detail += fmt("; over time budget %.0f s", budget_s);
    }
    if (!v.pass) ++failures;
    std::printf("[%s] %2d %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str(), secs);
    std::fflush(stdout);
}

MultiViewDataset standard_fixture() { return generate_synthetic({}); }

// 1 --------------------------------------------------------------------------
Verdict subproblem_exactness() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> w(0.1, 2.0);
    double worst_s = 0, worst_c = 0, worst_e = 0;
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index n = 10;
        MultiViewDataset data;
        data.views = {oracle::random_matrix(rng, 4, n), oracle::random_matrix(rng, 7, n)};
        JsmcConfig cfg;
        cfg.alpha = w(rng);
        cfg.beta = w(rng);
        cfg.lambda = w(rng);
        cfg.mu = w(rng);
        cfg.knn.k = 3;
        const Problem prob = make_problem(data, cfg);
        OptimizerState st;
        st.s = oracle::random_matrix(rng, n, n, 0.3);
        st.c = oracle::random_matrix(rng, n, n, 0.3);
        st.y = oracle::random_matrix(rng, n, n, 0.3);
        st.e = {oracle::random_matrix(rng, n, n, 0.3), oracle::random_matrix(rng, n, n, 0.3)};
        st.mu = cfg.mu;

        const Matrix s = update_s(st, prob, cfg);
        worst_s = std::max(worst_s, oracle::s_gradient(prob, st, cfg.alpha, s).norm());
        const Matrix c = update_c(st, cfg);
        worst_c = std::max(worst_c, oracle::prox_nuclear_residual(st.s + st.y / st.mu, c, cfg.lambda / st.mu));
        for (size_t v = 0; v < 2; ++v) {
            const Matrix e = update_e(v, st, prob, cfg);
            worst_e = std::max(worst_e, oracle::e_gradient(prob.pre.gram[v], st.s, e, cfg.beta).norm());
        }
    }
    const double worst = std::max({worst_s, worst_c, worst_e});
    return {worst <= 1e-7, fmt("max residual S %.1e, C %.1e, E %.1e (limit 1e-7)", worst_s, worst_c, worst_e)};
}

// 2 --------------------------------------------------------------------------
Verdict solver_residuals() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> nd(2, 32);
    double worst_syl = 0, worst_spd = 0;
    for (int t = 0; t < 100; ++t) {
        const int n = nd(rng);
        const Matrix a = oracle::random_spd(rng, n);
        const Matrix b = oracle::random_psd(rng, n, std::max(1, n / 2));
        const Matrix q = oracle::random_matrix(rng, n, n);
        const Matrix s = solve_sylvester(a, b, q);
        worst_syl = std::max(worst_syl, (a * s + s * b - q).norm() / std::max(1.0, q.norm()));
        const Matrix r = oracle::random_matrix(rng, n, 3);
        const Matrix x = solve_spd(a, r);
        worst_spd = std::max(worst_spd, (a * x - r).norm() / std::max(1.0, r.norm()));
    }
    return {std::max(worst_syl, worst_spd) <= 1e-9,
            fmt("max relative residual Sylvester %.1e, SPD %.1e (limit 1e-9)", worst_syl, worst_spd)};
}

// 3 --------------------------------------------------------------------------
Verdict svt_oracle() {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::uniform_int_distribution<int> nd(2, 12);
    double worst_spec = 0, worst_drop = 0;
    for (int t = 0; t < 50; ++t) {
        const Matrix m = oracle::random_matrix(rng, nd(rng), nd(rng));
        const double tau = u(rng);
        const Matrix c = svt(m, tau);
        const Vector expected = (singular_values(m).array() - tau).max(0.0).matrix();
        worst_spec = std::max(worst_spec, (singular_values(c) - expected).cwiseAbs().maxCoeff());
        auto prox = [&](const Matrix& x) { return tau * oracle::nuclear_norm_eig(x) + 0.5 * (x - m).squaredNorm(); };
        const double base = prox(c);
        for (int p = 0; p < 40; ++p) {
            const double d = base - prox(c + oracle::random_matrix(rng, m.rows(), m.cols(), 1e-3));
            worst_drop = std::max(worst_drop, d);
        }
    }
    return {worst_spec <= 1e-8 && worst_drop <= 1e-10,
            fmt("spectrum error %.1e (limit 1e-8), best perturbation gain %.1e (must be <= 0)", worst_spec,
                worst_drop)};
}

// 4 --------------------------------------------------------------------------
Verdict convergence_shape() {
    JsmcConfig cfg;
    cfg.max_iter = 5000;
    const FitResult r = fit(standard_fixture(), cfg);
    const auto& tr = r.trace();
    int first_flat = -1;
    for (size_t i = 1; i < tr.size(); ++i) {
        const double rel = std::abs(tr[i].lagrangian - tr[i - 1].lagrangian) /
                           std::max(1.0, std::abs(tr[i - 1].lagrangian));
        if (rel < 1e-4) {
            first_flat = tr[i].iter;
            break;
        }
    }
    const double final_primal = tr.back().primal_residual;
    const bool pass = first_flat > 0 && first_flat <= 50 && final_primal < 1e-6 && r.converged;
    return {pass, fmt("Lagrangian change < 1e-4 first at iteration %d (limit 50); terminated at iteration %d "
                      "with primal residual %.1e (limit 1e-6)",
                      first_flat, static_cast<int>(tr.size()), final_primal)};
}

// 5 --------------------------------------------------------------------------
Verdict end_to_end() {
    PipelineOptions opt;
    opt.spectral.n_clusters = 3;
    const ClusterReport r = run_pipeline(standard_fixture(), opt);
    return {r.metrics->nmi >= 0.95 && r.metrics->ari >= 0.90,
            fmt("NMI %.4f (>= 0.95), ARI %.4f (>= 0.90)", r.metrics->nmi, r.metrics->ari)};
}

// 6 --------------------------------------------------------------------------
Verdict grouping_effect() {
    MultiViewDataset data = standard_fixture();
    const std::pair<int, int> pairs[] = {{3, 11}, {25, 31}, {44, 58}};
    for (Matrix& x : data.views)
        for (auto [i, j] : pairs) x.col(j) = x.col(i);
    JsmcConfig cfg;
    cfg.knn.ties = TieRule::include_all;
    cfg.max_iter = 5000;
    const FitResult r = fit(data, cfg);
    const Matrix& c = r.c();
    double worst = 0;
    for (auto [i, j] : pairs) worst = std::max(worst, (c.col(i) - c.col(j)).norm());
    const double limit = 1e-6 * c.norm();
    return {worst <= limit, fmt("max column gap %.1e (limit 1e-6 * ||C||_F = %.1e)", worst, limit)};
}

// 7 --------------------------------------------------------------------------
Verdict ablation_direction() {
    const Ablation variants[] = {{}, {false, true, false}, {true, true, false}, {true, false, true}, {false, true, true}};
    double avg[5] = {};
    int smooth_wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticSpec spec;
        spec.noise_sigma = 1.5;
        spec.inconsistent_view_fraction = 0.5;
        spec.seed = seed;
        const MultiViewDataset data = generate_synthetic(spec);
        double nmi[5];
        for (int v = 0; v < 5; ++v) {
            PipelineOptions opt;
            opt.spectral.n_clusters = 3;
            opt.jsmc.ablation = variants[v];
            nmi[v] = run_pipeline(data, opt).metrics->nmi;
            avg[v] += nmi[v] / 5.0;
        }
        if (nmi[0] >= nmi[1]) ++smooth_wins;
    }
    const bool doubles = avg[0] >= avg[2] && avg[0] >= avg[3] && avg[0] >= avg[4];
    return {doubles && smooth_wins >= 4,
            fmt("mean NMI full %.4f vs double drops %.4f / %.4f / %.4f; beats no-smoothness in %d/5 seeds",
                avg[0], avg[2], avg[3], avg[4], smooth_wins)};
}

// 8 --------------------------------------------------------------------------
Verdict metric_oracles() {
    std::mt19937_64 rng(808);
    std::uniform_int_distribution<int> nd(1, 20), kd(1, 4);
    double worst = 0;
    int acc_mismatch = 0, pur_below = 0;
    for (int t = 0; t < 200; ++t) {
        const size_t n = static_cast<size_t>(nd(rng));
        const Labels p = oracle::random_labels(rng, n, kd(rng));
        const Labels q = oracle::random_labels(rng, n, kd(rng));
        worst = std::max({worst, std::abs(nmi(p, q) - oracle::nmi(p, q)), std::abs(ari(p, q) - oracle::ari(p, q)),
                          std::abs(purity(p, q) - oracle::purity(p, q))});
        if (acc(p, q) != oracle::acc(p, q)) ++acc_mismatch;
        if (purity(p, q) < acc(p, q)) ++pur_below;
    }
    return {worst <= 1e-12 && acc_mismatch == 0 && pur_below == 0,
            fmt("max NMI/ARI/PUR deviation %.1e (limit 1e-12), ACC mismatches %d, PUR < ACC %d", worst,
                acc_mismatch, pur_below)};
}

// 9 --------------------------------------------------------------------------
Verdict complexity_trend() {
    PipelineOptions opt;
    const auto rows = cmd_bench(BenchOptions{}, opt);
    const double slope = loglog_slope(rows);
    return {slope >= 2.3 && slope <= 3.6,
            fmt("total seconds %.2f / %.2f / %.2f at n = 100 / 200 / 400, log-log slope %.2f (band [2.3, 3.6])",
                rows[0].total, rows[1].total, rows[2].total, slope)};
}

} // namespace

int main() {
    std::printf("JSMC acceptance suite\n");
    criterion(1, "subproblem exactness", 10, subproblem_exactness);
    criterion(2, "Sylvester and SPD residuals", 10, solver_residuals);
    criterion(3, "singular value thresholding oracle", 10, svt_oracle);
    criterion(4, "convergence shape", 30, convergence_shape);
    criterion(5, "end-to-end quality", 30, end_to_end);
    criterion(6, "grouping effect", 60, grouping_effect);
    criterion(7, "ablation direction", 300, ablation_direction);
    criterion(8, "metric oracles", 10, metric_oracles);
    criterion(9, "complexity trend", 600, complexity_trend);

    if (const char* manifest = std::getenv("JSMC_REPRO_MANIFEST")) {
        criterion(10, "user dataset grid search (informational)", 1e9, [&]() -> Verdict {
            const MultiViewDataset data = load_manifest(manifest);
            if (!data.labels) return {false, "manifest has no labels"};
            PipelineOptions opt;
            opt.spectral.n_clusters = count_distinct(*data.labels);
            const GridResult g = cmd_grid(data, opt, GridSpec{}, 1);
            const Metrics& m = *g.best_report().metrics;
            return {true, fmt("best cell %s: NMI %.2f ARI %.2f ACC %.2f PUR %.2f", g.best_report().name.c_str(),
                              100 * m.nmi, 100 * m.ari, 100 * m.acc, 100 * m.pur)};
        });
    } else {
        std::printf("[SKIP] 10 user dataset grid search: set JSMC_REPRO_MANIFEST to a labeled manifest\n");
    }

    std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
