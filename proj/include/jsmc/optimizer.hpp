#pragma once

// Alternating minimization of the jointly smoothed multi-view subspace
// objective
//
//   sum_v ||X_v - X_v (C + E_v)||_F^2 + alpha sum_v tr(C L_v C^T)
//     + beta sum_v ||E_v||_F^2 + lambda ||C||_*
//
// via the splitting S = C with multiplier Y and penalty mu. One iteration
// updates S (Sylvester solve), C (singular value thresholding), every E_v
// (ridge solve), then Y.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jsmc/dataset.hpp"
#include "jsmc/graph.hpp"
#include "jsmc/linalg.hpp"

namespace jsmc {

/// Terms switched off for ablation runs.
struct Ablation {
    bool drop_inconsistency = false;  // E_v pinned at 0
    bool drop_smoothness = false;     // alpha treated as 0
    bool drop_lowrank = false;        // lambda treated as 0

    bool any() const { return drop_inconsistency || drop_smoothness || drop_lowrank; }
    std::string name() const {
        if (!any()) return "full";
        std::string s;
        auto add = [&](const char* t) { s += (s.empty() ? "" : "+"); s += t; };
        if (drop_inconsistency) add("no-inconsistency");
        if (drop_smoothness) add("no-smoothness");
        if (drop_lowrank) add("no-lowrank");
        return s;
    }
    bool operator==(const Ablation&) const = default;
};

struct JsmcConfig {
    double alpha = 1.0;
    double beta = 1.0;
    double lambda = 1.0;
    double mu = 1.0;
    /// Penalty growth factor applied after every multiplier step. 1.0 keeps
    /// mu fixed; values > 1 are an extension for hard instances.
    double rho = 1.0;
    double mu_max = 1e10;
    KnnOptions knn{};
    int max_iter = 100;
    double tol_primal = 1e-6;     // on ||S - C||_F / max(1, ||C||_F)
    double tol_objective = 1e-5;  // on relative change of the augmented Lagrangian
    std::uint64_t seed = 0;
    Ablation ablation{};
    Tolerances numerics{};

    double effective_alpha() const { return ablation.drop_smoothness ? 0.0 : alpha; }
    double effective_lambda() const { return ablation.drop_lowrank ? 0.0 : lambda; }

    void validate() const {
        auto nonneg = [](double x, const char* name) {
            if (!(x >= 0.0) || !std::isfinite(x))
                throw InputError(std::string("config: ") + name + " must be finite and >= 0");
        };
        nonneg(alpha, "alpha");
        nonneg(beta, "beta");
        nonneg(lambda, "lambda");
        if (!(mu > 0.0) || !std::isfinite(mu)) throw InputError("config: mu must be > 0");
        if (!(rho >= 1.0)) throw InputError("config: rho must be >= 1");
        if (!(mu_max >= mu)) throw InputError("config: mu_max must be >= mu");
        if (max_iter < 1) throw InputError("config: max_iter must be >= 1");
        if (!(tol_primal >= 0.0) || !(tol_objective >= 0.0))
            throw InputError("config: tolerances must be >= 0");
    }
};

struct IterationRecord {
    int iter = 0;
    double lagrangian = 0.0;
    double objective = 0.0;
    double primal_residual = 0.0;  // ||S - C||_F / max(1, ||C||_F)
    double primal_norm = 0.0;      // ||S - C||_F
    double mu = 0.0;
};

struct OptimizerState {
    Matrix s, c, y;
    std::vector<Matrix> e;
    double mu = 1.0;
    int iter = 0;
    std::vector<IterationRecord> trace;
};

/// Quantities fixed for the whole run: per-view Gram matrices and Laplacians.
struct Precomputed {
    std::vector<Matrix> gram;
    Matrix gram_sum;
    std::vector<Matrix> lap;
    Matrix lap_sum;
};

/// Views plus their precomputed Gram matrices and graph Laplacians.
struct Problem {
    std::vector<Matrix> views;
    Precomputed pre;

    Eigen::Index n() const { return pre.gram_sum.rows(); }
    size_t num_views() const { return views.size(); }
};

inline Precomputed precompute(const std::vector<Matrix>& views, const KnnOptions& knn) {
    if (views.empty()) throw InputError("precompute: no views");
    const Eigen::Index n = views.front().cols();
    Precomputed p;
    p.gram_sum = Matrix::Zero(n, n);
    p.lap_sum = Matrix::Zero(n, n);
    for (const Matrix& x : views) {
        if (x.cols() != n) throw InputError("precompute: views disagree on n");
        Matrix g = x.transpose() * x;
        g = 0.5 * (g + g.transpose());
        p.gram_sum += g;
        p.gram.push_back(std::move(g));
        Matrix l = laplacian(knn_graph(x, knn));
        p.lap_sum += l;
        p.lap.push_back(std::move(l));
    }
    return p;
}

inline Problem make_problem(const MultiViewDataset& data, const JsmcConfig& cfg) {
    validate(data);
    cfg.validate();
    return Problem{data.views, precompute(data.views, cfg.knn)};
}

/// Starting point: C is the average K-NN graph, everything else zero.
inline OptimizerState initial_state(const Problem& prob, const JsmcConfig& cfg) {
    const Eigen::Index n = prob.n();
    OptimizerState st;
    st.c = average_knn_graph(prob.views, cfg.knn).weights;
    st.s = Matrix::Zero(n, n);
    st.y = Matrix::Zero(n, n);
    st.e.assign(prob.num_views(), Matrix::Zero(n, n));
    st.mu = cfg.mu;
    return st;
}

namespace detail {

inline void check_state(const OptimizerState& st, const Problem& prob) {
    const Eigen::Index n = prob.n();
    auto sq = [n](const Matrix& m) { return m.rows() == n && m.cols() == n; };
    if (!sq(st.s) || !sq(st.c) || !sq(st.y) || st.e.size() != prob.num_views())
        throw InputError("optimizer state has inconsistent dimensions");
    for (const Matrix& e : st.e)
        if (!sq(e)) throw InputError("optimizer state has inconsistent dimensions");
}

// sum_v ||X_v - X_v (Z + E_v)||_F^2 for the representation z
inline double self_expressive_loss(const Problem& prob, const Matrix& z,
                                   const std::vector<Matrix>& e) {
    double loss = 0.0;
    for (size_t v = 0; v < prob.num_views(); ++v) {
        const Matrix& x = prob.views[v];
        loss += (x - x * (z + e[v])).squaredNorm();
    }
    return loss;
}

inline double smoothness(const Problem& prob, const Matrix& z) {
    return (z * prob.pre.lap_sum).cwiseProduct(z).sum();
}

inline double inconsistency(const std::vector<Matrix>& e) {
    double s = 0.0;
    for (const Matrix& m : e) s += m.squaredNorm();
    return s;
}

} // namespace detail

/// Objective with C in every term. `nuclear` may carry ||C||_* when the
/// caller already knows it.
inline double objective(const OptimizerState& st, const Problem& prob, const JsmcConfig& cfg,
                        std::optional<double> nuclear = std::nullopt) {
    detail::check_state(st, prob);
    double value = detail::self_expressive_loss(prob, st.c, st.e);
    if (cfg.effective_alpha() != 0.0) value += cfg.effective_alpha() * detail::smoothness(prob, st.c);
    if (!cfg.ablation.drop_inconsistency) value += cfg.beta * detail::inconsistency(st.e);
    if (cfg.effective_lambda() != 0.0)
        value += cfg.effective_lambda() * (nuclear ? *nuclear : nuclear_norm(st.c));
    return value;
}

/// Augmented Lagrangian: S in the loss and smoothness terms, C under the
/// nuclear norm, plus (mu/2) ||S - C + Y/mu||_F^2.
inline double lagrangian(const OptimizerState& st, const Problem& prob, const JsmcConfig& cfg,
                         std::optional<double> nuclear = std::nullopt) {
    detail::check_state(st, prob);
    double value = detail::self_expressive_loss(prob, st.s, st.e);
    if (cfg.effective_alpha() != 0.0) value += cfg.effective_alpha() * detail::smoothness(prob, st.s);
    if (!cfg.ablation.drop_inconsistency) value += cfg.beta * detail::inconsistency(st.e);
    if (cfg.effective_lambda() != 0.0)
        value += cfg.effective_lambda() * (nuclear ? *nuclear : nuclear_norm(st.c));
    value += 0.5 * st.mu * (st.s - st.c + st.y / st.mu).squaredNorm();
    return value;
}

/// Factorizations of the fixed coefficient matrices for a given mu.
class UpdateFactors {
public:
    UpdateFactors(const Problem& prob, const JsmcConfig& cfg, double mu) : mu_(mu) {
        Matrix a = 2.0 * prob.pre.gram_sum;
        a.diagonal().array() += mu;
        const double alpha = cfg.effective_alpha();
        if (alpha == 0.0) {
            spd_s_ = std::make_unique<SpdSolver>(a, cfg.numerics);
        } else {
            sylvester_ = std::make_unique<SymmetricSylvesterSolver>(
                a, 2.0 * alpha * prob.pre.lap_sum, cfg.numerics);
        }
        if (!cfg.ablation.drop_inconsistency) {
            for (const Matrix& g : prob.pre.gram) {
                Matrix m = g;
                m.diagonal().array() += cfg.beta;
                ridge_.emplace_back(m, cfg.numerics);
            }
        }
    }

    double mu() const { return mu_; }

    Matrix solve_s(const Matrix& q) const {
        return sylvester_ ? sylvester_->solve(q) : spd_s_->solve(q);
    }
    const SpdSolver& ridge(size_t v) const { return ridge_.at(v); }

private:
    double mu_;
    std::unique_ptr<SymmetricSylvesterSolver> sylvester_;
    std::unique_ptr<SpdSolver> spd_s_;
    std::vector<SpdSolver> ridge_;
};

/// Right-hand side sum_v 2 G_v (I - E_v) + mu C - Y of the S-subproblem.
inline Matrix s_rhs(const OptimizerState& st, const Problem& prob) {
    Matrix q = 2.0 * prob.pre.gram_sum + st.mu * st.c - st.y;
    for (size_t v = 0; v < prob.num_views(); ++v) q.noalias() -= 2.0 * prob.pre.gram[v] * st.e[v];
    return q;
}

/// S-update with cached factorizations.
inline Matrix update_s(const OptimizerState& st, const Problem& prob, const UpdateFactors& f) {
    return f.solve_s(s_rhs(st, prob));
}

/// Solves (2 sum G_v + mu I) S + S (2 alpha sum L_v) = sum 2 G_v (I - E_v) + mu C - Y.
/// With alpha = 0 the Sylvester system reduces to an SPD solve.
inline Matrix update_s(const OptimizerState& st, const Problem& prob, const JsmcConfig& cfg) {
    detail::check_state(st, prob);
    Matrix a = 2.0 * prob.pre.gram_sum;
    a.diagonal().array() += st.mu;
    const Matrix q = s_rhs(st, prob);
    if (cfg.effective_alpha() == 0.0) return solve_spd(a, q, cfg.numerics);
    return solve_sylvester(a, 2.0 * cfg.effective_alpha() * prob.pre.lap_sum, q, cfg.numerics);
}

/// C = svt(S + Y/mu, lambda/mu), returned with its spectrum.
inline Shrinkage update_c_shrinkage(const OptimizerState& st, const JsmcConfig& cfg) {
    const Matrix m = st.s + st.y / st.mu;
    return shrink_singular_values(m, cfg.effective_lambda() / st.mu);
}

inline Matrix update_c(const OptimizerState& st, const JsmcConfig& cfg) {
    if (cfg.effective_lambda() == 0.0) return st.s + st.y / st.mu;
    return update_c_shrinkage(st, cfg).value;
}

/// Solves (G_v + beta I) E_v = G_v (I - S).
inline Matrix update_e(size_t view, const OptimizerState& st, const Problem& prob,
                       const JsmcConfig& cfg) {
    const Eigen::Index n = prob.n();
    if (cfg.ablation.drop_inconsistency) return Matrix::Zero(n, n);
    const Matrix& g = prob.pre.gram.at(view);
    Matrix a = g;
    a.diagonal().array() += cfg.beta;
    return solve_spd(a, g - g * st.s, cfg.numerics);
}

inline Matrix update_e(size_t view, const OptimizerState& st, const Problem& prob,
                       const JsmcConfig& cfg, const UpdateFactors& f) {
    const Eigen::Index n = prob.n();
    if (cfg.ablation.drop_inconsistency) return Matrix::Zero(n, n);
    const Matrix& g = prob.pre.gram.at(view);
    return f.ridge(view).solve(g - g * st.s);
}

inline Matrix update_y(const OptimizerState& st) { return st.y + st.mu * (st.s - st.c); }

struct FitTimings {
    double graph_seconds = 0.0;  // Gram matrices, K-NN graphs, Laplacians, initial C
    double factor_seconds = 0.0;  // coefficient factorizations
    double iterate_seconds = 0.0;
};

struct FitResult {
    OptimizerState state;
    bool converged = false;
    FitTimings timings;

    const Matrix& c() const { return state.c; }
    const std::vector<IterationRecord>& trace() const { return state.trace; }
};

/// Runs one S -> C -> E -> Y cycle in place and appends its trace record.
inline void iterate_once(OptimizerState& st, const Problem& prob, const JsmcConfig& cfg,
                         const UpdateFactors& f) {
    st.s = update_s(st, prob, f);

    std::optional<double> nuclear;
    if (cfg.effective_lambda() == 0.0) {
        st.c = st.s + st.y / st.mu;
    } else {
        Shrinkage shrunk = update_c_shrinkage(st, cfg);
        nuclear = shrunk.nuclear_norm();
        st.c = std::move(shrunk.value);
    }

    for (size_t v = 0; v < st.e.size(); ++v) st.e[v] = update_e(v, st, prob, cfg, f);

    st.y = update_y(st);
    ++st.iter;

    IterationRecord rec;
    rec.iter = st.iter;
    rec.mu = st.mu;
    rec.primal_norm = (st.s - st.c).norm();
    rec.primal_residual = rec.primal_norm / std::max(1.0, st.c.norm());
    rec.objective = objective(st, prob, cfg, nuclear);
    rec.lagrangian = lagrangian(st, prob, cfg, nuclear);
    if (!std::isfinite(rec.lagrangian) || !st.c.allFinite())
        throw NumericalError("fit: iterates became non-finite at iteration " +
                             std::to_string(st.iter));
    st.trace.push_back(rec);
}

inline bool has_converged(const std::vector<IterationRecord>& trace, const JsmcConfig& cfg) {
    if (trace.size() < 2) return false;
    const IterationRecord& cur = trace.back();
    const IterationRecord& prev = trace[trace.size() - 2];
    const double change =
        std::abs(cur.lagrangian - prev.lagrangian) / std::max(1.0, std::abs(prev.lagrangian));
    return cur.primal_residual <= cfg.tol_primal && change <= cfg.tol_objective;
}

inline FitResult fit(const Problem& prob, const JsmcConfig& cfg) {
    using clock = std::chrono::steady_clock;
    cfg.validate();
    FitResult out;

    auto t0 = clock::now();
    out.state = initial_state(prob, cfg);
    auto t1 = clock::now();
    out.timings.graph_seconds = std::chrono::duration<double>(t1 - t0).count();

    auto factors = std::make_unique<UpdateFactors>(prob, cfg, out.state.mu);
    auto t2 = clock::now();
    out.timings.factor_seconds = std::chrono::duration<double>(t2 - t1).count();

    for (int it = 0; it < cfg.max_iter; ++it) {
        auto ti = clock::now();
        iterate_once(out.state, prob, cfg, *factors);
        out.timings.iterate_seconds += std::chrono::duration<double>(clock::now() - ti).count();
        if (has_converged(out.state.trace, cfg)) {
            out.converged = true;
            break;
        }
        const double next_mu = std::min(cfg.rho * out.state.mu, cfg.mu_max);
        if (next_mu != out.state.mu) {
            auto tf = clock::now();
            out.state.mu = next_mu;
            factors = std::make_unique<UpdateFactors>(prob, cfg, next_mu);
            out.timings.factor_seconds += std::chrono::duration<double>(clock::now() - tf).count();
        }
    }
    return out;
}

/// Builds the problem (Gram matrices, per-view graphs) and runs the optimizer.
inline FitResult fit(const MultiViewDataset& data, const JsmcConfig& cfg) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    const Problem prob = make_problem(data, cfg);
    const double build = std::chrono::duration<double>(clock::now() - t0).count();
    FitResult out = fit(prob, cfg);
    out.timings.graph_seconds += build;
    return out;
}

} // namespace jsmc
