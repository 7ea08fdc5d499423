#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "jsmc/linalg.hpp"

namespace jsmc {

enum class EdgeWeighting { binary, gaussian };

/// How exact distance ties at the k-th neighbor boundary are resolved.
enum class TieRule {
    lower_index,  // exactly k neighbors; among equal distances the lower index wins
    include_all,  // every candidate tied with the k-th distance is kept
};

struct KnnOptions {
    int k = 5;
    EdgeWeighting weighting = EdgeWeighting::binary;
    double bandwidth = 1.0;  // gaussian only
    TieRule ties = TieRule::lower_index;
};

/// Symmetric nonnegative affinity matrix.
struct AffinityGraph {
    Matrix weights;
    int k = 0;  // neighbor count used to build it; 0 when not a K-NN graph

    Eigen::Index size() const { return weights.rows(); }
    Vector degrees() const { return weights.rowwise().sum(); }
};

/// Squared Euclidean distances between the columns of `view`.
inline Matrix pairwise_sq_distances(const Matrix& view) {
    const Vector norms = view.colwise().squaredNorm().transpose();
    Matrix d = -2.0 * (view.transpose() * view);
    d.colwise() += norms;
    d.rowwise() += norms.transpose();
    d = d.cwiseMax(0.0);
    d.diagonal().setZero();
    // Duplicated columns must give an exact zero, not rounding noise.
    for (Eigen::Index j = 0; j < view.cols(); ++j)
        for (Eigen::Index i = j + 1; i < view.cols(); ++i)
            if (view.col(i) == view.col(j)) d(i, j) = d(j, i) = 0.0;
    return d;
}

/// Directed K-NN adjacency over columns, symmetrized as (A + A^T) / 2.
inline AffinityGraph knn_graph(const Matrix& view, const KnnOptions& opt = {}) {
    require_finite(view, "knn_graph");
    const Eigen::Index n = view.cols();
    if (opt.k < 1 || opt.k >= n)
        throw InputError("knn_graph: k must satisfy 1 <= k < n (k=" + std::to_string(opt.k) +
                         ", n=" + std::to_string(n) + ")");
    if (opt.weighting == EdgeWeighting::gaussian && !(opt.bandwidth > 0.0))
        throw InputError("knn_graph: gaussian bandwidth must be positive");

    const Matrix dist = pairwise_sq_distances(view);
    Matrix directed = Matrix::Zero(n, n);
    std::vector<Eigen::Index> order(static_cast<size_t>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        order.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
            return dist(i, x) < dist(i, y);
        });
        size_t take = static_cast<size_t>(opt.k);
        if (opt.ties == TieRule::include_all) {
            const double boundary = dist(i, order[take - 1]);
            while (take < order.size() && dist(i, order[take]) == boundary) ++take;
        }
        for (size_t t = 0; t < take; ++t) {
            const Eigen::Index j = order[t];
            directed(i, j) = opt.weighting == EdgeWeighting::binary
                                 ? 1.0
                                 : std::exp(-dist(i, j) / (2.0 * opt.bandwidth * opt.bandwidth));
        }
    }
    AffinityGraph g;
    g.weights = 0.5 * (directed + directed.transpose());
    g.k = opt.k;
    return g;
}

/// Elementwise mean of the per-view (already symmetrized) K-NN graphs.
inline AffinityGraph average_knn_graph(const std::vector<Matrix>& views,
                                       const KnnOptions& opt = {}) {
    if (views.empty()) throw InputError("average_knn_graph: no views");
    const Eigen::Index n = views.front().cols();
    AffinityGraph avg{Matrix::Zero(n, n), opt.k};
    for (const Matrix& v : views) {
        if (v.cols() != n) throw InputError("average_knn_graph: views disagree on n");
        avg.weights += knn_graph(v, opt).weights;
    }
    avg.weights /= static_cast<double>(views.size());
    return avg;
}

inline void validate_affinity(const AffinityGraph& g) {
    require_square(g.weights, "affinity graph");
    require_finite(g.weights, "affinity graph");
    if (g.weights.size() == 0) return;
    if (g.weights.minCoeff() < 0.0) throw InputError("affinity graph has negative weights");
    if (!is_symmetric(g.weights)) throw InputError("affinity graph is not symmetric");
}

/// Combinatorial Laplacian L = D - W.
inline Matrix laplacian(const AffinityGraph& g) {
    validate_affinity(g);
    Matrix l = -g.weights;
    l.diagonal() += g.degrees();
    return l;
}

} // namespace jsmc
