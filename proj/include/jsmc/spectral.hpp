#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "jsmc/dataset.hpp"
#include "jsmc/graph.hpp"
#include "jsmc/linalg.hpp"

namespace jsmc {

struct SpectralConfig {
    int n_clusters = 2;
    int kmeans_restarts = 20;
    int kmeans_max_iter = 300;
    std::uint64_t seed = 0;
    /// Zero the affinity diagonal before partitioning. Off by default: the
    /// affinity is used exactly as built from the representation.
    bool zero_diagonal = false;

    void validate() const {
        if (n_clusters < 2) throw InputError("spectral: n_clusters must be >= 2");
        if (kmeans_restarts < 1) throw InputError("spectral: kmeans_restarts must be >= 1");
        if (kmeans_max_iter < 1) throw InputError("spectral: kmeans_max_iter must be >= 1");
    }
};

/// W = (|C| + |C^T|) / 2.
inline AffinityGraph affinity_from_representation(const Matrix& c, bool zero_diagonal = false) {
    require_square(c, "affinity_from_representation");
    require_finite(c, "affinity_from_representation");
    AffinityGraph g;
    g.weights = 0.5 * (c.cwiseAbs() + c.transpose().cwiseAbs());
    if (zero_diagonal) g.weights.diagonal().setZero();
    return g;
}

struct KMeansResult {
    Labels labels;
    Matrix centers;  // k x dim
    double inertia = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

namespace detail {

inline std::mt19937_64 restart_rng(std::uint64_t seed, int restart) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(restart)};
    return std::mt19937_64(seq);
}

// k-means++ seeding over the rows of `points`.
inline Matrix kmeanspp_init(const Matrix& points, int k, std::mt19937_64& rng) {
    const Eigen::Index n = points.rows();
    Matrix centers(k, points.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = points.row(pick(rng));
    Vector d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng);
            chosen = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                r -= d2(i);
                if (r < 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centers.row(c) = points.row(chosen);
        d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

inline KMeansResult lloyd(const Matrix& points, Matrix centers, int max_iter) {
    const Eigen::Index n = points.rows();
    const int k = static_cast<int>(centers.rows());
    KMeansResult out;
    out.labels.assign(static_cast<size_t>(n), -1);
    Vector best_d2(n);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (points.row(i) - centers.row(c)).squaredNorm();
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            best_d2(i) = bd;
            if (out.labels[i] != best) {
                out.labels[i] = best;
                changed = true;
            }
        }
        out.iterations = it + 1;
        if (!changed && it > 0) break;

        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<long> sizes(static_cast<size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(out.labels[i]) += points.row(i);
            ++sizes[out.labels[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[c] > 0) {
                centers.row(c) = sums.row(c) / static_cast<double>(sizes[c]);
            } else {
                // Empty cluster: move it onto the worst-fit point.
                Eigen::Index far = 0;
                best_d2.maxCoeff(&far);
                centers.row(c) = points.row(far);
                best_d2(far) = 0.0;
            }
        }
    }
    out.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        out.inertia += (points.row(i) - centers.row(out.labels[i])).squaredNorm();
    out.centers = std::move(centers);
    return out;
}

} // namespace detail

/// k-means on the rows of `points`: k-means++ seeding, best inertia over
/// `restarts` runs, each restart seeded deterministically from `seed`.
inline KMeansResult kmeans(const Matrix& points, int k, int restarts, int max_iter,
                           std::uint64_t seed) {
    if (k < 1 || k > points.rows())
        throw InputError("kmeans: need 1 <= k <= number of points");
    KMeansResult best;
    for (int r = 0; r < restarts; ++r) {
        auto rng = detail::restart_rng(seed, r);
        KMeansResult cur = detail::lloyd(points, detail::kmeanspp_init(points, k, rng), max_iter);
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    return best;
}

/// Row-normalized eigenvectors of the n_clusters smallest eigenvalues of
/// I - D^{-1/2} W D^{-1/2}. Zero-degree vertices get D^{-1/2} = 0.
inline Matrix spectral_embedding(const AffinityGraph& w, int n_clusters) {
    validate_affinity(w);
    const Eigen::Index n = w.size();
    const Vector deg = w.degrees();
    Vector dinv(n);
    for (Eigen::Index i = 0; i < n; ++i) dinv(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
    Matrix lsym = -(dinv.asDiagonal() * w.weights * dinv.asDiagonal());
    lsym.diagonal().array() += 1.0;
    lsym = 0.5 * (lsym + lsym.transpose());
    Matrix emb = sym_eig(lsym).vectors.leftCols(n_clusters);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = emb.row(i).norm();
        if (norm > 0.0) emb.row(i) /= norm;
    }
    return emb;
}

inline Labels spectral_partition(const AffinityGraph& w, const SpectralConfig& cfg) {
    cfg.validate();
    if (cfg.n_clusters > w.size())
        throw InputError("spectral: n_clusters (" + std::to_string(cfg.n_clusters) +
                         ") exceeds number of instances (" + std::to_string(w.size()) + ")");
    AffinityGraph g = w;
    if (cfg.zero_diagonal) g.weights.diagonal().setZero();
    const Matrix emb = spectral_embedding(g, cfg.n_clusters);
    return kmeans(emb, cfg.n_clusters, cfg.kmeans_restarts, cfg.kmeans_max_iter, cfg.seed).labels;
}

} // namespace jsmc
