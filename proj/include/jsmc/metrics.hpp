#pragma once

// External clustering validation: NMI, ARI, ACC (best one-to-one matching)
// and purity, all derived from the predicted x true contingency table.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "jsmc/dataset.hpp"
#include "jsmc/error.hpp"

namespace jsmc {

/// counts(i, j) = number of instances in predicted cluster i and true class j.
struct ContingencyTable {
    std::vector<std::vector<long>> counts;
    long n = 0;

    size_t clusters() const { return counts.size(); }
    size_t classes() const { return counts.empty() ? 0 : counts.front().size(); }

    std::vector<long> cluster_sizes() const {
        std::vector<long> s(clusters(), 0);
        for (size_t i = 0; i < clusters(); ++i)
            for (long c : counts[i]) s[i] += c;
        return s;
    }
    std::vector<long> class_sizes() const {
        std::vector<long> s(classes(), 0);
        for (const auto& row : counts)
            for (size_t j = 0; j < row.size(); ++j) s[j] += row[j];
        return s;
    }
};

inline ContingencyTable contingency(const Labels& pred, const Labels& truth) {
    if (pred.size() != truth.size())
        throw InputError("metrics: label vectors differ in length (" + std::to_string(pred.size()) +
                         " vs " + std::to_string(truth.size()) + ")");
    const Labels p = normalize_labels(pred);
    const Labels t = normalize_labels(truth);
    const int kp = p.empty() ? 0 : *std::max_element(p.begin(), p.end()) + 1;
    const int kt = t.empty() ? 0 : *std::max_element(t.begin(), t.end()) + 1;
    ContingencyTable table;
    table.counts.assign(static_cast<size_t>(kp), std::vector<long>(static_cast<size_t>(kt), 0));
    for (size_t i = 0; i < p.size(); ++i) ++table.counts[p[i]][t[i]];
    table.n = static_cast<long>(p.size());
    return table;
}

enum class NmiNormalization { sqrt, arithmetic, max, min };

namespace detail {

inline double entropy(const std::vector<long>& sizes, long n) {
    double h = 0.0;
    for (long s : sizes)
        if (s > 0) {
            const double p = static_cast<double>(s) / n;
            h -= p * std::log(p);
        }
    return h;
}

inline double comb2(long x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

} // namespace detail

inline double mutual_information(const ContingencyTable& t) {
    if (t.n == 0) return 0.0;
    const auto a = t.cluster_sizes();
    const auto b = t.class_sizes();
    const double n = static_cast<double>(t.n);
    double mi = 0.0;
    for (size_t i = 0; i < t.clusters(); ++i)
        for (size_t j = 0; j < t.classes(); ++j) {
            const long c = t.counts[i][j];
            if (c == 0) continue;
            mi += (c / n) * std::log(c * n / (static_cast<double>(a[i]) * b[j]));
        }
    return std::max(0.0, mi);
}

/// Normalized mutual information; 0 when either partition has zero entropy.
inline double nmi(const Labels& pred, const Labels& truth,
                  NmiNormalization norm = NmiNormalization::sqrt) {
    const ContingencyTable t = contingency(pred, truth);
    const double hp = detail::entropy(t.cluster_sizes(), t.n);
    const double ht = detail::entropy(t.class_sizes(), t.n);
    if (hp <= 0.0 || ht <= 0.0) return 0.0;
    double denom = 0.0;
    switch (norm) {
        case NmiNormalization::sqrt: denom = std::sqrt(hp * ht); break;
        case NmiNormalization::arithmetic: denom = 0.5 * (hp + ht); break;
        case NmiNormalization::max: denom = std::max(hp, ht); break;
        case NmiNormalization::min: denom = std::min(hp, ht); break;
    }
    return std::clamp(mutual_information(t) / denom, 0.0, 1.0);
}

/// Adjusted Rand index. Degenerate inputs where the expected and maximum
/// index coincide (e.g. both partitions a single cluster) score 1.
inline double ari(const Labels& pred, const Labels& truth) {
    const ContingencyTable t = contingency(pred, truth);
    double sum_cells = 0.0;
    for (const auto& row : t.counts)
        for (long c : row) sum_cells += detail::comb2(c);
    double sum_a = 0.0, sum_b = 0.0;
    for (long s : t.cluster_sizes()) sum_a += detail::comb2(s);
    for (long s : t.class_sizes()) sum_b += detail::comb2(s);
    const double total = detail::comb2(t.n);
    if (total == 0.0) return 1.0;
    const double expected = sum_a * sum_b / total;
    const double max_index = 0.5 * (sum_a + sum_b);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (sum_cells - expected) / denom;
}

/// Minimum-cost perfect assignment on a square cost matrix (Kuhn-Munkres with
/// potentials). Returns assignment[row] = column.
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) assignment[p[j] - 1] = j - 1;
    return assignment;
}

/// Fraction of instances correctly labeled under the best one-to-one
/// cluster-to-class matching.
inline double acc(const Labels& pred, const Labels& truth) {
    const ContingencyTable t = contingency(pred, truth);
    if (t.n == 0) return 0.0;
    const size_t k = std::max(t.clusters(), t.classes());
    long top = 0;
    for (const auto& row : t.counts)
        for (long c : row) top = std::max(top, c);
    std::vector<std::vector<double>> cost(k, std::vector<double>(k, static_cast<double>(top)));
    for (size_t i = 0; i < t.clusters(); ++i)
        for (size_t j = 0; j < t.classes(); ++j)
            cost[i][j] = static_cast<double>(top - t.counts[i][j]);
    const std::vector<int> match = hungarian(cost);
    long correct = 0;
    for (size_t i = 0; i < t.clusters(); ++i)
        if (static_cast<size_t>(match[i]) < t.classes()) correct += t.counts[i][match[i]];
    return static_cast<double>(correct) / t.n;
}

inline double purity(const Labels& pred, const Labels& truth) {
    const ContingencyTable t = contingency(pred, truth);
    if (t.n == 0) return 0.0;
    long total = 0;
    for (const auto& row : t.counts) total += *std::max_element(row.begin(), row.end());
    return static_cast<double>(total) / t.n;
}

struct Metrics {
    double nmi = 0.0;
    double ari = 0.0;
    double acc = 0.0;
    double pur = 0.0;
};

inline Metrics evaluate(const Labels& pred, const Labels& truth,
                        NmiNormalization norm = NmiNormalization::sqrt) {
    return Metrics{jsmc::nmi(pred, truth, norm), jsmc::ari(pred, truth), jsmc::acc(pred, truth),
                   jsmc::purity(pred, truth)};
}

} // namespace jsmc
