#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jsmc/linalg.hpp"

namespace jsmc {

using Labels = std::vector<int>;

/// V feature matrices over the same n instances. Each view is d_v x n:
/// columns are instances.
struct MultiViewDataset {
    std::vector<Matrix> views;
    std::vector<std::string> names;
    std::optional<Labels> labels;

    Eigen::Index num_instances() const { return views.empty() ? 0 : views.front().cols(); }
    size_t num_views() const { return views.size(); }
};

/// Remaps arbitrary integer labels onto 0..k-1, preserving their order.
inline Labels normalize_labels(const Labels& raw) {
    std::map<int, int> ids;
    for (int l : raw) ids.emplace(l, 0);
    int next = 0;
    for (auto& [label, id] : ids) id = next++;
    Labels out;
    out.reserve(raw.size());
    for (int l : raw) out.push_back(ids.at(l));
    return out;
}

inline int count_distinct(const Labels& labels) {
    std::vector<int> v(labels);
    std::sort(v.begin(), v.end());
    return static_cast<int>(std::unique(v.begin(), v.end()) - v.begin());
}

inline void validate(const MultiViewDataset& data) {
    if (data.views.empty()) throw InputError("dataset has no views");
    const Eigen::Index n = data.num_instances();
    if (n < 2) throw InputError("dataset needs at least 2 instances");
    for (size_t v = 0; v < data.views.size(); ++v) {
        const Matrix& x = data.views[v];
        if (x.cols() != n)
            throw InputError("view " + std::to_string(v) + " has " + std::to_string(x.cols()) +
                             " instances, expected " + std::to_string(n));
        if (x.rows() < 1) throw InputError("view " + std::to_string(v) + " has no features");
        require_finite(x, "dataset view");
    }
    if (!data.names.empty() && data.names.size() != data.views.size())
        throw InputError("dataset: view names do not match view count");
    if (data.labels && static_cast<Eigen::Index>(data.labels->size()) != n)
        throw InputError("dataset: labels length " + std::to_string(data.labels->size()) +
                         " does not match n=" + std::to_string(n));
}

} // namespace jsmc
