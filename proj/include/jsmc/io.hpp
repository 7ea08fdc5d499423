#pragma once

// Dataset ingestion, synthetic data, and report persistence.
//
// CSV view files store one instance per row (features across columns); they
// are transposed on load so that in memory every view is d_v x n.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jsmc/dataset.hpp"
#include "jsmc/metrics.hpp"
#include "jsmc/optimizer.hpp"

namespace jsmc {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Reads a numeric CSV into a rows x cols matrix (file layout, untransposed).
inline Matrix read_csv(const fs::path& path, bool header = false) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (header && lineno == 1) continue;
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            const std::string tok = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
            size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (tok.empty() || used != tok.size() || !std::isfinite(value))
                throw InputError(path.string() + ":" + std::to_string(lineno) +
                                 ": non-numeric cell '" + tok + "'");
            row.push_back(value);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(rows.front().size()) + " cells, got " +
                             std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(path.string() + ": no data rows");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

inline void write_csv(const fs::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
    if (!out) throw InputError("failed writing " + path.string());
}

inline Labels read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    Labels labels;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        const std::string tok = line.substr(b, e - b + 1);
        size_t used = 0;
        int value = 0;
        try {
            value = std::stoi(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size())
            throw InputError(path.string() + ":" + std::to_string(lineno) +
                             ": label is not an integer: '" + tok + "'");
        labels.push_back(value);
    }
    return labels;
}

inline void write_labels(const fs::path& path, const Labels& labels) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (int l : labels) out << l << '\n';
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// Z-scores every feature (row) of a d x n view; constant features become 0.
inline void standardize_features(Matrix& view) {
    const double n = static_cast<double>(view.cols());
    for (Eigen::Index r = 0; r < view.rows(); ++r) {
        const double mean = view.row(r).sum() / n;
        view.row(r).array() -= mean;
        const double sd = std::sqrt(view.row(r).squaredNorm() / n);
        if (sd > 0.0) view.row(r) /= sd;
        else view.row(r).setZero();
    }
}

/// Manifest JSON:
///   {"views": [{"name": str, "path": str, "header": bool}],
///    "labels": optional path, "standardize": bool}
/// Relative paths resolve against the manifest's directory.
inline MultiViewDataset load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open manifest " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        const fs::path q(p);
        return q.is_absolute() ? q : base / q;
    };

    MultiViewDataset data;
    try {
        if (!doc.contains("views") || !doc["views"].is_array() || doc["views"].empty())
            throw InputError("manifest: 'views' must be a non-empty array");
        const bool standardize = doc.value("standardize", false);
        for (const auto& entry : doc["views"]) {
            const std::string file = entry.at("path").get<std::string>();
            const std::string name =
                entry.value("name", "view" + std::to_string(data.views.size()));
            const bool header = entry.value("header", false);
            Matrix view = read_csv(resolve(file), header).transpose();
            if (!data.views.empty() && view.cols() != data.views.front().cols())
                throw InputError("manifest: view '" + name + "' has " +
                                 std::to_string(view.cols()) + " instances, expected " +
                                 std::to_string(data.views.front().cols()));
            if (standardize) standardize_features(view);
            data.views.push_back(std::move(view));
            data.names.push_back(name);
        }
        if (doc.contains("labels") && !doc["labels"].is_null()) {
            Labels raw = read_labels(resolve(doc["labels"].get<std::string>()));
            if (static_cast<Eigen::Index>(raw.size()) != data.num_instances())
                throw InputError("manifest: labels file has " + std::to_string(raw.size()) +
                                 " entries, expected " + std::to_string(data.num_instances()));
            data.labels = normalize_labels(raw);
        }
    } catch (const json::exception& e) {
        throw InputError("manifest " + path.string() + ": " + e.what());
    }
    validate(data);
    return data;
}

/// Writes one CSV per view, an optional labels file and manifest.json into
/// `dir`. Returns the manifest path.
inline fs::path save_dataset(const MultiViewDataset& data, const fs::path& dir) {
    validate(data);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
    json doc;
    doc["views"] = json::array();
    for (size_t v = 0; v < data.views.size(); ++v) {
        const std::string name = v < data.names.size() ? data.names[v] : "view" + std::to_string(v);
        const std::string file = name + ".csv";
        write_csv(dir / file, data.views[v].transpose());
        doc["views"].push_back({{"name", name}, {"path", file}, {"header", false}});
    }
    if (data.labels) {
        write_labels(dir / "labels.txt", *data.labels);
        doc["labels"] = "labels.txt";
    }
    doc["standardize"] = false;
    const fs::path manifest = dir / "manifest.json";
    std::ofstream out(manifest);
    if (!out) throw InputError("cannot write " + manifest.string());
    out << doc.dump(2) << '\n';
    return manifest;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    int n_clusters = 3;
    int instances_per_cluster = 20;
    std::vector<int> view_dims{8, 12};
    double cluster_separation = 10.0;
    double noise_sigma = 0.5;
    double inconsistent_view_fraction = 0.0;
    std::uint64_t seed = 42;

    void validate() const {
        if (n_clusters < 1 || instances_per_cluster < 1 || view_dims.empty())
            throw InputError("synthetic: counts must be >= 1 and at least one view is needed");
        for (int d : view_dims)
            if (d < 1) throw InputError("synthetic: view dimensions must be >= 1");
        if (!(noise_sigma >= 0.0)) throw InputError("synthetic: noise_sigma must be >= 0");
        if (!(cluster_separation >= 0.0))
            throw InputError("synthetic: cluster_separation must be >= 0");
        if (!(inconsistent_view_fraction >= 0.0 && inconsistent_view_fraction <= 1.0))
            throw InputError("synthetic: inconsistent_view_fraction must lie in [0, 1]");
    }
};

/// Gaussian blobs per view. Cluster centers sit at distance
/// `cluster_separation` from each other (axis-aligned when d >= n_clusters,
/// random directions otherwise). In the last floor(fraction * V) views every
/// instance is additionally displaced halfway toward the center of a
/// randomly drawn cluster, so those views disagree with the shared grouping.
inline MultiViewDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const int k = spec.n_clusters;
    const Eigen::Index n = static_cast<Eigen::Index>(k) * spec.instances_per_cluster;
    const int num_views = static_cast<int>(spec.view_dims.size());
    const int inconsistent = static_cast<int>(std::floor(spec.inconsistent_view_fraction * num_views));

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> any_cluster(0, k - 1);

    MultiViewDataset data;
    Labels labels(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) labels[i] = static_cast<int>(i / spec.instances_per_cluster);

    const double radius = spec.cluster_separation / std::sqrt(2.0);
    for (int v = 0; v < num_views; ++v) {
        const int d = spec.view_dims[v];
        Matrix centers = Matrix::Zero(d, k);
        for (int c = 0; c < k; ++c) {
            if (d >= k) {
                centers(c, c) = radius;
            } else {
                Vector dir(d);
                for (int r = 0; r < d; ++r) dir(r) = gauss(rng);
                const double nrm = dir.norm();
                centers.col(c) = nrm > 0.0 ? Vector(dir * (radius / nrm)) : Vector::Zero(d);
            }
        }
        Matrix x(d, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            x.col(i) = centers.col(labels[i]);
            for (int r = 0; r < d; ++r) x(r, i) += spec.noise_sigma * gauss(rng);
        }
        if (v >= num_views - inconsistent) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const int other = any_cluster(rng);
                x.col(i) += 0.5 * (centers.col(other) - centers.col(labels[i]));
            }
        }
        data.views.push_back(std::move(x));
        data.names.push_back("view" + std::to_string(v));
    }
    data.labels = labels;
    return data;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ClusterReport {
    std::string name = "jsmc";
    Labels labels;
    std::optional<Metrics> metrics;
    std::vector<IterationRecord> trace;
    std::map<std::string, double> timings;
    json config = json::object();
    bool converged = false;
    std::optional<double> final_objective;
};

inline json config_to_json(const JsmcConfig& c) {
    const char* weighting = c.knn.weighting == EdgeWeighting::binary ? "binary" : "gaussian";
    const char* ties = c.knn.ties == TieRule::lower_index ? "lower_index" : "include_all";
    json drops = json::array();
    if (c.ablation.drop_inconsistency) drops.push_back("inconsistency");
    if (c.ablation.drop_smoothness) drops.push_back("smoothness");
    if (c.ablation.drop_lowrank) drops.push_back("lowrank");
    return {{"alpha", c.alpha},          {"beta", c.beta},
            {"lambda", c.lambda},        {"mu", c.mu},
            {"rho", c.rho},              {"k", c.knn.k},
            {"weighting", weighting},    {"ties", ties},
            {"max_iter", c.max_iter},    {"tol_primal", c.tol_primal},
            {"tol_objective", c.tol_objective}, {"seed", c.seed},
            {"drop", drops}};
}

inline json report_to_json(const ClusterReport& r) {
    json j;
    j["name"] = r.name;
    j["labels"] = r.labels;
    if (r.metrics)
        j["metrics"] = {{"nmi", r.metrics->nmi},
                        {"ari", r.metrics->ari},
                        {"acc", r.metrics->acc},
                        {"pur", r.metrics->pur}};
    j["trace"] = json::array();
    for (const IterationRecord& t : r.trace)
        j["trace"].push_back({{"iter", t.iter},
                              {"lagrangian", t.lagrangian},
                              {"objective", t.objective},
                              {"primal_residual", t.primal_residual}});
    j["timings"] = r.timings;
    j["config"] = r.config;
    j["converged"] = r.converged;
    if (r.final_objective) j["final_objective"] = *r.final_objective;
    return j;
}

inline ClusterReport report_from_json(const json& j) {
    ClusterReport r;
    try {
        r.name = j.value("name", "jsmc");
        r.labels = j.at("labels").get<Labels>();
        if (j.contains("metrics")) {
            const json& m = j["metrics"];
            r.metrics = Metrics{m.at("nmi").get<double>(), m.at("ari").get<double>(),
                                m.at("acc").get<double>(), m.at("pur").get<double>()};
        }
        for (const json& t : j.value("trace", json::array())) {
            IterationRecord rec;
            rec.iter = t.at("iter").get<int>();
            rec.lagrangian = t.at("lagrangian").get<double>();
            rec.objective = t.at("objective").get<double>();
            rec.primal_residual = t.at("primal_residual").get<double>();
            r.trace.push_back(rec);
        }
        r.timings = j.value("timings", std::map<std::string, double>{});
        r.config = j.value("config", json::object());
        r.converged = j.value("converged", false);
        if (j.contains("final_objective")) r.final_objective = j["final_objective"].get<double>();
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed report: ") + e.what());
    }
    return r;
}

inline void validate_report(const ClusterReport& r) {
    if (r.metrics) {
        const Metrics& m = *r.metrics;
        auto in = [](double x, double lo, double hi) { return std::isfinite(x) && x >= lo && x <= hi; };
        if (!in(m.nmi, 0, 1) || !in(m.ari, -1, 1) || !in(m.acc, 0, 1) || !in(m.pur, 0, 1))
            throw InputError("report '" + r.name + "': metric outside its valid range or NaN");
    }
    for (const IterationRecord& t : r.trace)
        if (!std::isfinite(t.lagrangian) || !std::isfinite(t.objective) ||
            !std::isfinite(t.primal_residual))
            throw InputError("report '" + r.name + "': non-finite trace entry");
}

enum class ReportFormat { json, markdown };

inline std::string fmt_metric(double x) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << 100.0 * x;
    return os.str();
}

/// One row per metric, one column per report (the layout of a results table
/// comparing methods or variants).
inline std::string reports_to_markdown(const std::vector<ClusterReport>& reports) {
    std::ostringstream os;
    os << "| Metric |";
    for (const auto& r : reports) os << ' ' << r.name << " |";
    os << "\n|---|";
    for (size_t i = 0; i < reports.size(); ++i) os << "---|";
    os << '\n';
    const char* names[] = {"NMI", "ARI", "ACC", "PUR"};
    for (int m = 0; m < 4; ++m) {
        os << "| " << names[m] << " |";
        for (const auto& r : reports) {
            if (!r.metrics) {
                os << " - |";
                continue;
            }
            const double vals[] = {r.metrics->nmi, r.metrics->ari, r.metrics->acc, r.metrics->pur};
            os << ' ' << fmt_metric(vals[m]) << " |";
        }
        os << '\n';
    }
    return os.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("failed writing " + path.string());
}

inline void write_report(const ClusterReport& r, const fs::path& path,
                         ReportFormat format = ReportFormat::json) {
    validate_report(r);
    if (format == ReportFormat::json) write_text(path, report_to_json(r).dump(2) + "\n");
    else write_text(path, reports_to_markdown({r}));
}

inline ClusterReport read_report(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return report_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw InputError("report " + path.string() + " is not valid JSON: " + e.what());
    }
}

} // namespace jsmc
