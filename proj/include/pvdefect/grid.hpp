#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "deepfeat.hpp"
#include "features.hpp"
#include "file_io.hpp"
#include "fusion.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "split.hpp"

namespace pvdefect {

/// The fourteen feature combinations of the result tables, in table order.
inline std::vector<std::vector<BlockKind>> default_combos() {
    using B = BlockKind;
    return {
        {B::Lbp}, {B::Gabor}, {B::Hog},
        {B::Lbp, B::Hog}, {B::Hog, B::Gabor}, {B::Lbp, B::Gabor},
        {B::Lbp, B::Hog, B::Gabor},
        {B::Deep},
        {B::Deep, B::Lbp}, {B::Deep, B::Gabor}, {B::Deep, B::Hog},
        {B::Deep, B::Lbp, B::Hog}, {B::Deep, B::Hog, B::Gabor},
        {B::Deep, B::Lbp, B::Hog, B::Gabor},
    };
}

/// Experiment grid description; relative paths resolve against `base_dir`.
struct GridConfig {
    std::string manifest;
    std::vector<std::string> features;  // PVFS files
    std::string embeddings;             // optional PVEM file providing DEEP
    std::vector<std::vector<BlockKind>> combos = default_combos();
    std::vector<Classifier> classifiers{kAllClassifiers.begin(), kAllClassifiers.end()};
    double test_frac = 0.2;
    std::uint64_t seed = 0;
    bool standardize = true;
    Averaging averaging = Averaging::Macro;
    TrainParams params;
    int jobs = 1;
    std::filesystem::path base_dir;

    void validate() const {
        require(!combos.empty(), Errc::InvalidConfig, "grid has no feature combinations");
        require(!classifiers.empty(), Errc::InvalidConfig, "grid has no classifiers");
        require(test_frac >= 0 && test_frac < 1, Errc::InvalidConfig, "test_frac must lie in [0, 1)");
        require(jobs >= 1, Errc::InvalidConfig, "jobs must be >= 1");
        params.validate();
    }

    std::filesystem::path resolve(const std::string& p) const {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    }
};

inline void svm_params_from_json(const nlohmann::json& j, SvmParams& p) {
    for (const auto& [k, v] : j.items()) {
        if (k == "C") p.C = v.get<double>();
        else if (k == "kernel") {
            const auto s = v.get<std::string>();
            require(s == "rbf" || s == "linear", Errc::InvalidConfig, "svm.kernel must be rbf or linear");
            p.kernel = s == "rbf" ? KernelType::Rbf : KernelType::Linear;
        } else if (k == "gamma") {
            if (v.is_null()) p.gamma.reset();
            else p.gamma = v.get<double>();
        } else if (k == "tol") p.tol = v.get<double>();
        else if (k == "max_iter") p.max_iter = v.get<long>();
        else throw Error(Errc::InvalidConfig, "unknown svm key '" + k + "'");
    }
}

inline void gbdt_params_from_json(const nlohmann::json& j, GbdtParams& p) {
    for (const auto& [k, v] : j.items()) {
        if (k == "rounds") p.rounds = v.get<int>();
        else if (k == "eta") p.eta = v.get<double>();
        else if (k == "max_depth") p.max_depth = v.get<int>();
        else if (k == "max_leaves") p.max_leaves = v.get<int>();
        else if (k == "min_samples_leaf") p.min_samples_leaf = v.get<int>();
        else if (k == "bins") p.bins = v.get<int>();
        else if (k == "lambda") p.lambda = v.get<double>();
        else throw Error(Errc::InvalidConfig, "unknown gbdt key '" + k + "'");
    }
}

/**
 * Keys: manifest, features (list), embeddings, combos (list of "A+B"),
 * classifiers (list), test_frac, seed, standardize, averaging, jobs,
 * svm {C, kernel, gamma, tol, max_iter},
 * gbdt {rounds, eta, max_depth, max_leaves, min_samples_leaf, bins, lambda}.
 * Unknown keys are rejected.
 */
inline GridConfig grid_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    require(j.is_object(), Errc::InvalidConfig, "grid config must be a JSON object");
    GridConfig cfg;
    cfg.base_dir = base_dir;
    try {
        for (const auto& [k, v] : j.items()) {
            if (k == "manifest") cfg.manifest = v.get<std::string>();
            else if (k == "features") cfg.features = v.get<std::vector<std::string>>();
            else if (k == "embeddings") cfg.embeddings = v.is_null() ? "" : v.get<std::string>();
            else if (k == "combos") {
                cfg.combos.clear();
                for (const auto& c : v) cfg.combos.push_back(parse_combo(c.get<std::string>()));
            } else if (k == "classifiers") {
                cfg.classifiers.clear();
                for (const auto& c : v) cfg.classifiers.push_back(parse_classifier(c.get<std::string>()));
            } else if (k == "test_frac") cfg.test_frac = v.get<double>();
            else if (k == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (k == "standardize") cfg.standardize = v.get<bool>();
            else if (k == "averaging") cfg.averaging = parse_averaging(v.get<std::string>());
            else if (k == "jobs") cfg.jobs = v.get<int>();
            else if (k == "svm") svm_params_from_json(v, cfg.params.svm);
            else if (k == "gbdt") gbdt_params_from_json(v, cfg.params.gbdt);
            else throw Error(Errc::InvalidConfig, "unknown grid config key '" + k + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("grid config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::InvalidArgument) throw Error(Errc::InvalidConfig, e.what());
        throw;
    }
    cfg.validate();
    return cfg;
}

inline GridConfig load_grid_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
    return grid_config_from_json(j, path.parent_path());
}

struct MetricsRow {
    std::vector<BlockKind> combo;
    Classifier classifier = Classifier::Svm;
    double accuracy = 0.0;  // percentages
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool failed = false;
    std::string error;
    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Everything a grid run consumes, already in memory.
struct GridInputs {
    LabeledDataset dataset;             // split tags applied
    std::vector<FeatureTable> sources;  // searched in order for each block
};

/// Loads manifest and feature sources, and splits unless the manifest already carries split tags.
inline GridInputs load_grid_inputs(const GridConfig& cfg) {
    GridInputs in;
    require(!cfg.manifest.empty(), Errc::InvalidConfig, "grid config lacks a manifest");
    auto ds = load_manifest(cfg.resolve(cfg.manifest));
    const bool tagged =
        std::any_of(ds.entries().begin(), ds.entries().end(), [](auto& e) { return e.split != Split::Unassigned; });
    in.dataset = tagged ? std::move(ds) : stratified_split(ds, cfg.test_frac, cfg.seed);
    in.dataset.check_lineage();
    for (const auto& f : cfg.features) in.sources.push_back(load_feature_store(cfg.resolve(f)));
    if (!cfg.embeddings.empty()) in.sources.push_back(table_from_embeddings(load_embeddings(cfg.resolve(cfg.embeddings))));
    return in;
}

struct CellResult {
    MetricsRow row;
    ConfusionMatrix confusion;
};

/// Trains on the train split and scores the test split for one (combo, classifier) cell.
inline CellResult run_grid_cell(const GridInputs& in, const std::vector<BlockKind>& combo, Classifier clf,
                                const GridConfig& cfg) {
    CellResult out;
    out.row.combo = canonical_blocks(combo);
    out.row.classifier = clf;
    std::vector<const FeatureTable*> src;
    for (const auto& t : in.sources) src.push_back(&t);
    auto ids_of = [&](Split s) {
        std::vector<std::string> ids;
        for (const auto* e : in.dataset.select(s)) ids.push_back(e->id);
        return ids;
    };
    auto labels_of = [&](const std::vector<std::string>& ids) {
        std::vector<ClassLabel> y;
        for (const auto& id : ids) y.push_back(in.dataset.find(id)->label);
        return y;
    };
    const auto train_ids = ids_of(Split::Train), test_ids = ids_of(Split::Test);
    require(!test_ids.empty(), Errc::EmptyDataset, "test split is empty");
    const auto train = assemble_features(train_ids, out.row.combo, src);
    const auto test = assemble_features(test_ids, out.row.combo, src);
    const auto model = train_model(clf, train.values(), labels_of(train_ids), train.signature(), cfg.params,
                                   cfg.standardize);
    const auto truth = labels_of(test_ids);
    std::vector<ClassLabel> pred;
    for (std::size_t i = 0; i < test_ids.size(); ++i) pred.push_back(predict(model, test.values().row(i)).label);
    out.confusion = confusion_matrix(truth, pred);
    const auto m = compute_metrics(out.confusion, cfg.averaging);
    out.row.accuracy = 100.0 * m.accuracy;
    out.row.precision = 100.0 * m.precision;
    out.row.recall = 100.0 * m.recall;
    out.row.f1 = 100.0 * m.f1;
    return out;
}

/**
 * Runs every combo x classifier cell, combos outermost. Cells may run
 * concurrently; rows always come back in grid order. A cell that throws is
 * reported as a failed row and the grid continues.
 */
inline std::vector<MetricsRow> run_experiment_grid(const GridInputs& in, const GridConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<std::vector<BlockKind>, Classifier>> cells;
    for (const auto& c : cfg.combos)
        for (auto k : cfg.classifiers) cells.emplace_back(c, k);
    std::vector<MetricsRow> rows(cells.size());
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
        try {
            rows[i] = run_grid_cell(in, cells[i].first, cells[i].second, cfg).row;
        } catch (const std::exception& e) {
            rows[i].combo = canonical_blocks(cells[i].first);
            rows[i].classifier = cells[i].second;
            rows[i].failed = true;
            rows[i].error = e.what();
        }
    });
    return rows;
}

inline std::vector<MetricsRow> run_experiment_grid(const GridConfig& cfg) {
    return run_experiment_grid(load_grid_inputs(cfg), cfg);
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Csv, Json, Markdown };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    if (s == "md" || s == "markdown") return ReportFormat::Markdown;
    throw Error(Errc::InvalidArgument, "unknown report format '" + std::string(s) + "'");
}

inline std::string combo_category(const std::vector<BlockKind>& combo) {
    const bool deep = std::find(combo.begin(), combo.end(), BlockKind::Deep) != combo.end();
    const std::size_t n = combo.size();
    if (!deep) {
        static const char* hc[] = {"", "Handcrafted", "Dual handcrafted", "Triple handcrafted"};
        return n < 4 ? hc[n] : "Handcrafted";
    }
    static const char* hy[] = {"", "Deep", "Dual hybrid", "Triple hybrid", "Quadruple hybrid"};
    return n < 5 ? hy[n] : "Hybrid";
}

inline std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline nlohmann::ordered_json row_to_json(const MetricsRow& r) {
    nlohmann::ordered_json j;
    j["feature_combo"] = combo_name(r.combo);
    j["classifier"] = std::string(classifier_name(r.classifier));
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    if (r.failed) {
        j["failed"] = true;
        j["error"] = r.error;
    }
    return j;
}

inline std::string render_report(const std::vector<MetricsRow>& rows, ReportFormat fmt,
                                 Averaging averaging = Averaging::Macro) {
    require(!rows.empty(), Errc::EmptyReport, "no rows to report");
    std::ostringstream out;
    switch (fmt) {
        case ReportFormat::Csv:
            out << "feature_combo,classifier,accuracy,precision,recall,f1\n";
            for (const auto& r : rows) {
                out << combo_name(r.combo) << ',' << classifier_name(r.classifier);
                if (r.failed) out << ",NA,NA,NA,NA\n";
                else
                    out << ',' << format_pct(r.accuracy) << ',' << format_pct(r.precision) << ','
                        << format_pct(r.recall) << ',' << format_pct(r.f1) << '\n';
            }
            break;
        case ReportFormat::Json: {
            nlohmann::ordered_json j;
            j["averaging"] = std::string(averaging_name(averaging));
            j["rows"] = nlohmann::ordered_json::array();
            for (const auto& r : rows) j["rows"].push_back(row_to_json(r));
            out << j.dump(2) << '\n';
            break;
        }
        case ReportFormat::Markdown: {
            std::string current;
            for (const auto& r : rows) {
                const auto cat = combo_category(r.combo);
                if (cat != current) {
                    if (!current.empty()) out << '\n';
                    current = cat;
                    out << "### " << cat << " features\n\n"
                        << "| Feature Extraction Method(s) | Classifier | Accuracy (%) | Precision (%) | Recall (%) | "
                           "F1-Score (%) |\n"
                        << "|---|---|---:|---:|---:|---:|\n";
                }
                std::string name;
                for (auto k : r.combo) name += (name.empty() ? "" : " + ") + std::string(block_name(k));
                out << "| " << name << " | " << classifier_name(r.classifier) << " | ";
                if (r.failed) out << "failed | | | |\n";
                else
                    out << format_pct(r.accuracy) << " | " << format_pct(r.precision) << " | " << format_pct(r.recall)
                        << " | " << format_pct(r.f1) << " |\n";
            }
            out << "\n_Precision, recall and F1 are " << averaging_name(averaging) << "-averaged over classes._\n";
            break;
        }
    }
    return out.str();
}

/// Inverse of the JSON report.
inline std::vector<MetricsRow> rows_from_json(const std::string& text) {
    std::vector<MetricsRow> rows;
    try {
        const auto j = nlohmann::json::parse(text);
        for (const auto& r : j.at("rows")) {
            MetricsRow row;
            row.combo = parse_combo(r.at("feature_combo").get<std::string>());
            row.classifier = parse_classifier(r.at("classifier").get<std::string>());
            row.accuracy = r.at("accuracy").get<double>();
            row.precision = r.at("precision").get<double>();
            row.recall = r.at("recall").get<double>();
            row.f1 = r.at("f1").get<double>();
            row.failed = r.value("failed", false);
            row.error = r.value("error", std::string{});
            rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Corrupt, std::string("report json: ") + e.what());
    }
    return rows;
}

}  // namespace pvdefect
