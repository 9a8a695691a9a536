#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "flashgan/augment.hpp"
#include "flashgan/classifier.hpp"
#include "flashgan/dataio.hpp"
#include "flashgan/metrics.hpp"

namespace flashgan {

struct VariantSpec {
    std::string name;
    std::filesystem::path dir;
    bool reweight = false; // apply automatic class weights to this variant's training loss
};

struct EvalOptions {
    std::vector<long> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    ClassifierConfig classifier;
    double tau = 0.5;
};

// Published full-scale reference numbers for the two real review graphs;
// recorded for context, not reproduced at this scale.
inline json reference_results() {
    return json{{"note", "published full-scale results on the real review graphs; "
                         "not reproducible at desk scale"},
                {"amazon", json{{"original_auc_prc", 0.4139}, {"flashgan_auc_prc", 0.4578}}},
                {"yelp", json{{"original_auc_prc", 0.3657}, {"flashgan_auc_prc", 0.4002}}}};
}

// One (graph, seed) cell: train the classifier, score the test split.
inline json eval_cell(const HeteroGraph& g, ClassifierConfig cfg, double tau) {
    const TrainedClassifier tc = train_classifier(g, cfg);
    const auto test_ids = split_ids(g, Split::test);
    if (test_ids.empty()) throw DomainError("evaluate: empty test split");
    const auto labels = split_labels(g, test_ids);
    const auto scores = predict_scores(tc.model, g, test_ids);
    const ThresholdMetrics tm = threshold_metrics(scores, labels, tau);
    return json{{"seed", cfg.seed},
                {"auc_prc", auc_prc(scores, labels)},
                {"auc_roc", auc_roc(scores, labels)},
                {"f_score", tm.f_score},
                {"accuracy", tm.accuracy},
                {"precision", tm.precision},
                {"recall", tm.recall},
                {"selected_epoch", tc.selected_epoch}};
}

namespace detail {

inline const char* const kMetricKeys[6] = {"auc_prc", "auc_roc", "f_score", "accuracy", "precision", "recall"};

// stats.json is written by every producer; a hand-assembled directory gets
// its statistics recomputed from the loaded graph and container files.
inline json variant_stats(const std::filesystem::path& dir, const HeteroGraph& g) {
    const auto path = dir / "stats.json";
    if (std::filesystem::exists(path)) return parse_json_file(path);
    long byte_size = static_cast<long>(std::filesystem::file_size(dir / "manifest.json"));
    for (size_t t = 0; t < g.schema.node_types.size(); ++t)
        byte_size += static_cast<long>(std::filesystem::file_size(dir / nodes_file(g.schema.node_types[t].name)));
    for (size_t et = 0; et < g.schema.edge_types.size(); ++et)
        byte_size += static_cast<long>(std::filesystem::file_size(dir / edges_file(g.schema.edge_types[et].name)));
    return graph_stats(g, byte_size);
}

} // namespace detail

// Full protocol: every variant x seed cell trains and scores independently;
// per-variant means then a size-normalized comparison against the first
// variant, which acts as the baseline.
inline json run_experiment(const std::vector<VariantSpec>& variants, const EvalOptions& opt) {
    if (variants.empty()) throw ConfigError("evaluate: need at least one graph variant");
    if (opt.seeds.empty()) throw ConfigError("evaluate: need at least one seed");
    opt.classifier.validate();

    bool partial = false;
    json jvariants = json::array();
    std::vector<double> baseline_mean_prc;
    std::vector<long> byte_sizes;

    for (const auto& v : variants) {
        const HeteroGraph g = load_graph(v.dir);
        const json stats = detail::variant_stats(v.dir, g);
        ClassifierConfig base = opt.classifier;
        if (v.reweight) base.class_weights = reweight_weights(g);

        json cells = json::array();
        std::vector<json> ok_cells;
        for (long seed : opt.seeds) {
            ClassifierConfig cfg = base;
            cfg.seed = static_cast<uint64_t>(seed);
            try {
                json cell = eval_cell(g, cfg, opt.tau);
                ok_cells.push_back(cell);
                cells.push_back(std::move(cell));
            } catch (const std::exception& e) {
                partial = true;
                cells.push_back(json{{"seed", seed}, {"error", e.what()}});
            }
        }

        json mean = json::object(), stdev = json::object();
        if (!ok_cells.empty()) {
            for (const char* key : detail::kMetricKeys) {
                double s = 0.0;
                for (const auto& c : ok_cells) s += c[key].get<double>();
                const double mu = s / static_cast<double>(ok_cells.size());
                double var = 0.0;
                for (const auto& c : ok_cells) {
                    const double d = c[key].get<double>() - mu;
                    var += d * d;
                }
                mean[key] = mu;
                stdev[key] = std::sqrt(var / static_cast<double>(ok_cells.size()));
            }
        }

        json jv{{"name", v.name},
                {"reweight", v.reweight},
                {"stats", stats},
                {"cells", std::move(cells)},
                {"mean", std::move(mean)},
                {"stdev", std::move(stdev)}};
        jvariants.push_back(std::move(jv));
        byte_sizes.push_back(stats["byte_size"].get<long>());
        baseline_mean_prc.push_back(ok_cells.empty() ? std::nan("") : jvariants.back()["mean"]["auc_prc"].get<double>());
    }

    // Size-normalized comparison against the first variant.
    for (size_t i = 0; i < variants.size(); ++i) {
        json& jv = jvariants[i];
        if (i == 0 || std::isnan(baseline_mean_prc[0]) || std::isnan(baseline_mean_prc[i])) continue;
        const double improvement = baseline_mean_prc[i] - baseline_mean_prc[0];
        const double increment =
            static_cast<double>(byte_sizes[i] - byte_sizes[0]) / static_cast<double>(byte_sizes[0]);
        jv["auc_prc_improvement"] = improvement;
        jv["size_increment_frac"] = increment;
        if (increment > 0.0) jv["improvement_per_increment"] = improvement / increment;
    }

    return json{{"classifier", classifier_config_to_json(opt.classifier)},
                {"seeds", opt.seeds},
                {"tau", opt.tau},
                {"baseline", variants[0].name},
                {"partial", partial},
                {"prc_integration", "step"},
                {"reference_results", reference_results()},
                {"variants", std::move(jvariants)}};
}

// One row per variant: the six mean metrics plus the size columns.
inline CsvTable report_csv(const json& report) {
    CsvTable t;
    t.header = {"variant",  "auc_prc",   "auc_roc",   "f_score",
                "accuracy", "precision", "recall",    "byte_size",
                "auc_prc_improvement", "size_increment_frac", "improvement_per_increment"};
    for (const auto& jv : report["variants"]) {
        std::vector<std::string> row;
        row.push_back(jv["name"].get<std::string>());
        for (const char* key : detail::kMetricKeys)
            row.push_back(jv["mean"].contains(key) ? fmt_double(jv["mean"][key].get<double>()) : std::string());
        row.push_back(std::to_string(jv["stats"]["byte_size"].get<long>()));
        for (const char* key : {"auc_prc_improvement", "size_increment_frac", "improvement_per_increment"})
            row.push_back(jv.contains(key) ? fmt_double(jv[key].get<double>()) : std::string());
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace flashgan
