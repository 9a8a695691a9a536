#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flashgan/adam.hpp"
#include "flashgan/checkpoint.hpp"
#include "flashgan/hetgraph.hpp"
#include "flashgan/jsonutil.hpp"
#include "flashgan/metrics.hpp"
#include "flashgan/nn.hpp"

namespace flashgan {

struct ClassifierConfig {
    int hidden = 64;
    int embed = 32; // relgnn output width, ahead of the class head
    int layers = 2;
    int epochs = 200;
    uint64_t seed = 0;
    AdamConfig adam{0.01, 0.9, 0.999, 1e-8};
    std::string selection_metric = "auc_prc"; // snapshot criterion on the validation split
    std::map<int, double> class_weights;      // empty = unweighted loss

    void validate() const {
        if (hidden < 1 || embed < 1) throw ConfigError("classifier: dims must be positive");
        if (layers < 1) throw ConfigError("classifier: layers must be >= 1");
        if (epochs < 0) throw ConfigError("classifier: epochs must be >= 0");
        if (selection_metric != "auc_prc" && selection_metric != "auc_roc")
            throw ConfigError("classifier: unknown selection metric '" + selection_metric + "'");
    }
};

inline json classifier_config_to_json(const ClassifierConfig& c) {
    json w = json::object();
    for (const auto& [cls, v] : c.class_weights) w[std::to_string(cls)] = v;
    return json{{"hidden", c.hidden},       {"embed", c.embed},
                {"layers", c.layers},       {"epochs", c.epochs},
                {"seed", c.seed},           {"adam", adam_to_json(c.adam)},
                {"selection_metric", c.selection_metric}, {"class_weights", w}};
}

inline ClassifierConfig classifier_config_from_json(const json& j, const std::string& ctx) {
    JsonCursor c(j, ctx);
    ClassifierConfig cfg;
    cfg.hidden = static_cast<int>(c.integer("hidden", cfg.hidden));
    cfg.embed = static_cast<int>(c.integer("embed", cfg.embed));
    cfg.layers = static_cast<int>(c.integer("layers", cfg.layers));
    cfg.epochs = static_cast<int>(c.integer("epochs", cfg.epochs));
    cfg.seed = c.u64("seed", cfg.seed);
    if (c.has("adam")) cfg.adam = adam_from_json(c.sub("adam"), ctx + ".adam", cfg.adam);
    cfg.selection_metric = c.str("selection_metric", cfg.selection_metric);
    if (c.has("class_weights")) {
        const json w = c.sub("class_weights");
        if (!w.is_object()) throw ConfigError(ctx + ".class_weights: expected an object");
        for (const auto& [key, val] : w.items())
            cfg.class_weights[static_cast<int>(parse_long(key, ctx + ".class_weights"))] = val.get<double>();
    }
    c.done();
    cfg.validate();
    return cfg;
}

struct ClassifierModel {
    Schema schema;
    int classified_type = -1;
    int n_classes = 0;
    int positive_class = -1;
    ClassifierConfig cfg;
    ParamStore params;

    RelGnnSpec gnn_spec() const {
        RelGnnSpec s;
        for (const auto& nt : schema.node_types) s.in_dims.push_back(nt.feature_dim);
        s.hidden = cfg.hidden;
        s.out = cfg.embed;
        s.layers = cfg.layers;
        return s;
    }
};

struct EpochTrace {
    int epoch = 0;
    double train_loss = 0.0;
    double val_metric = 0.0;
    bool selected = false;
};

namespace detail {

inline int label_class_count(const HeteroGraph& g) {
    int n = 0;
    for (int l : g.nodes[static_cast<size_t>(g.classified_type)].labels)
        if (l >= 0) n = std::max(n, l + 1);
    return n;
}

// Node states of the classified type through the relational stack, the
// activation, and the class head.
inline ValueId classifier_logits(Tape& t, const ClassifierModel& m, const GraphView& view, bool frozen) {
    const auto H = relgnn_forward(t, m.params, "gnn", m.schema, m.gnn_spec(), view, frozen);
    const ValueId act = t.leaky_relu(H[static_cast<size_t>(m.classified_type)], kLeakySlope);
    const ValueId W = frozen ? t.constant(m.params.get("head.W")) : t.param(m.params, "head.W");
    const ValueId b = frozen ? t.constant(m.params.get("head.b")) : t.param(m.params, "head.b");
    return t.add_row(t.matmul(act, W), b);
}

inline std::vector<double> scores_from_logits(Tape& t, ValueId logits, const std::vector<int>& ids,
                                              int positive_class) {
    const Matrix probs = t.value(t.softmax_rows(t.gather_rows(logits, ids)));
    std::vector<double> out(ids.size());
    for (size_t i = 0; i < ids.size(); ++i) out[i] = probs(static_cast<int>(i), positive_class);
    return out;
}

} // namespace detail

inline void check_schema_compatible(const Schema& a, const Schema& b, const std::string& what) {
    if (schema_to_json(a) != schema_to_json(b)) throw SchemaError(what + ": schema mismatch");
}

// Minority-class probability per requested node, from a full-graph forward.
inline std::vector<double> predict_scores(const ClassifierModel& m, const HeteroGraph& g,
                                          const std::vector<int>& ids) {
    check_schema_compatible(m.schema, g.schema, "predict");
    Tape t;
    const GraphView view = graph_view(t, g);
    const ValueId logits = detail::classifier_logits(t, m, view, /*frozen=*/true);
    return detail::scores_from_logits(t, logits, ids, m.positive_class);
}

inline std::vector<int> split_ids(const HeteroGraph& g, Split s) {
    const auto& nd = g.nodes[static_cast<size_t>(g.classified_type)];
    std::vector<int> ids;
    for (int i = 0; i < nd.count(); ++i)
        if (nd.split[static_cast<size_t>(i)] == s) ids.push_back(i);
    return ids;
}

inline std::vector<int> split_labels(const HeteroGraph& g, const std::vector<int>& ids) {
    const auto& nd = g.nodes[static_cast<size_t>(g.classified_type)];
    std::vector<int> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(nd.labels[static_cast<size_t>(i)] == g.positive_class ? 1 : 0);
    return out;
}

struct TrainedClassifier {
    ClassifierModel model;
    std::vector<EpochTrace> trace;
    int selected_epoch = 0;
};

// Full-batch training with class-weighted softmax cross-entropy on the
// training nodes; the returned parameters are the snapshot with the best
// validation metric (ties keep the earlier epoch).
inline TrainedClassifier train_classifier(const HeteroGraph& g, const ClassifierConfig& cfg) {
    cfg.validate();
    const auto train_ids = split_ids(g, Split::train);
    const auto val_ids = split_ids(g, Split::val);
    if (train_ids.empty() || val_ids.empty())
        throw DomainError("classifier: training and validation splits must both be present");

    TrainedClassifier out;
    ClassifierModel& m = out.model;
    m.schema = g.schema;
    m.classified_type = g.classified_type;
    m.n_classes = detail::label_class_count(g);
    m.positive_class = g.positive_class;
    m.cfg = cfg;
    if (m.n_classes < 2) throw DomainError("classifier: need at least two classes");
    register_relgnn(m.params, "gnn", m.schema, m.gnn_spec());
    m.params.def("head.W", cfg.embed, m.n_classes, Init::kaiming);
    m.params.def("head.b", 1, m.n_classes, Init::zero);
    m.params.init_params(cfg.seed);

    const auto& nd = g.nodes[static_cast<size_t>(g.classified_type)];
    std::vector<int> train_labels;
    Matrix w_col(static_cast<int>(train_ids.size()), 1, 1.0);
    for (size_t i = 0; i < train_ids.size(); ++i) {
        const int y = nd.labels[static_cast<size_t>(train_ids[i])];
        if (y < 0) throw DomainError("classifier: unlabeled node in training split");
        train_labels.push_back(y);
        if (!cfg.class_weights.empty()) {
            const auto it = cfg.class_weights.find(y);
            if (it == cfg.class_weights.end())
                throw ConfigError("classifier: no class weight for label " + std::to_string(y));
            w_col(static_cast<int>(i), 0) = it->second;
        }
    }
    const auto val_labels = split_labels(g, val_ids);

    AdamState adam(cfg.adam, m.params, m.params.names());
    auto val_metric = [&]() {
        const auto scores = predict_scores(m, g, val_ids);
        return cfg.selection_metric == "auc_prc" ? auc_prc(scores, val_labels) : auc_roc(scores, val_labels);
    };

    std::vector<std::pair<std::string, Matrix>> best = snapshot_params(m.params);
    double best_metric = cfg.epochs > 0 ? -1.0 : 0.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Tape t;
        const GraphView view = graph_view(t, g);
        const ValueId logits = detail::classifier_logits(t, m, view, /*frozen=*/false);
        const ValueId picked =
            t.pick_per_row(t.log_softmax_rows(t.gather_rows(logits, train_ids)), train_labels);
        const ValueId loss = t.affine(t.mean_all(t.mul(t.constant(w_col), picked)), -1.0, 0.0);
        GradStore grads;
        t.backward(loss, grads);
        adam.step(m.params, grads);

        EpochTrace row;
        row.epoch = epoch;
        row.train_loss = t.scalar(loss);
        row.val_metric = val_metric();
        if (row.val_metric > best_metric) {
            best_metric = row.val_metric;
            best = snapshot_params(m.params);
            out.selected_epoch = epoch;
            row.selected = true;
        }
        out.trace.push_back(row);
    }
    for (const auto& [name, val] : best) m.params.get(name) = val;
    return out;
}

} // namespace flashgan
