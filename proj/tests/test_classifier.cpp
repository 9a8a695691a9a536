#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "flashgan/classifier.hpp"
#include "flashgan/dataio.hpp"

namespace fg = flashgan;

namespace {

fg::SynthConfig planted_cfg(double mu, uint64_t seed) {
    fg::SynthConfig cfg;
    cfg.n_users = 200;
    cfg.n_products = 20;
    cfg.fraud_fraction = 0.2;
    cfg.user_dim = 8;
    cfg.product_dim = 4;
    cfg.mu = mu;
    cfg.p_uu_intra = 0.05;
    cfg.p_uu_inter = 0.01;
    cfg.up_rate_minority = 2.0;
    cfg.up_rate_majority = 2.0;
    cfg.minority_product_frac = 0.3;
    cfg.p_pp = 0.05;
    cfg.seed = seed;
    return cfg;
}

fg::ClassifierConfig quick_cfg(int epochs, uint64_t seed) {
    fg::ClassifierConfig cfg;
    cfg.hidden = 16;
    cfg.embed = 8;
    cfg.layers = 2;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return cfg;
}

bool params_identical(const fg::ParamStore& a, const fg::ParamStore& b) {
    auto na = a.names(), nb = b.names();
    if (na != nb) return false;
    for (const auto& n : na)
        if (a.get(n).a != b.get(n).a) return false;
    return true;
}

} // namespace

TEST_CASE("well-separated planted classes are learned almost perfectly") {
    fg::HeteroGraph g = fg::generate(planted_cfg(4.0, 11));
    fg::TrainedClassifier tc = fg::train_classifier(g, quick_cfg(150, 1));

    const auto test_ids = fg::split_ids(g, fg::Split::test);
    const auto labels = fg::split_labels(g, test_ids);
    const auto scores = fg::predict_scores(tc.model, g, test_ids);
    const auto m = fg::threshold_metrics(scores, labels, 0.5);
    REQUIRE(m.accuracy > 0.95);
    REQUIRE(fg::auc_roc(scores, labels) > 0.95);
    REQUIRE(static_cast<int>(tc.trace.size()) == 150);
}

TEST_CASE("unit class weights reproduce the unweighted run bit for bit") {
    fg::HeteroGraph g = fg::generate(planted_cfg(1.0, 12));

    fg::ClassifierConfig plain = quick_cfg(20, 5);
    fg::ClassifierConfig unit = plain;
    unit.class_weights = {{0, 1.0}, {1, 1.0}};

    fg::TrainedClassifier a = fg::train_classifier(g, plain);
    fg::TrainedClassifier b = fg::train_classifier(g, unit);
    REQUIRE(params_identical(a.model.params, b.model.params));
    REQUIRE(a.selected_epoch == b.selected_epoch);
    for (size_t i = 0; i < a.trace.size(); ++i) {
        REQUIRE(a.trace[i].train_loss == b.trace[i].train_loss);
        REQUIRE(a.trace[i].val_metric == b.trace[i].val_metric);
    }
}

TEST_CASE("training is deterministic per seed and sensitive to it") {
    fg::HeteroGraph g = fg::generate(planted_cfg(1.0, 13));
    fg::TrainedClassifier a = fg::train_classifier(g, quick_cfg(10, 7));
    fg::TrainedClassifier b = fg::train_classifier(g, quick_cfg(10, 7));
    fg::TrainedClassifier c = fg::train_classifier(g, quick_cfg(10, 8));
    REQUIRE(params_identical(a.model.params, b.model.params));
    REQUIRE(!params_identical(a.model.params, c.model.params));
}

TEST_CASE("an all-zero model scores every node at exactly one half") {
    fg::HeteroGraph g = fg::generate(planted_cfg(1.0, 14));
    fg::TrainedClassifier tc = fg::train_classifier(g, quick_cfg(0, 3));
    REQUIRE(tc.trace.empty());
    REQUIRE(tc.selected_epoch == 0);

    for (const auto& name : tc.model.params.names()) {
        fg::Matrix& w = tc.model.params.get(name);
        w = fg::Matrix(w.rows, w.cols);
    }
    std::vector<int> ids(static_cast<size_t>(g.node_count(0)));
    std::iota(ids.begin(), ids.end(), 0);
    for (double s : fg::predict_scores(tc.model, g, ids)) REQUIRE(s == 0.5);
}

TEST_CASE("class probabilities are complementary") {
    fg::HeteroGraph g = fg::generate(planted_cfg(1.0, 15));
    fg::TrainedClassifier tc = fg::train_classifier(g, quick_cfg(15, 4));

    std::vector<int> ids = fg::split_ids(g, fg::Split::test);
    const auto pos = fg::predict_scores(tc.model, g, ids);
    fg::ClassifierModel other = tc.model;
    other.positive_class = tc.model.positive_class == 0 ? 1 : 0;
    const auto neg = fg::predict_scores(other, g, ids);
    for (size_t i = 0; i < ids.size(); ++i) {
        REQUIRE(pos[i] >= 0.0);
        REQUIRE(pos[i] <= 1.0);
        REQUIRE(pos[i] + neg[i] == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("predictions follow nodes under relabeling") {
    fg::HeteroGraph g = fg::generate(planted_cfg(1.0, 16));
    fg::TrainedClassifier tc = fg::train_classifier(g, quick_cfg(15, 9));

    // Reverse the user table and remap user endpoints accordingly.
    const int n = g.node_count(0);
    auto perm = [&](int i) { return n - 1 - i; };
    fg::NodeTable users;
    users.X = fg::Matrix(n, g.nodes[0].X.cols);
    users.labels.resize(static_cast<size_t>(n));
    users.split.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < users.X.cols; ++j) users.X(perm(i), j) = g.nodes[0].X(i, j);
        users.labels[static_cast<size_t>(perm(i))] = g.nodes[0].labels[static_cast<size_t>(i)];
        users.split[static_cast<size_t>(perm(i))] = g.nodes[0].split[static_cast<size_t>(i)];
    }
    fg::NodeTable products{g.nodes[1].X, g.nodes[1].labels, g.nodes[1].split};

    std::vector<std::vector<std::pair<int, int>>> edges(g.schema.edge_types.size());
    for (size_t et = 0; et < g.schema.edge_types.size(); ++et) {
        const auto& spec = g.schema.edge_types[et];
        for (const auto& [u, v] : g.edges[et].pairs) {
            if (spec.undirected && u > v) continue;
            const int a = spec.src_type == 0 ? perm(u) : u;
            const int b = spec.dst_type == 0 ? perm(v) : v;
            edges[et].emplace_back(a, b);
        }
    }
    fg::HeteroGraph gp = fg::build_graph(g.schema, {users, products}, edges);

    std::vector<int> ids(static_cast<size_t>(n)), pids(static_cast<size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = 0; i < n; ++i) pids[static_cast<size_t>(i)] = perm(i);
    const auto base = fg::predict_scores(tc.model, g, ids);
    const auto moved = fg::predict_scores(tc.model, gp, pids);
    for (int i = 0; i < n; ++i)
        REQUIRE(moved[static_cast<size_t>(i)] == Catch::Approx(base[static_cast<size_t>(i)]).margin(1e-9));
}

TEST_CASE("the returned snapshot is the first validation-metric maximum") {
    fg::HeteroGraph g = fg::generate(planted_cfg(1.0, 17));
    fg::ClassifierConfig cfg = quick_cfg(25, 6);
    fg::TrainedClassifier tc = fg::train_classifier(g, cfg);

    double best = -1.0;
    int first_argmax = 0;
    for (const auto& row : tc.trace) {
        if (row.val_metric > best) {
            best = row.val_metric;
            first_argmax = row.epoch;
        }
        REQUIRE(row.selected == (row.epoch == first_argmax && best == row.val_metric &&
                                 row.epoch == first_argmax));
    }
    REQUIRE(tc.selected_epoch == first_argmax);

    // The stored parameters reproduce that exact validation score.
    const auto val_ids = fg::split_ids(g, fg::Split::val);
    const auto val_labels = fg::split_labels(g, val_ids);
    const auto scores = fg::predict_scores(tc.model, g, val_ids);
    REQUIRE(fg::auc_prc(scores, val_labels) == best);
}

TEST_CASE("degenerate inputs are rejected") {
    fg::SynthConfig sc = planted_cfg(1.0, 18);
    sc.split_train = 0.85;
    sc.split_val = 0.0;
    sc.split_test = 0.15;
    fg::HeteroGraph no_val = fg::generate(sc);
    REQUIRE_THROWS_AS(fg::train_classifier(no_val, quick_cfg(5, 1)), fg::DomainError);

    fg::HeteroGraph g = fg::generate(planted_cfg(1.0, 19));
    fg::ClassifierConfig missing_weight = quick_cfg(5, 1);
    missing_weight.class_weights = {{1, 2.0}};  // no weight for the majority label
    REQUIRE_THROWS_AS(fg::train_classifier(g, missing_weight), fg::ConfigError);

    fg::ClassifierConfig bad = quick_cfg(5, 1);
    bad.selection_metric = "f1";
    REQUIRE_THROWS_AS(fg::train_classifier(g, bad), fg::ConfigError);
    bad = quick_cfg(5, 1);
    bad.hidden = 0;
    REQUIRE_THROWS_AS(fg::train_classifier(g, bad), fg::ConfigError);
}

TEST_CASE("classifier configuration survives the JSON round trip") {
    fg::ClassifierConfig cfg;
    cfg.hidden = 48;
    cfg.embed = 24;
    cfg.layers = 3;
    cfg.epochs = 77;
    cfg.seed = 123456789ull;
    cfg.adam = {0.005, 0.85, 0.95, 1e-9};
    cfg.selection_metric = "auc_roc";
    cfg.class_weights = {{0, 0.6}, {1, 3.5}};

    fg::ClassifierConfig back =
        fg::classifier_config_from_json(fg::classifier_config_to_json(cfg), "test");
    REQUIRE(back.hidden == cfg.hidden);
    REQUIRE(back.embed == cfg.embed);
    REQUIRE(back.layers == cfg.layers);
    REQUIRE(back.epochs == cfg.epochs);
    REQUIRE(back.seed == cfg.seed);
    REQUIRE(back.adam.lr == cfg.adam.lr);
    REQUIRE(back.adam.beta2 == cfg.adam.beta2);
    REQUIRE(back.selection_metric == cfg.selection_metric);
    REQUIRE(back.class_weights == cfg.class_weights);

    fg::json j = fg::classifier_config_to_json(cfg);
    j["typo_key"] = 1;
    REQUIRE_THROWS_AS(fg::classifier_config_from_json(j, "test"), fg::ConfigError);
}
