#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flashgan/gan.hpp"
#include "flashgan/hetgraph.hpp"
#include "flashgan/rng.hpp"
#include "flashgan/textio.hpp"

namespace flashgan {

// Synthetic nodes needed to move the training split from m/M to alpha.
inline long plan_synthetic_count(long M, long m, double alpha) {
    if (M < 1 || m < 1) throw DomainError("augment plan: both classes must be present");
    if (alpha * static_cast<double>(M) < static_cast<double>(m))
        throw DomainError("nothing to add: target ratio " + std::to_string(alpha) +
                          " is below the current training ratio");
    return std::llround(alpha * static_cast<double>(M)) - m;
}

struct ProvenanceRow {
    int id = -1; // global id of the new node
    std::string method;
    std::vector<int> sources;
    long subgraph_id = -1; // -1 when the method has no subgraph notion
};

struct AugmentResult {
    HeteroGraph graph;
    std::vector<ProvenanceRow> provenance;
};

inline CsvTable provenance_csv(const std::vector<ProvenanceRow>& rows) {
    CsvTable t;
    t.header = {"id", "method", "sources", "subgraph"};
    for (const auto& r : rows) {
        std::string src;
        for (size_t i = 0; i < r.sources.size(); ++i) {
            if (i) src += ';';
            src += std::to_string(r.sources[i]);
        }
        t.rows.push_back({std::to_string(r.id), r.method, src, std::to_string(r.subgraph_id)});
    }
    return t;
}

inline std::vector<ProvenanceRow> provenance_from_csv(const CsvTable& t, const std::string& where) {
    if (t.header != std::vector<std::string>{"id", "method", "sources", "subgraph"})
        throw ParseError(where + ": unexpected provenance header");
    std::vector<ProvenanceRow> rows;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const std::string ctx = where + " row " + std::to_string(i);
        ProvenanceRow r;
        r.id = static_cast<int>(parse_long(t.rows[i][0], ctx));
        r.method = t.rows[i][1];
        for (const auto& part : split_csv_line(t.rows[i][2], ';'))
            if (!part.empty()) r.sources.push_back(static_cast<int>(parse_long(part, ctx)));
        r.subgraph_id = parse_long(t.rows[i][3], ctx);
        rows.push_back(std::move(r));
    }
    return rows;
}

// weight_c = N_train / (num_classes * |class_c in train|), fed to the
// classifier's cross-entropy. Larger class, smaller weight.
inline std::map<int, double> reweight_weights(const std::vector<int>& labels, const std::vector<Split>& split) {
    if (labels.size() != split.size()) throw ContractError("reweight: label/split length mismatch");
    std::map<int, long> counts;
    long n_train = 0;
    for (size_t i = 0; i < labels.size(); ++i)
        if (split[i] == Split::train && labels[i] >= 0) {
            ++counts[labels[i]];
            ++n_train;
        }
    if (counts.size() < 2) throw DomainError("reweight undefined: training split lacks a class");
    std::map<int, double> w;
    for (const auto& [c, n] : counts)
        w[c] = static_cast<double>(n_train) / (static_cast<double>(counts.size()) * static_cast<double>(n));
    return w;
}

inline std::map<int, double> reweight_weights(const HeteroGraph& g) {
    const auto& nd = g.nodes[static_cast<size_t>(g.classified_type)];
    return reweight_weights(nd.labels, nd.split);
}

namespace detail {

inline Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.cols != bottom.cols) throw DimensionError("vstack: column mismatch");
    Matrix out(top.rows + bottom.rows, top.cols);
    std::copy(top.a.begin(), top.a.end(), out.a.begin());
    std::copy(bottom.a.begin(), bottom.a.end(), out.a.begin() + static_cast<long>(top.a.size()));
    return out;
}

// Canonical stored pairs: one row per undirected edge, all rows for directed.
inline std::vector<std::pair<int, int>> canonical_pairs(const HeteroGraph& g, size_t et) {
    const bool undirected = g.schema.edge_types[et].undirected;
    std::vector<std::pair<int, int>> out;
    for (const auto& pr : g.edges[et].pairs) {
        if (undirected && pr.first > pr.second) continue;
        out.push_back(pr);
    }
    return out;
}

// New-node copies of every edge incident to src_gid, per edge type, with
// src_gid replaced by the new node (ids are assigned by the caller, so the
// pairs use a placeholder resolved at merge time via new-node row index).
struct NewEdges {
    // per edge type: (real endpoint gid, flag new-node-is-src) pairs
    std::vector<std::vector<std::pair<int, bool>>> per_type;
};

inline NewEdges copy_source_edges(const HeteroGraph& g, int src_gid) {
    const int ct = g.classified_type;
    NewEdges out;
    out.per_type.resize(g.schema.edge_types.size());
    for (size_t et = 0; et < g.schema.edge_types.size(); ++et) {
        const auto& spec = g.schema.edge_types[et];
        const auto& ed = g.edges[et];
        auto& list = out.per_type[et];
        if (spec.src_type == ct) {
            for (long a = ed.out_start[src_gid]; a < ed.out_start[static_cast<size_t>(src_gid) + 1]; ++a)
                list.emplace_back(ed.out_dst[static_cast<size_t>(a)], true);
        }
        if (spec.dst_type == ct && !spec.undirected) {
            for (long a = ed.in_start[src_gid]; a < ed.in_start[static_cast<size_t>(src_gid) + 1]; ++a) {
                const int from = ed.in_src[static_cast<size_t>(a)];
                // A same-type directed self-loop already came from the out pass.
                if (spec.src_type == ct && from == src_gid) continue;
                list.emplace_back(from, false);
            }
        }
    }
    return out;
}

// Materialize a clone's edge copies: the source endpoint becomes the new node,
// and only same-type self-loops follow it (a neighbor of another node type may
// share the source's numeric id without being the source).
inline void append_clone_edges(const HeteroGraph& g, int src, int nid,
                               std::vector<std::vector<std::pair<int, int>>>& new_edges) {
    const int ct = g.classified_type;
    const auto edges = copy_source_edges(g, src);
    for (size_t et = 0; et < edges.per_type.size(); ++et) {
        const auto& spec = g.schema.edge_types[et];
        for (const auto& [gid, new_is_src] : edges.per_type[et]) {
            const int other_type = new_is_src ? spec.dst_type : spec.src_type;
            const int other = (other_type == ct && gid == src) ? nid : gid;
            new_edges[et].push_back(new_is_src ? std::make_pair(nid, other)
                                               : std::make_pair(other, nid));
        }
    }
}

// Rebuilds the graph with new classified-type rows appended (minority label,
// training split) plus their edges; class roles carry over unchanged.
inline HeteroGraph extend_graph(const HeteroGraph& g, const Matrix& new_rows,
                                const std::vector<std::vector<std::pair<int, int>>>& new_edges) {
    const size_t ct = static_cast<size_t>(g.classified_type);
    std::vector<NodeTable> tables;
    for (size_t t = 0; t < g.schema.node_types.size(); ++t) {
        NodeTable nt;
        nt.X = g.nodes[t].X;
        nt.labels = g.nodes[t].labels;
        nt.split = g.nodes[t].split;
        if (t == ct && new_rows.rows > 0) {
            nt.X = vstack(nt.X, new_rows);
            nt.labels.resize(nt.labels.size() + static_cast<size_t>(new_rows.rows), g.positive_class);
            nt.split.resize(nt.split.size() + static_cast<size_t>(new_rows.rows), Split::train);
        }
        tables.push_back(std::move(nt));
    }
    std::vector<std::vector<std::pair<int, int>>> edge_tables;
    for (size_t et = 0; et < g.schema.edge_types.size(); ++et) {
        auto pairs = canonical_pairs(g, et);
        pairs.insert(pairs.end(), new_edges[et].begin(), new_edges[et].end());
        edge_tables.push_back(std::move(pairs));
    }
    HeteroGraph out = build_graph(g.schema, std::move(tables), std::move(edge_tables));
    out.positive_class = g.positive_class;
    out.majority_class = g.majority_class;
    return out;
}

inline std::vector<int> minority_train_ids(const HeteroGraph& g) {
    const auto& nd = g.nodes[static_cast<size_t>(g.classified_type)];
    std::vector<int> ids;
    for (int i = 0; i < nd.count(); ++i)
        if (nd.labels[static_cast<size_t>(i)] == g.positive_class && nd.split[static_cast<size_t>(i)] == Split::train)
            ids.push_back(i);
    return ids;
}

inline long train_budget(const HeteroGraph& g, double alpha) {
    const long M = class_count(g, g.majority_class, Split::train);
    const long m = class_count(g, g.positive_class, Split::train);
    return plan_synthetic_count(M, m, alpha);
}

} // namespace detail

// Duplicate uniformly drawn minority training nodes; each clone keeps its
// source's features and full edge set.
inline AugmentResult oversample(const HeteroGraph& g, double alpha, uint64_t seed) {
    const long budget = detail::train_budget(g, alpha);
    const auto ids = detail::minority_train_ids(g);
    const int base = g.node_count(g.classified_type);
    RngStream rng = RngStream::derive(seed, {fnv1a64("augment.oversample")});

    Matrix new_rows(static_cast<int>(budget), g.nodes[static_cast<size_t>(g.classified_type)].X.cols);
    std::vector<std::vector<std::pair<int, int>>> new_edges(g.schema.edge_types.size());
    std::vector<ProvenanceRow> prov;
    for (long i = 0; i < budget; ++i) {
        const int src = ids[static_cast<size_t>(rng.uniform_int(static_cast<int>(ids.size())))];
        const int nid = base + static_cast<int>(i);
        const Matrix& X = g.nodes[static_cast<size_t>(g.classified_type)].X;
        for (int j = 0; j < X.cols; ++j) new_rows(static_cast<int>(i), j) = X(src, j);
        detail::append_clone_edges(g, src, nid, new_edges);
        prov.push_back(ProvenanceRow{nid, "oversample", {src}, -1});
    }
    return AugmentResult{detail::extend_graph(g, new_rows, new_edges), std::move(prov)};
}

// Interpolate between a minority training node and one of its k_nn nearest
// minority neighbors in feature space; connections copy the source's edges.
inline AugmentResult smote(const HeteroGraph& g, double alpha, int k_nn, uint64_t seed) {
    if (k_nn < 1) throw ConfigError("smote: k_nn must be >= 1");
    const long budget = detail::train_budget(g, alpha);
    const auto ids = detail::minority_train_ids(g);
    if (ids.size() < 2) throw DomainError("smote degenerate: fewer than two minority training nodes");
    const int base = g.node_count(g.classified_type);
    const Matrix& X = g.nodes[static_cast<size_t>(g.classified_type)].X;
    RngStream rng = RngStream::derive(seed, {fnv1a64("augment.smote")});

    // Nearest minority neighbors per minority node, by squared Euclidean
    // feature distance, ties toward the smaller id.
    const int kn = std::min<int>(k_nn, static_cast<int>(ids.size()) - 1);
    std::vector<std::vector<int>> nearest(ids.size());
    for (size_t a = 0; a < ids.size(); ++a) {
        std::vector<std::pair<double, int>> d;
        for (size_t b = 0; b < ids.size(); ++b) {
            if (b == a) continue;
            double s = 0.0;
            for (int j = 0; j < X.cols; ++j) {
                const double diff = X(ids[a], j) - X(ids[b], j);
                s += diff * diff;
            }
            d.emplace_back(s, ids[b]);
        }
        std::sort(d.begin(), d.end());
        for (int t = 0; t < kn; ++t) nearest[a].push_back(d[static_cast<size_t>(t)].second);
    }

    Matrix new_rows(static_cast<int>(budget), X.cols);
    std::vector<std::vector<std::pair<int, int>>> new_edges(g.schema.edge_types.size());
    std::vector<ProvenanceRow> prov;
    for (long i = 0; i < budget; ++i) {
        const int src_pos = rng.uniform_int(static_cast<int>(ids.size()));
        const int src = ids[static_cast<size_t>(src_pos)];
        const int nb = nearest[static_cast<size_t>(src_pos)][static_cast<size_t>(rng.uniform_int(kn))];
        const double u = rng.uniform01();
        const int nid = base + static_cast<int>(i);
        for (int j = 0; j < X.cols; ++j)
            new_rows(static_cast<int>(i), j) = X(src, j) + u * (X(nb, j) - X(src, j));
        detail::append_clone_edges(g, src, nid, new_edges);
        prov.push_back(ProvenanceRow{nid, "smote", {src, nb}, -1});
    }
    return AugmentResult{detail::extend_graph(g, new_rows, new_edges), std::move(prov)};
}

// Trained-generator augmentation: sample one-hop subgraphs from the original
// graph, run the frozen generator pipeline under the final thresholds, and
// merge surviving synthetic nodes with their retained edges until the budget
// is met exactly. Overshoot in the last subgraph drops the highest synthetic
// indices. Every merged node has at least one edge by construction.
inline AugmentResult flashgan_augment(const HeteroGraph& g, const GanModel& model,
                                      const std::vector<double>& eta, double alpha, int k, uint64_t seed,
                                      long max_attempts = 0) {
    if (eta.size() != model.scored.size()) throw ConfigError("flashgan augment: threshold count mismatch");
    if (k < 1) throw ConfigError("flashgan augment: k must be >= 1");
    const long budget = detail::train_budget(g, alpha);
    if (max_attempts <= 0) max_attempts = std::max<long>(200, 50 * budget);
    const int base = g.node_count(g.classified_type);

    Matrix new_rows(static_cast<int>(budget), model.dims.gen_out);
    std::vector<std::vector<std::pair<int, int>>> new_edges(g.schema.edge_types.size());
    std::vector<ProvenanceRow> prov;

    long placed = 0;
    for (long attempt = 0; placed < budget; ++attempt) {
        if (attempt >= max_attempts)
            throw StallError("augmentation stalled: " + std::to_string(attempt) + " subgraphs yielded " +
                             std::to_string(placed) + " of " + std::to_string(budget) + " nodes");
        RngStream rng = RngStream::derive(seed, {fnv1a64("augment.flashgan"), static_cast<uint64_t>(attempt)});
        Subgraph sub = sample_one_hop(g, rng);
        AugmentedSubgraph aug =
            attach_full(model, std::move(sub), k, sample_noise(rng, k, model.dims.noise_dim));
        Tape t;
        gan_forward(t, model, aug, /*frozen_gen=*/true, /*fill_p=*/true);
        drop_edges(aug, eta);
        const auto alive = aug.survivors();
        for (int s = 0; s < aug.k && placed < budget; ++s) {
            if (!alive[static_cast<size_t>(s)]) continue;
            const int nid = base + static_cast<int>(placed);
            for (int j = 0; j < model.dims.gen_out; ++j)
                new_rows(static_cast<int>(placed), j) = aug.synth_features(s, j);
            for (const auto& set : aug.scored) {
                const auto& gids = aug.base.global_ids[static_cast<size_t>(set.real_type)];
                for (const auto& c : set.cands) {
                    if (c.synth != s || !c.retained) continue;
                    const int gid = gids[static_cast<size_t>(c.real_local)];
                    new_edges[static_cast<size_t>(set.edge_type)].push_back(
                        set.synth_is_src ? std::make_pair(nid, gid) : std::make_pair(gid, nid));
                }
            }
            prov.push_back(ProvenanceRow{nid, "flashgan", {aug.base.center_global}, attempt});
            ++placed;
        }
    }
    return AugmentResult{detail::extend_graph(g, new_rows, new_edges), std::move(prov)};
}

} // namespace flashgan
