#pragma once

#include <string>
#include <vector>

#include "flashgan/hetgraph.hpp"
#include "flashgan/tape.hpp"

namespace flashgan {

// Hidden activations are LeakyReLU with this slope; final layers are linear.
inline constexpr double kLeakySlope = 0.2;

struct MlpSpec {
    int in = 0;
    int hidden = 0;
    int out = 0;
    int layers = 1; // number of linear layers

    std::vector<int> dims() const {
        std::vector<int> d(static_cast<size_t>(layers) + 1, hidden);
        d.front() = in;
        d.back() = out;
        return d;
    }
};

inline void register_mlp(ParamStore& ps, const std::string& prefix, const MlpSpec& spec) {
    if (spec.layers < 1) throw ContractError("mlp '" + prefix + "': needs at least one layer");
    const auto d = spec.dims();
    for (int l = 0; l < spec.layers; ++l) {
        const std::string base = prefix + ".l" + std::to_string(l);
        ps.def(base + ".W", d[static_cast<size_t>(l)], d[static_cast<size_t>(l) + 1], Init::kaiming);
        ps.def(base + ".b", 1, d[static_cast<size_t>(l) + 1], Init::zero);
    }
}

// frozen = record weights as constants so no gradient reaches them.
inline ValueId mlp_forward(Tape& t, const ParamStore& ps, const std::string& prefix, const MlpSpec& spec,
                           ValueId x, bool frozen = false) {
    if (t.value(x).cols != spec.in)
        throw DimensionError("mlp '" + prefix + "': input has " + std::to_string(t.value(x).cols) +
                             " cols, spec says " + std::to_string(spec.in));
    ValueId h = x;
    for (int l = 0; l < spec.layers; ++l) {
        const std::string base = prefix + ".l" + std::to_string(l);
        const ValueId W = frozen ? t.constant(ps.get(base + ".W")) : t.param(ps, base + ".W");
        const ValueId b = frozen ? t.constant(ps.get(base + ".b")) : t.param(ps, base + ".b");
        h = t.add_row(t.matmul(h, W), b);
        if (l + 1 < spec.layers) h = t.leaky_relu(h, kLeakySlope);
    }
    return h;
}

// Message-passing relations: every declared edge type, plus a derived reverse
// ("<name>_rev") for directed types so destination-side nodes receive
// messages. Derived relations exist for propagation only and are never
// scored or stored.
struct RelationSpec {
    std::string name;
    int edge_type; // index into schema.edge_types
    int src_type;
    int dst_type;
    bool reversed;
};

inline std::vector<RelationSpec> message_relations(const Schema& schema) {
    std::vector<RelationSpec> out;
    for (size_t et = 0; et < schema.edge_types.size(); ++et) {
        const auto& spec = schema.edge_types[et];
        out.push_back({spec.name, static_cast<int>(et), spec.src_type, spec.dst_type, false});
        if (!spec.undirected)
            out.push_back({spec.name + "_rev", static_cast<int>(et), spec.dst_type, spec.src_type, true});
    }
    return out;
}

// Node sets + taped per-type feature slots + local edge lists per relation,
// in message_relations order. Built from a full graph, a subgraph, or an
// augmented subgraph; the GNN below only sees this shape.
struct GraphView {
    std::vector<int> n_nodes;                                   // per node type
    std::vector<ValueId> features;                              // per node type
    std::vector<std::vector<std::pair<int, int>>> rel_edges;    // per relation
};

struct RelGnnSpec {
    std::vector<int> in_dims; // per node type
    int hidden = 64;
    int out = 32;
    int layers = 2;
    // Layer-normalize every layer's output rows (no learned affine terms, so
    // the parameter set is unchanged). Keeps hidden states at unit scale,
    // which an adversarial consumer needs: without it, a generator that feeds
    // this network can win by inflating magnitudes without bound.
    bool layernorm = false;

    int layer_out(int l) const { return l + 1 < layers ? hidden : out; }
    int layer_in(int l, int type) const {
        return l == 0 ? in_dims[static_cast<size_t>(type)] : layer_out(l - 1);
    }
};

inline void register_relgnn(ParamStore& ps, const std::string& prefix, const Schema& schema,
                            const RelGnnSpec& spec) {
    if (spec.layers < 1) throw ContractError("relgnn '" + prefix + "': needs at least one layer");
    const auto rels = message_relations(schema);
    for (int l = 0; l < spec.layers; ++l) {
        const std::string base = prefix + ".l" + std::to_string(l);
        for (size_t t = 0; t < schema.node_types.size(); ++t)
            ps.def(base + ".self." + schema.node_types[t].name, spec.layer_in(l, static_cast<int>(t)),
                   spec.layer_out(l), Init::kaiming);
        for (const auto& r : rels)
            ps.def(base + ".rel." + r.name, spec.layer_in(l, r.src_type), spec.layer_out(l), Init::kaiming);
    }
}

// H_v <- act( W_self H_v + sum_r W_r mean_{u in N_r(v)} H_u ), one term per
// relation with dst = v's type; empty neighborhoods contribute zero. The mean
// commutes with W_r, so aggregation happens before the transform.
inline std::vector<ValueId> relgnn_forward(Tape& t, const ParamStore& ps, const std::string& prefix,
                                           const Schema& schema, const RelGnnSpec& spec, const GraphView& view,
                                           bool frozen = false) {
    const auto rels = message_relations(schema);
    if (view.rel_edges.size() != rels.size())
        throw SchemaError("relgnn '" + prefix + "': view relation count mismatch");
    for (size_t ty = 0; ty < view.features.size(); ++ty)
        if (t.value(view.features[ty]).cols != spec.in_dims[ty])
            throw DimensionError("relgnn '" + prefix + "': type " + schema.node_types[ty].name + " features " +
                                 std::to_string(t.value(view.features[ty]).cols) + " cols, expected " +
                                 std::to_string(spec.in_dims[ty]));

    std::vector<ValueId> H = view.features;
    for (int l = 0; l < spec.layers; ++l) {
        const std::string base = prefix + ".l" + std::to_string(l);
        std::vector<ValueId> part(view.n_nodes.size());
        for (size_t ty = 0; ty < view.n_nodes.size(); ++ty) {
            const std::string wname = base + ".self." + schema.node_types[ty].name;
            const ValueId W = frozen ? t.constant(ps.get(wname)) : t.param(ps, wname);
            part[ty] = t.matmul(H[ty], W);
        }
        for (size_t ri = 0; ri < rels.size(); ++ri) {
            const auto& edges = view.rel_edges[ri];
            if (edges.empty()) continue; // untouched relation params get zero grads
            std::vector<int> src_idx(edges.size()), dst_idx(edges.size());
            for (size_t i = 0; i < edges.size(); ++i) {
                src_idx[i] = edges[i].first;
                dst_idx[i] = edges[i].second;
            }
            const ValueId msgs = t.gather_rows(H[static_cast<size_t>(rels[ri].src_type)], std::move(src_idx));
            const ValueId agg =
                t.scatter_mean(msgs, std::move(dst_idx), view.n_nodes[static_cast<size_t>(rels[ri].dst_type)]);
            const std::string wname = base + ".rel." + rels[ri].name;
            const ValueId W = frozen ? t.constant(ps.get(wname)) : t.param(ps, wname);
            part[static_cast<size_t>(rels[ri].dst_type)] =
                t.add(part[static_cast<size_t>(rels[ri].dst_type)], t.matmul(agg, W));
        }
        for (size_t ty = 0; ty < part.size(); ++ty) {
            H[ty] = l + 1 < spec.layers ? t.leaky_relu(part[ty], kLeakySlope) : part[ty];
            if (spec.layernorm) H[ty] = t.layernorm_rows(H[ty]);
        }
    }
    return H;
}

// View over a plain subgraph (local indices, constant features).
inline GraphView subgraph_view(Tape& t, const Subgraph& sub) {
    const Schema& schema = sub.parent->schema;
    GraphView v;
    v.n_nodes.resize(schema.node_types.size());
    v.features.resize(schema.node_types.size());
    for (size_t ty = 0; ty < schema.node_types.size(); ++ty) {
        v.n_nodes[ty] = sub.node_count(static_cast<int>(ty));
        v.features[ty] = t.constant(sub.local_features(static_cast<int>(ty)));
    }
    for (const auto& r : message_relations(schema)) {
        const auto& e = sub.edges[static_cast<size_t>(r.edge_type)];
        std::vector<std::pair<int, int>> list;
        list.reserve(e.size());
        for (const auto& pr : e)
            list.emplace_back(r.reversed ? pr.second : pr.first, r.reversed ? pr.first : pr.second);
        v.rel_edges.push_back(std::move(list));
    }
    return v;
}

// View over a full graph.
inline GraphView graph_view(Tape& t, const HeteroGraph& g) {
    GraphView v;
    v.n_nodes.resize(g.schema.node_types.size());
    v.features.resize(g.schema.node_types.size());
    for (size_t ty = 0; ty < g.schema.node_types.size(); ++ty) {
        v.n_nodes[ty] = g.node_count(static_cast<int>(ty));
        v.features[ty] = t.constant(g.nodes[ty].X);
    }
    for (const auto& r : message_relations(g.schema)) {
        const auto& e = g.edges[static_cast<size_t>(r.edge_type)].pairs;
        std::vector<std::pair<int, int>> list;
        list.reserve(e.size());
        for (const auto& pr : e)
            list.emplace_back(r.reversed ? pr.second : pr.first, r.reversed ? pr.first : pr.second);
        v.rel_edges.push_back(std::move(list));
    }
    return v;
}

} // namespace flashgan
