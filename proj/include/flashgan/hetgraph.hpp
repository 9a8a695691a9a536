#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flashgan/error.hpp"
#include "flashgan/matrix.hpp"
#include "flashgan/rng.hpp"

namespace flashgan {

enum class Split : int { none = -1, train = 0, val = 1, test = 2 };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        default: return "none";
    }
}

inline Split split_from_name(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "none" || s.empty()) return Split::none;
    throw ParseError("unknown split tag '" + s + "'");
}

struct NodeTypeSpec {
    std::string name;
    int feature_dim = 0;
    bool labeled = false;
};

struct EdgeTypeSpec {
    std::string name;
    int src_type = -1;
    int dst_type = -1;
    bool undirected = false;
};

struct Schema {
    std::vector<NodeTypeSpec> node_types;
    std::vector<EdgeTypeSpec> edge_types;

    int node_type_index(const std::string& name) const {
        for (size_t i = 0; i < node_types.size(); ++i)
            if (node_types[i].name == name) return static_cast<int>(i);
        throw SchemaError("unknown node type '" + name + "'");
    }

    int edge_type_index(const std::string& name) const {
        for (size_t i = 0; i < edge_types.size(); ++i)
            if (edge_types[i].name == name) return static_cast<int>(i);
        throw SchemaError("unknown edge type '" + name + "'");
    }

    void validate() const {
        for (size_t i = 0; i < node_types.size(); ++i) {
            if (node_types[i].feature_dim <= 0)
                throw SchemaError("node type '" + node_types[i].name + "': feature dim must be positive");
            for (size_t j = i + 1; j < node_types.size(); ++j)
                if (node_types[i].name == node_types[j].name)
                    throw SchemaError("duplicate node type name '" + node_types[i].name + "'");
        }
        for (size_t i = 0; i < edge_types.size(); ++i) {
            const auto& et = edge_types[i];
            if (et.src_type < 0 || et.src_type >= static_cast<int>(node_types.size()) ||
                et.dst_type < 0 || et.dst_type >= static_cast<int>(node_types.size()))
                throw SchemaError("edge type '" + et.name + "': endpoint type out of range");
            if (et.undirected && et.src_type != et.dst_type)
                throw SchemaError("edge type '" + et.name + "': undirected requires matching endpoint types");
            for (size_t j = i + 1; j < edge_types.size(); ++j)
                if (edge_types[i].name == edge_types[j].name)
                    throw SchemaError("duplicate edge type name '" + edge_types[i].name + "'");
        }
        int labeled = 0;
        for (const auto& nt : node_types) labeled += nt.labeled ? 1 : 0;
        if (labeled != 1) throw SchemaError("exactly one labeled (classified) node type required");
    }

    int classified_type() const {
        for (size_t i = 0; i < node_types.size(); ++i)
            if (node_types[i].labeled) return static_cast<int>(i);
        throw SchemaError("no labeled node type");
    }
};

// Per-type node block. Row index doubles as the node id (ids are dense 0..n-1).
struct NodeTypeData {
    Matrix X;                 // n x feature_dim
    std::vector<int> labels;  // -1 = unlabeled row
    std::vector<Split> split; // Split::none for unclassified types

    int count() const { return X.rows; }
};

// Per-type edge block. Undirected types store both orientations; `pairs` is
// sorted by (src, dst) and duplicate-free. CSR views cover both directions.
struct EdgeTypeData {
    std::vector<std::pair<int, int>> pairs;

    std::vector<long> out_start; // size n_src+1
    std::vector<int> out_dst;
    std::vector<long> in_start; // size n_dst+1
    std::vector<int> in_src;

    long count() const { return static_cast<long>(pairs.size()); }

    void build_csr(int n_src, int n_dst) {
        out_start.assign(static_cast<size_t>(n_src) + 1, 0);
        out_dst.resize(pairs.size());
        for (const auto& e : pairs) ++out_start[static_cast<size_t>(e.first) + 1];
        for (int i = 0; i < n_src; ++i) out_start[static_cast<size_t>(i) + 1] += out_start[i];
        {
            std::vector<long> cur(out_start.begin(), out_start.end() - 1);
            for (const auto& e : pairs) out_dst[static_cast<size_t>(cur[e.first]++)] = e.second;
        }
        in_start.assign(static_cast<size_t>(n_dst) + 1, 0);
        in_src.resize(pairs.size());
        for (const auto& e : pairs) ++in_start[static_cast<size_t>(e.second) + 1];
        for (int i = 0; i < n_dst; ++i) in_start[static_cast<size_t>(i) + 1] += in_start[i];
        {
            std::vector<long> cur(in_start.begin(), in_start.end() - 1);
            for (const auto& e : pairs) in_src[static_cast<size_t>(cur[e.second]++)] = e.first;
        }
    }
};

// Immutable after build_graph; augmentation constructs a fresh graph instead
// of mutating in place.
struct HeteroGraph {
    Schema schema;
    std::vector<NodeTypeData> nodes;
    std::vector<EdgeTypeData> edges;
    int classified_type = -1;
    // Fixed class roles for augmentation arithmetic. positive_class keeps its
    // identity even when augmentation makes it the larger class.
    int positive_class = -1;
    int majority_class = -1;

    int node_count(int type) const { return nodes[static_cast<size_t>(type)].count(); }

    long total_edges() const {
        long s = 0;
        for (const auto& e : edges) s += e.count();
        return s;
    }
};

struct NodeTable {
    Matrix X;
    std::vector<int> labels; // may be empty for unlabeled types
    std::vector<Split> split;
};

inline HeteroGraph build_graph(const Schema& schema, std::vector<NodeTable> node_tables,
                               std::vector<std::vector<std::pair<int, int>>> edge_tables) {
    schema.validate();
    if (node_tables.size() != schema.node_types.size())
        throw SchemaError("node table count does not match schema");
    if (edge_tables.size() != schema.edge_types.size())
        throw SchemaError("edge table count does not match schema");

    HeteroGraph g;
    g.schema = schema;
    g.classified_type = schema.classified_type();
    g.nodes.resize(schema.node_types.size());
    g.edges.resize(schema.edge_types.size());

    for (size_t t = 0; t < schema.node_types.size(); ++t) {
        auto& tab = node_tables[t];
        const auto& spec = schema.node_types[t];
        if (tab.X.cols != spec.feature_dim)
            throw DimensionError("node type '" + spec.name + "': feature dim " + std::to_string(tab.X.cols) +
                                 " != schema " + std::to_string(spec.feature_dim));
        const int n = tab.X.rows;
        if (tab.labels.empty()) tab.labels.assign(static_cast<size_t>(n), -1);
        if (tab.split.empty()) tab.split.assign(static_cast<size_t>(n), Split::none);
        if (static_cast<int>(tab.labels.size()) != n || static_cast<int>(tab.split.size()) != n)
            throw DimensionError("node type '" + spec.name + "': label/split length != row count");
        if (!spec.labeled)
            for (int l : tab.labels)
                if (l >= 0) throw SchemaError("node type '" + spec.name + "' is unlabeled but has labels");
        g.nodes[t].X = std::move(tab.X);
        g.nodes[t].labels = std::move(tab.labels);
        g.nodes[t].split = std::move(tab.split);
    }

    for (size_t et = 0; et < schema.edge_types.size(); ++et) {
        const auto& spec = schema.edge_types[et];
        const int n_src = g.node_count(spec.src_type);
        const int n_dst = g.node_count(spec.dst_type);
        std::vector<std::pair<int, int>> pairs;
        pairs.reserve(edge_tables[et].size() * (spec.undirected ? 2 : 1));
        for (const auto& e : edge_tables[et]) {
            if (e.first < 0 || e.first >= n_src || e.second < 0 || e.second >= n_dst)
                throw SchemaError("edge type '" + spec.name + "': endpoint (" + std::to_string(e.first) + "," +
                                  std::to_string(e.second) + ") out of range");
            pairs.push_back(e);
            if (spec.undirected && e.first != e.second) pairs.emplace_back(e.second, e.first);
        }
        std::sort(pairs.begin(), pairs.end());
        if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end())
            throw SchemaError("edge type '" + spec.name + "': duplicate edge pair");
        g.edges[et].pairs = std::move(pairs);
        g.edges[et].build_csr(n_src, n_dst);
    }

    // Class roles from overall label counts; ties break toward the smaller id.
    std::map<int, long> counts;
    for (int l : g.nodes[static_cast<size_t>(g.classified_type)].labels)
        if (l >= 0) ++counts[l];
    if (counts.size() < 2) throw SchemaError("classified type needs at least two label classes");
    int min_c = -1, max_c = -1;
    long min_n = -1, max_n = -1;
    for (const auto& [c, n] : counts) {
        if (min_n < 0 || n < min_n) min_c = c, min_n = n;
        if (max_n < 0 || n > max_n) max_c = c, max_n = n;
    }
    if (min_c == max_c) max_c = (++counts.begin())->first;
    g.positive_class = min_c;
    g.majority_class = max_c;
    return g;
}

// |C_min| / |C_maj| by class size over the chosen split; always in (0, 1].
inline double imbalance_ratio(const HeteroGraph& g, Split scope = Split::none) {
    const auto& nd = g.nodes[static_cast<size_t>(g.classified_type)];
    std::map<int, long> counts;
    for (size_t i = 0; i < nd.labels.size(); ++i) {
        if (nd.labels[i] < 0) continue;
        if (scope != Split::none && nd.split[i] != scope) continue;
        ++counts[nd.labels[i]];
    }
    if (counts.size() < 2) throw DomainError("imbalance ratio undefined: fewer than two classes in scope");
    long mn = -1, mx = -1;
    for (const auto& [c, n] : counts) {
        (void)c;
        if (mn < 0 || n < mn) mn = n;
        if (n > mx) mx = n;
    }
    return static_cast<double>(mn) / static_cast<double>(mx);
}

// Count of `cls`-labeled nodes in `scope`; class roles fixed by the caller.
inline long class_count(const HeteroGraph& g, int cls, Split scope) {
    const auto& nd = g.nodes[static_cast<size_t>(g.classified_type)];
    long n = 0;
    for (size_t i = 0; i < nd.labels.size(); ++i)
        if (nd.labels[i] == cls && (scope == Split::none || nd.split[i] == scope)) ++n;
    return n;
}

struct Subgraph {
    const HeteroGraph* parent = nullptr;
    int center_type = -1;
    int center_global = -1;
    std::vector<std::vector<int>> global_ids;             // per node type, sorted ascending
    std::vector<std::vector<std::pair<int, int>>> edges;  // per edge type, local pairs, sorted

    int node_count(int type) const { return static_cast<int>(global_ids[static_cast<size_t>(type)].size()); }

    // -1 when the global id is not selected.
    int local_index(int type, int gid) const {
        const auto& v = global_ids[static_cast<size_t>(type)];
        auto it = std::lower_bound(v.begin(), v.end(), gid);
        if (it == v.end() || *it != gid) return -1;
        return static_cast<int>(it - v.begin());
    }

    // Materialized copy of the parent feature rows for the selection.
    Matrix local_features(int type) const {
        const auto& v = global_ids[static_cast<size_t>(type)];
        const Matrix& X = parent->nodes[static_cast<size_t>(type)].X;
        Matrix out(static_cast<int>(v.size()), X.cols);
        for (size_t i = 0; i < v.size(); ++i)
            for (int j = 0; j < X.cols; ++j) out(static_cast<int>(i), j) = X(v[i], j);
        return out;
    }
};

inline Subgraph induced_subgraph(const HeteroGraph& g, std::vector<std::vector<int>> selection) {
    if (selection.size() != g.schema.node_types.size())
        throw SchemaError("selection must cover every node type");
    size_t total = 0;
    for (size_t t = 0; t < selection.size(); ++t) {
        auto& v = selection[t];
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        for (int id : v)
            if (id < 0 || id >= g.node_count(static_cast<int>(t)))
                throw SchemaError("selection id " + std::to_string(id) + " out of range for type " +
                                  g.schema.node_types[t].name);
        total += v.size();
    }
    if (total == 0) throw DomainError("empty selection");

    Subgraph sub;
    sub.parent = &g;
    sub.global_ids = std::move(selection);
    sub.edges.resize(g.schema.edge_types.size());
    for (size_t et = 0; et < g.schema.edge_types.size(); ++et) {
        const auto& spec = g.schema.edge_types[et];
        const auto& ed = g.edges[et];
        const auto& src_sel = sub.global_ids[static_cast<size_t>(spec.src_type)];
        auto& out = sub.edges[et];
        for (size_t i = 0; i < src_sel.size(); ++i) {
            const int s = src_sel[i];
            for (long a = ed.out_start[s]; a < ed.out_start[static_cast<size_t>(s) + 1]; ++a) {
                const int dl = sub.local_index(spec.dst_type, ed.out_dst[static_cast<size_t>(a)]);
                if (dl >= 0) out.emplace_back(static_cast<int>(i), dl);
            }
        }
        // src_sel ascending and CSR rows sorted make this already sorted.
    }
    return sub;
}

// One-hop neighborhood of a uniformly drawn training-split node of the
// classified type. Isolated draws are retried up to `retry_limit` times.
inline Subgraph sample_one_hop(const HeteroGraph& g, RngStream& rng, int retry_limit = 32) {
    const int ct = g.classified_type;
    const auto& nd = g.nodes[static_cast<size_t>(ct)];
    std::vector<int> centers;
    for (int i = 0; i < nd.count(); ++i)
        if (nd.split[static_cast<size_t>(i)] == Split::train) centers.push_back(i);
    if (centers.empty()) throw DomainError("no training-split nodes of the classified type");

    for (int attempt = 0; attempt < retry_limit; ++attempt) {
        const int center = centers[static_cast<size_t>(rng.uniform_int(static_cast<int>(centers.size())))];
        std::vector<std::vector<int>> selection(g.schema.node_types.size());
        selection[static_cast<size_t>(ct)].push_back(center);
        bool any_neighbor = false;
        for (size_t et = 0; et < g.schema.edge_types.size(); ++et) {
            const auto& spec = g.schema.edge_types[et];
            const auto& ed = g.edges[et];
            if (spec.src_type == ct) {
                for (long a = ed.out_start[center]; a < ed.out_start[static_cast<size_t>(center) + 1]; ++a) {
                    selection[static_cast<size_t>(spec.dst_type)].push_back(ed.out_dst[static_cast<size_t>(a)]);
                    any_neighbor = true;
                }
            }
            if (spec.dst_type == ct && !spec.undirected) {
                for (long a = ed.in_start[center]; a < ed.in_start[static_cast<size_t>(center) + 1]; ++a) {
                    selection[static_cast<size_t>(spec.src_type)].push_back(ed.in_src[static_cast<size_t>(a)]);
                    any_neighbor = true;
                }
            }
        }
        if (!any_neighbor) continue;
        Subgraph sub = induced_subgraph(g, std::move(selection));
        sub.center_type = ct;
        sub.center_global = center;
        return sub;
    }
    throw DomainError("isolated center: no neighbors after " + std::to_string(retry_limit) + " draws");
}

} // namespace flashgan
