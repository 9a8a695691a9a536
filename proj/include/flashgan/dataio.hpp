#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "flashgan/hetgraph.hpp"
#include "flashgan/jsonutil.hpp"
#include "flashgan/rng.hpp"
#include "flashgan/textio.hpp"

namespace flashgan {

// Planted two-type benchmark generator: users carry the class signal in both
// channels FlashGAN-style training needs, a feature mean shift and a
// homophilous wiring pattern.
struct SynthConfig {
    int n_users = 1000;
    int n_products = 200;
    double fraud_fraction = 0.1;
    int user_dim = 16;
    int product_dim = 8;
    double mu = 1.0;                    // minority feature shift along a random unit direction
    double p_uu_intra = 0.02;           // same-class user pair wiring probability
    double p_uu_inter = 0.002;          // cross-class
    double up_rate_minority = 3.0;      // Poisson rating count per user
    double up_rate_majority = 3.0;
    double minority_product_frac = 0.2; // minority users rate only this leading product block
    double p_pp = 0.01;
    double split_train = 0.7;
    double split_val = 0.2;
    double split_test = 0.1;
    uint64_t seed = 0;

    void validate() const {
        if (n_users < 2 || n_products < 1) throw ConfigError("synth: need >= 2 users and >= 1 product");
        if (!(fraud_fraction > 0.0 && fraud_fraction <= 0.5))
            throw ConfigError("synth: fraud_fraction must be in (0, 0.5]");
        if (user_dim < 1 || product_dim < 1) throw ConfigError("synth: feature dims must be positive");
        if (mu < 0.0) throw ConfigError("synth: mu must be >= 0");
        for (double p : {p_uu_intra, p_uu_inter, p_pp})
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("synth: wiring probabilities must be in [0,1]");
        if (up_rate_minority < 0.0 || up_rate_majority < 0.0) throw ConfigError("synth: negative rating rate");
        if (!(minority_product_frac > 0.0 && minority_product_frac <= 1.0))
            throw ConfigError("synth: minority_product_frac must be in (0,1]");
        if (split_train < 0.0 || split_val < 0.0 || split_test < 0.0 ||
            std::abs(split_train + split_val + split_test - 1.0) > 1e-9)
            throw ConfigError("synth: split fractions must be nonnegative and sum to 1");
    }
};

inline json synth_config_to_json(const SynthConfig& c) {
    return json{{"n_users", c.n_users},
                {"n_products", c.n_products},
                {"fraud_fraction", c.fraud_fraction},
                {"user_dim", c.user_dim},
                {"product_dim", c.product_dim},
                {"mu", c.mu},
                {"p_uu_intra", c.p_uu_intra},
                {"p_uu_inter", c.p_uu_inter},
                {"up_rate_minority", c.up_rate_minority},
                {"up_rate_majority", c.up_rate_majority},
                {"minority_product_frac", c.minority_product_frac},
                {"p_pp", c.p_pp},
                {"split_train", c.split_train},
                {"split_val", c.split_val},
                {"split_test", c.split_test},
                {"seed", c.seed}};
}

inline SynthConfig synth_config_from_json(const json& j, const std::string& ctx) {
    JsonCursor c(j, ctx);
    SynthConfig s;
    s.n_users = static_cast<int>(c.integer("n_users", s.n_users));
    s.n_products = static_cast<int>(c.integer("n_products", s.n_products));
    s.fraud_fraction = c.num("fraud_fraction", s.fraud_fraction);
    s.user_dim = static_cast<int>(c.integer("user_dim", s.user_dim));
    s.product_dim = static_cast<int>(c.integer("product_dim", s.product_dim));
    s.mu = c.num("mu", s.mu);
    s.p_uu_intra = c.num("p_uu_intra", s.p_uu_intra);
    s.p_uu_inter = c.num("p_uu_inter", s.p_uu_inter);
    s.up_rate_minority = c.num("up_rate_minority", s.up_rate_minority);
    s.up_rate_majority = c.num("up_rate_majority", s.up_rate_majority);
    s.minority_product_frac = c.num("minority_product_frac", s.minority_product_frac);
    s.p_pp = c.num("p_pp", s.p_pp);
    s.split_train = c.num("split_train", s.split_train);
    s.split_val = c.num("split_val", s.split_val);
    s.split_test = c.num("split_test", s.split_test);
    s.seed = c.u64("seed", s.seed);
    c.done();
    s.validate();
    return s;
}

inline Schema synth_schema(const SynthConfig& c) {
    Schema s;
    s.node_types.push_back(NodeTypeSpec{"user", c.user_dim, true});
    s.node_types.push_back(NodeTypeSpec{"product", c.product_dim, false});
    s.edge_types.push_back(EdgeTypeSpec{"uu", 0, 0, true});
    s.edge_types.push_back(EdgeTypeSpec{"up", 0, 1, false});
    s.edge_types.push_back(EdgeTypeSpec{"pp", 1, 1, true});
    return s;
}

// Stratified split: per class, a seeded shuffle then contiguous
// train/val/test slices, with at least one training node per class.
inline void assign_split(std::vector<Split>& split, std::vector<int> ids, const SynthConfig& c,
                         RngStream& rng) {
    rng.shuffle(ids);
    const long n = static_cast<long>(ids.size());
    long n_train = std::llround(c.split_train * static_cast<double>(n));
    if (n_train < 1 && n > 0) n_train = 1;
    if (n_train > n) n_train = n;
    long n_val = std::llround(c.split_val * static_cast<double>(n));
    if (n_train + n_val > n) n_val = n - n_train;
    for (long i = 0; i < n; ++i) {
        Split s = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
        split[static_cast<size_t>(ids[static_cast<size_t>(i)])] = s;
    }
}

inline HeteroGraph generate(const SynthConfig& cfg) {
    cfg.validate();
    const int n_minority = static_cast<int>(std::llround(cfg.fraud_fraction * cfg.n_users));
    if (n_minority < 1 || n_minority >= cfg.n_users)
        throw DomainError("synth: fraud_fraction " + std::to_string(cfg.fraud_fraction) + " of " +
                          std::to_string(cfg.n_users) + " users leaves an empty class");

    // Minority users occupy ids 0..n_minority-1; label 1 = minority.
    std::vector<int> labels(static_cast<size_t>(cfg.n_users), 0);
    for (int i = 0; i < n_minority; ++i) labels[static_cast<size_t>(i)] = 1;

    RngStream rs_dir = RngStream::derive(cfg.seed, {fnv1a64("synth.direction")});
    std::vector<double> dir(static_cast<size_t>(cfg.user_dim));
    double norm2 = 0.0;
    for (double& d : dir) {
        d = rs_dir.normal();
        norm2 += d * d;
    }
    const double inv_norm = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
    for (double& d : dir) d *= inv_norm;

    RngStream rs_feat = RngStream::derive(cfg.seed, {fnv1a64("synth.features")});
    NodeTable users;
    users.X = rs_feat.normal_matrix(cfg.n_users, cfg.user_dim);
    for (int i = 0; i < n_minority; ++i)
        for (int j = 0; j < cfg.user_dim; ++j) users.X(i, j) += cfg.mu * dir[static_cast<size_t>(j)];
    users.labels = labels;

    NodeTable products;
    products.X = rs_feat.normal_matrix(cfg.n_products, cfg.product_dim);

    RngStream rs_uu = RngStream::derive(cfg.seed, {fnv1a64("synth.uu")});
    std::vector<std::pair<int, int>> uu;
    for (int i = 0; i < cfg.n_users; ++i)
        for (int j = i + 1; j < cfg.n_users; ++j) {
            const double p = labels[static_cast<size_t>(i)] == labels[static_cast<size_t>(j)]
                                 ? cfg.p_uu_intra
                                 : cfg.p_uu_inter;
            if (rs_uu.bernoulli(p)) uu.emplace_back(i, j);
        }

    RngStream rs_up = RngStream::derive(cfg.seed, {fnv1a64("synth.up")});
    const int pref_block = std::max(1, static_cast<int>(std::ceil(cfg.minority_product_frac * cfg.n_products)));
    std::vector<std::pair<int, int>> up;
    std::vector<int> pool;
    for (int i = 0; i < cfg.n_users; ++i) {
        const bool mino = labels[static_cast<size_t>(i)] == 1;
        const int block = mino ? pref_block : cfg.n_products;
        long r = rs_up.poisson(mino ? cfg.up_rate_minority : cfg.up_rate_majority);
        if (r > block) r = block;
        if (r == 0) continue;
        pool.resize(static_cast<size_t>(block));
        for (int j = 0; j < block; ++j) pool[static_cast<size_t>(j)] = j;
        for (long pick = 0; pick < r; ++pick) {
            const long rest = block - pick;
            const long sel = pick + rs_up.uniform_int(static_cast<int>(rest));
            std::swap(pool[static_cast<size_t>(pick)], pool[static_cast<size_t>(sel)]);
            up.emplace_back(i, pool[static_cast<size_t>(pick)]);
        }
    }

    RngStream rs_pp = RngStream::derive(cfg.seed, {fnv1a64("synth.pp")});
    std::vector<std::pair<int, int>> pp;
    for (int i = 0; i < cfg.n_products; ++i)
        for (int j = i + 1; j < cfg.n_products; ++j)
            if (rs_pp.bernoulli(cfg.p_pp)) pp.emplace_back(i, j);

    RngStream rs_split = RngStream::derive(cfg.seed, {fnv1a64("synth.split")});
    users.split.assign(static_cast<size_t>(cfg.n_users), Split::none);
    std::vector<int> mino_ids, majo_ids;
    for (int i = 0; i < cfg.n_users; ++i)
        (labels[static_cast<size_t>(i)] == 1 ? mino_ids : majo_ids).push_back(i);
    assign_split(users.split, std::move(mino_ids), cfg, rs_split);
    assign_split(users.split, std::move(majo_ids), cfg, rs_split);

    return build_graph(synth_schema(cfg), {std::move(users), std::move(products)},
                       {std::move(uu), std::move(up), std::move(pp)});
}

// Container layout: manifest.json + nodes_<type>.csv + edges_<type>.csv
// (+ stats.json sidecar, not part of the content hashset). Features travel as
// 17-significant-digit decimal text, so save/load is an identity on doubles.

inline std::string nodes_file(const std::string& type_name) { return "nodes_" + type_name + ".csv"; }
inline std::string edges_file(const std::string& type_name) { return "edges_" + type_name + ".csv"; }

inline json graph_stats(const HeteroGraph& g, long byte_size) {
    json node_counts = json::object(), edge_rows = json::object(), edge_directed = json::object();
    for (size_t t = 0; t < g.schema.node_types.size(); ++t)
        node_counts[g.schema.node_types[t].name] = g.node_count(static_cast<int>(t));
    for (size_t et = 0; et < g.schema.edge_types.size(); ++et) {
        const auto& spec = g.schema.edge_types[et];
        long rows = 0;
        if (spec.undirected) {
            for (const auto& pr : g.edges[et].pairs)
                if (pr.first <= pr.second) ++rows;
        } else {
            rows = g.edges[et].count();
        }
        edge_rows[spec.name] = rows;
        edge_directed[spec.name] = g.edges[et].count();
    }
    return json{{"node_counts", node_counts},
                {"edge_rows", edge_rows},
                {"edge_count_directed", edge_directed},
                {"byte_size", byte_size},
                {"imbalance_ratio", imbalance_ratio(g)},
                {"imbalance_ratio_train", imbalance_ratio(g, Split::train)}};
}

// Writes the container; returns the stats object (also written as
// stats.json). byte_size covers manifest plus CSVs, not the sidecar.
inline json save_graph(const HeteroGraph& g, const std::filesystem::path& dir,
                       const json& meta = json::object()) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;

    json node_counts = json::object();
    for (size_t t = 0; t < g.schema.node_types.size(); ++t)
        node_counts[g.schema.node_types[t].name] = g.node_count(static_cast<int>(t));
    const json manifest{{"format", "hetgraph"},     {"version", 1},
                        {"schema", schema_to_json(g.schema)}, {"node_counts", node_counts},
                        {"positive_class", g.positive_class}, {"majority_class", g.majority_class},
                        {"meta", meta}};
    const auto manifest_path = dir / "manifest.json";
    write_text_file(manifest_path, manifest.dump(2) + "\n");
    written.push_back(manifest_path);

    for (size_t t = 0; t < g.schema.node_types.size(); ++t) {
        const auto& spec = g.schema.node_types[t];
        const auto& nd = g.nodes[t];
        CsvTable tab;
        tab.header.push_back("id");
        for (int j = 0; j < spec.feature_dim; ++j) tab.header.push_back("f" + std::to_string(j));
        tab.header.push_back("label");
        tab.header.push_back("split");
        for (int i = 0; i < nd.count(); ++i) {
            std::vector<std::string> row;
            row.push_back(std::to_string(i));
            for (int j = 0; j < spec.feature_dim; ++j) row.push_back(fmt_double(nd.X(i, j)));
            row.push_back(std::to_string(nd.labels[static_cast<size_t>(i)]));
            row.push_back(split_name(nd.split[static_cast<size_t>(i)]));
            tab.rows.push_back(std::move(row));
        }
        const auto path = dir / nodes_file(spec.name);
        write_csv(path, tab);
        written.push_back(path);
    }

    for (size_t et = 0; et < g.schema.edge_types.size(); ++et) {
        const auto& spec = g.schema.edge_types[et];
        CsvTable tab;
        tab.header = {"src", "dst"};
        for (const auto& pr : g.edges[et].pairs) {
            if (spec.undirected && pr.first > pr.second) continue;
            tab.rows.push_back({std::to_string(pr.first), std::to_string(pr.second)});
        }
        const auto path = dir / edges_file(spec.name);
        write_csv(path, tab);
        written.push_back(path);
    }

    long byte_size = 0;
    for (const auto& p : written) byte_size += static_cast<long>(std::filesystem::file_size(p));
    const json stats = graph_stats(g, byte_size);
    write_text_file(dir / "stats.json", stats.dump(2) + "\n");
    return stats;
}

inline HeteroGraph load_graph(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        throw ParseError("no manifest.json in " + dir.string());
    const json manifest = parse_json_file(manifest_path);
    JsonCursor c(manifest, manifest_path.string());
    if (c.str("format", "") != "hetgraph") throw ParseError(manifest_path.string() + ": not a hetgraph container");
    if (c.integer("version", -1) != 1) throw ParseError(manifest_path.string() + ": unsupported version");
    const Schema schema = schema_from_json(c.sub("schema"), manifest_path.string() + ":schema");
    const json counts = c.sub("node_counts");
    const int positive_class = static_cast<int>(c.integer("positive_class", -1));
    const int majority_class = static_cast<int>(c.integer("majority_class", -1));
    if (c.has("meta")) c.sub("meta");
    c.done();

    std::vector<NodeTable> node_tables;
    for (const auto& spec : schema.node_types) {
        const auto path = dir / nodes_file(spec.name);
        const CsvTable tab = read_csv(path);
        std::vector<std::string> want{"id"};
        for (int j = 0; j < spec.feature_dim; ++j) want.push_back("f" + std::to_string(j));
        want.push_back("label");
        want.push_back("split");
        if (tab.header != want) throw ParseError(path.string() + ": unexpected header");
        const long declared = counts.contains(spec.name) ? counts[spec.name].get<long>() : -1;
        if (declared >= 0 && declared != static_cast<long>(tab.rows.size()))
            throw ParseError(path.string() + ": row count " + std::to_string(tab.rows.size()) +
                             " != manifest count " + std::to_string(declared));
        NodeTable nt;
        nt.X = Matrix(static_cast<int>(tab.rows.size()), spec.feature_dim);
        for (size_t i = 0; i < tab.rows.size(); ++i) {
            const auto& row = tab.rows[i];
            const std::string ctx = path.string() + " row " + std::to_string(i);
            if (parse_long(row[0], ctx + " id") != static_cast<long>(i))
                throw ParseError(ctx + ": ids must be dense 0..n-1 in order");
            for (int j = 0; j < spec.feature_dim; ++j)
                nt.X(static_cast<int>(i), j) = parse_double(row[static_cast<size_t>(j) + 1], ctx);
            nt.labels.push_back(static_cast<int>(
                parse_long(row[static_cast<size_t>(spec.feature_dim) + 1], ctx + " label")));
            nt.split.push_back(split_from_name(row[static_cast<size_t>(spec.feature_dim) + 2]));
        }
        node_tables.push_back(std::move(nt));
    }

    std::vector<std::vector<std::pair<int, int>>> edge_tables;
    for (const auto& spec : schema.edge_types) {
        const auto path = dir / edges_file(spec.name);
        const CsvTable tab = read_csv(path);
        if (tab.header != std::vector<std::string>{"src", "dst"})
            throw ParseError(path.string() + ": unexpected header");
        std::vector<std::pair<int, int>> pairs;
        pairs.reserve(tab.rows.size());
        for (size_t i = 0; i < tab.rows.size(); ++i) {
            const std::string ctx = path.string() + " row " + std::to_string(i);
            pairs.emplace_back(static_cast<int>(parse_long(tab.rows[i][0], ctx + " src")),
                               static_cast<int>(parse_long(tab.rows[i][1], ctx + " dst")));
        }
        edge_tables.push_back(std::move(pairs));
    }

    HeteroGraph g = build_graph(schema, std::move(node_tables), std::move(edge_tables));
    // Stored roles win over recomputed ones: after augmentation past parity
    // the minority label keeps its identity.
    if (positive_class >= 0) g.positive_class = positive_class;
    if (majority_class >= 0) g.majority_class = majority_class;
    return g;
}

} // namespace flashgan
