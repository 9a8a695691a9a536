#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "flashgan/hetgraph.hpp"
#include "flashgan/nn.hpp"
#include "flashgan/tape.hpp"

namespace flashgan {

// Two-logit heads (dropper, discriminator): column 1 is "keep" / "real",
// column 0 the complement, so log(1 - d) is the log-probability of column 0.
inline constexpr int kKeepCol = 1;
inline constexpr int kRealCol = 1;
inline constexpr int kFakeCol = 0;

struct GanDims {
    int noise_dim = 32;
    int gen_hidden = 1024;
    int gen_layers = 8;
    int gen_out = -1; // -1: feature dim of the classified type
    int mixer_hidden = 64;
    int mixer_out = 32;
    int mixer_layers = 2;
    int dropper_hidden = 512;
    int dropper_layers = 2;
    int disc_hidden = 512;
    int disc_layers = 2;
};

// The generator triple (feature generator, subgraph mixer, per-edge-type
// droppers) plus per-edge-type discriminators, in one ParamStore. The
// generator-side and discriminator-side name lists partition the store so
// each optimizer can only ever touch its own network.
struct GanModel {
    Schema schema;
    int classified_type = -1;
    GanDims dims;
    std::vector<int> scored; // edge types incident to the classified type, in schema order
    ParamStore params;
    std::vector<std::string> gen_names;
    std::vector<std::string> disc_names;

    MlpSpec gen_spec() const { return MlpSpec{dims.noise_dim, dims.gen_hidden, dims.gen_out, dims.gen_layers}; }
    MlpSpec dropper_spec() const { return MlpSpec{2 * dims.mixer_out, dims.dropper_hidden, 2, dims.dropper_layers}; }
    MlpSpec disc_spec() const { return MlpSpec{2 * dims.mixer_out, dims.disc_hidden, 2, dims.disc_layers}; }

    RelGnnSpec mixer_spec() const {
        RelGnnSpec s;
        for (const auto& nt : schema.node_types) s.in_dims.push_back(nt.feature_dim);
        s.hidden = dims.mixer_hidden;
        s.out = dims.mixer_out;
        s.layers = dims.mixer_layers;
        // The mixer sits between the generator and the adversaries: normalized
        // hidden states deny the generator the degenerate win of scaling
        // features until every edge embedding saturates the adversary.
        s.layernorm = true;
        return s;
    }

    int scored_index(int edge_type) const {
        for (size_t i = 0; i < scored.size(); ++i)
            if (scored[i] == edge_type) return static_cast<int>(i);
        throw SchemaError("edge type " + std::to_string(edge_type) + " is not scored");
    }

    static GanModel build(Schema schema, GanDims dims, uint64_t seed) {
        schema.validate();
        GanModel m;
        m.classified_type = schema.classified_type();
        if (dims.gen_out <= 0)
            dims.gen_out = schema.node_types[static_cast<size_t>(m.classified_type)].feature_dim;
        m.schema = std::move(schema);
        m.dims = dims;
        for (size_t et = 0; et < m.schema.edge_types.size(); ++et) {
            const auto& es = m.schema.edge_types[et];
            const bool inc = es.src_type == m.classified_type || es.dst_type == m.classified_type;
            if (!inc) continue;
            if (!es.undirected && es.src_type == es.dst_type)
                throw SchemaError("directed self-relation on the classified type is not supported");
            m.scored.push_back(static_cast<int>(et));
        }
        if (m.scored.empty()) throw SchemaError("no edge type touches the classified type");

        register_mlp(m.params, "gen", m.gen_spec());
        register_relgnn(m.params, "mixer", m.schema, m.mixer_spec());
        for (int et : m.scored)
            register_mlp(m.params, "drop." + m.schema.edge_types[static_cast<size_t>(et)].name, m.dropper_spec());
        m.gen_names = m.params.names();
        for (int et : m.scored)
            register_mlp(m.params, "disc." + m.schema.edge_types[static_cast<size_t>(et)].name, m.disc_spec());
        for (const auto& n : m.params.names())
            if (std::find(m.gen_names.begin(), m.gen_names.end(), n) == m.gen_names.end())
                m.disc_names.push_back(n);
        m.params.init_params(seed);
        return m;
    }
};

// One candidate synthetic edge in canonical orientation; the mirrored
// orientation exists implicitly and is decided by the same retained flag.
struct CandidatePair {
    int real_local; // local index within real_type
    int synth;      // 0..k-1
    double p = 0.0; // preservation likelihood, filled by the forward pass
    bool retained = false;
};

struct ScoredEdgeSet {
    int edge_type = -1;
    int real_type = -1;       // node type of the real endpoint
    bool synth_is_src = false; // synthetic endpoint occupies the src slot of a directed type
    std::vector<CandidatePair> cands;
};

struct AugmentedSubgraph {
    Subgraph base;
    int k = 0;
    Matrix noise;          // k x noise_dim
    Matrix synth_features; // k x gen_out, value snapshot of the generated rows
    std::vector<ScoredEdgeSet> scored;

    long candidate_directed_count() const {
        long n = 0;
        for (const auto& s : scored) n += 2 * static_cast<long>(s.cands.size());
        return n;
    }

    long retained_pairs() const {
        long n = 0;
        for (const auto& s : scored)
            for (const auto& c : s.cands) n += c.retained ? 1 : 0;
        return n;
    }

    // A synthetic node survives iff it keeps at least one edge.
    std::vector<char> survivors() const {
        std::vector<char> alive(static_cast<size_t>(k), 0);
        for (const auto& s : scored)
            for (const auto& c : s.cands)
                if (c.retained) alive[static_cast<size_t>(c.synth)] = 1;
        return alive;
    }
};

inline Matrix sample_noise(RngStream& rng, int k, int noise_dim) {
    return rng.normal_matrix(k, noise_dim);
}

// Fully connect k synthetic nodes of the classified type to every real node
// reachable through a scored edge type, both orientations, no
// synthetic-synthetic pairs.
inline AugmentedSubgraph attach_full(const GanModel& model, Subgraph sub, int k, Matrix noise) {
    if (k < 1) throw ContractError("attach_full: k must be >= 1");
    AugmentedSubgraph aug;
    aug.base = std::move(sub);
    aug.k = k;
    aug.noise = std::move(noise);
    for (int et : model.scored) {
        const auto& es = model.schema.edge_types[static_cast<size_t>(et)];
        ScoredEdgeSet set;
        set.edge_type = et;
        const bool self_type = es.src_type == es.dst_type;
        set.real_type = self_type ? model.classified_type
                                  : (es.src_type == model.classified_type ? es.dst_type : es.src_type);
        set.synth_is_src = !self_type && es.src_type == model.classified_type;
        const int n_real = aug.base.node_count(set.real_type);
        set.cands.reserve(static_cast<size_t>(n_real) * static_cast<size_t>(k));
        for (int r = 0; r < n_real; ++r)
            for (int s = 0; s < k; ++s) set.cands.push_back(CandidatePair{r, s, 0.0, false});
        aug.scored.push_back(std::move(set));
    }
    return aug;
}

// Retention: strictly p > eta, decided once per canonical pair. Real edges
// are never touched.
inline void drop_edges(AugmentedSubgraph& aug, const std::vector<double>& eta) {
    if (eta.size() != aug.scored.size()) throw ContractError("drop_edges: threshold count mismatch");
    for (size_t si = 0; si < aug.scored.size(); ++si)
        for (auto& c : aug.scored[si].cands) c.retained = c.p > eta[si];
}

inline ValueId generate_synthetic_nodes(Tape& t, const GanModel& model, ValueId z, bool frozen = false) {
    return mlp_forward(t, model.params, "gen", model.gen_spec(), z, frozen);
}

inline ValueId edge_preservation_col(Tape& t, const GanModel& model, int edge_type, ValueId he,
                                     bool frozen = false) {
    const std::string name = "drop." + model.schema.edge_types[static_cast<size_t>(edge_type)].name;
    return t.col(t.softmax_rows(mlp_forward(t, model.params, name, model.dropper_spec(), he, frozen)), kKeepCol);
}

inline ValueId discriminate_col(Tape& t, const GanModel& model, int edge_type, ValueId he, bool frozen = false) {
    const std::string name = "disc." + model.schema.edge_types[static_cast<size_t>(edge_type)].name;
    return t.col(t.softmax_rows(mlp_forward(t, model.params, name, model.disc_spec(), he, frozen)), kRealCol);
}

// log D / log(1 - D) as one log-softmax column pick. Losses draw from this
// instead of log(discriminate_col(...)) so that a saturated head produces a
// large negative score rather than log of a rounded 0 or 1.
inline ValueId discriminate_log_col(Tape& t, const GanModel& model, int edge_type, ValueId he, int which,
                                    bool frozen = false) {
    const std::string name = "disc." + model.schema.edge_types[static_cast<size_t>(edge_type)].name;
    return t.col(t.log_softmax_rows(mlp_forward(t, model.params, name, model.disc_spec(), he, frozen)), which);
}

// Untaped single-edge conveniences.
inline double edge_preservation(const GanModel& model, int edge_type, const Matrix& he_row) {
    Tape t;
    return t.value(edge_preservation_col(t, model, edge_type, t.constant(he_row), true)).a[0];
}

inline double discriminate(const GanModel& model, int edge_type, const Matrix& he_row) {
    Tape t;
    return t.value(discriminate_col(t, model, edge_type, t.constant(he_row), true)).a[0];
}

struct GanForward {
    ValueId synth_rows = -1;
    std::vector<ValueId> H;       // per node type, over the augmented view
    std::vector<ValueId> cand_he; // per scored set; -1 when the set is empty
    std::vector<ValueId> p_col;   // per scored set; -1 when the set is empty
};

// Taped pipeline for one augmented subgraph: noise -> synthetic feature rows
// -> mixer over the fully-connected augmented view -> per-candidate
// preservation likelihood. With fill_p the computed p values are copied into
// the candidate pairs (and the synthetic rows into aug.synth_features).
inline GanForward gan_forward(Tape& t, const GanModel& model, AugmentedSubgraph& aug, bool frozen_gen,
                              bool fill_p) {
    const Schema& schema = model.schema;
    const int ct = model.classified_type;
    const int n_ct_real = aug.base.node_count(ct);

    GanForward f;
    const ValueId z = t.constant(aug.noise);
    f.synth_rows = generate_synthetic_nodes(t, model, z, frozen_gen);

    GraphView view;
    view.n_nodes.resize(schema.node_types.size());
    view.features.resize(schema.node_types.size());
    for (size_t ty = 0; ty < schema.node_types.size(); ++ty) {
        view.n_nodes[ty] = aug.base.node_count(static_cast<int>(ty));
        view.features[ty] = t.constant(aug.base.local_features(static_cast<int>(ty)));
    }
    view.n_nodes[static_cast<size_t>(ct)] += aug.k;
    view.features[static_cast<size_t>(ct)] = t.concat_rows(view.features[static_cast<size_t>(ct)], f.synth_rows);

    const auto rels = message_relations(schema);
    view.rel_edges.resize(rels.size());
    std::vector<int> decl_rel(schema.edge_types.size(), -1), rev_rel(schema.edge_types.size(), -1);
    for (size_t ri = 0; ri < rels.size(); ++ri) {
        if (rels[ri].reversed)
            rev_rel[static_cast<size_t>(rels[ri].edge_type)] = static_cast<int>(ri);
        else
            decl_rel[static_cast<size_t>(rels[ri].edge_type)] = static_cast<int>(ri);
    }
    for (size_t ri = 0; ri < rels.size(); ++ri) {
        const auto& e = aug.base.edges[static_cast<size_t>(rels[ri].edge_type)];
        auto& list = view.rel_edges[ri];
        list.reserve(e.size());
        for (const auto& pr : e)
            list.emplace_back(rels[ri].reversed ? pr.second : pr.first, rels[ri].reversed ? pr.first : pr.second);
    }
    for (const auto& set : aug.scored) {
        const auto& es = schema.edge_types[static_cast<size_t>(set.edge_type)];
        auto& decl = view.rel_edges[static_cast<size_t>(decl_rel[static_cast<size_t>(set.edge_type)])];
        for (const auto& c : set.cands) {
            const int synth_local = n_ct_real + c.synth;
            if (es.undirected) {
                decl.emplace_back(c.real_local, synth_local);
                decl.emplace_back(synth_local, c.real_local);
            } else {
                auto& rev = view.rel_edges[static_cast<size_t>(rev_rel[static_cast<size_t>(set.edge_type)])];
                if (set.synth_is_src) {
                    decl.emplace_back(synth_local, c.real_local);
                    rev.emplace_back(c.real_local, synth_local);
                } else {
                    decl.emplace_back(c.real_local, synth_local);
                    rev.emplace_back(synth_local, c.real_local);
                }
            }
        }
    }

    f.H = relgnn_forward(t, model.params, "mixer", schema, model.mixer_spec(), view, frozen_gen);

    for (size_t si = 0; si < aug.scored.size(); ++si) {
        const auto& set = aug.scored[si];
        if (set.cands.empty()) {
            f.cand_he.push_back(-1);
            f.p_col.push_back(-1);
            continue;
        }
        std::vector<int> lidx, ridx;
        lidx.reserve(set.cands.size());
        ridx.reserve(set.cands.size());
        int ltype, rtype;
        const bool self_type = set.real_type == ct;
        if (self_type || !set.synth_is_src) {
            ltype = set.real_type;
            rtype = ct;
            for (const auto& c : set.cands) {
                lidx.push_back(c.real_local);
                ridx.push_back(n_ct_real + c.synth);
            }
        } else {
            ltype = ct;
            rtype = set.real_type;
            for (const auto& c : set.cands) {
                lidx.push_back(n_ct_real + c.synth);
                ridx.push_back(c.real_local);
            }
        }
        const ValueId he = t.concat_cols(t.gather_rows(f.H[static_cast<size_t>(ltype)], std::move(lidx)),
                                         t.gather_rows(f.H[static_cast<size_t>(rtype)], std::move(ridx)));
        const ValueId p = edge_preservation_col(t, model, set.edge_type, he, frozen_gen);
        f.cand_he.push_back(he);
        f.p_col.push_back(p);
    }

    if (fill_p) {
        aug.synth_features = t.value(f.synth_rows);
        for (size_t si = 0; si < aug.scored.size(); ++si) {
            if (f.p_col[si] < 0) continue;
            const Matrix& pv = t.value(f.p_col[si]);
            for (size_t j = 0; j < aug.scored[si].cands.size(); ++j)
                aug.scored[si].cands[j].p = pv(static_cast<int>(j), 0);
        }
    }
    return f;
}

// Real subgraph edges (canonical orientation) with at least one endpoint
// labeled minority; only training-split labels are visible. One list per
// scored set.
inline std::vector<std::vector<std::pair<int, int>>> real_minority_edges(const GanModel& model,
                                                                         const Subgraph& sub) {
    const HeteroGraph& g = *sub.parent;
    const int ct = model.classified_type;
    const auto& nd = g.nodes[static_cast<size_t>(ct)];
    auto minority = [&](int type, int local) {
        if (type != ct) return false;
        const int gid = sub.global_ids[static_cast<size_t>(type)][static_cast<size_t>(local)];
        return nd.labels[static_cast<size_t>(gid)] == g.positive_class &&
               nd.split[static_cast<size_t>(gid)] == Split::train;
    };
    std::vector<std::vector<std::pair<int, int>>> gamma;
    for (int et : model.scored) {
        const auto& es = model.schema.edge_types[static_cast<size_t>(et)];
        std::vector<std::pair<int, int>> list;
        for (const auto& pr : sub.edges[static_cast<size_t>(et)]) {
            if (es.undirected && pr.first > pr.second) continue; // canonical representative
            if (minority(es.src_type, pr.first) || minority(es.dst_type, pr.second)) list.push_back(pr);
        }
        gamma.push_back(std::move(list));
    }
    return gamma;
}

// Edge embeddings for explicit local pairs of one edge type, rows gathered
// from the augmented-view hidden states.
inline ValueId edge_embeddings(Tape& t, const GanModel& model, int edge_type,
                               const std::vector<std::pair<int, int>>& pairs, const std::vector<ValueId>& H) {
    const auto& es = model.schema.edge_types[static_cast<size_t>(edge_type)];
    std::vector<int> lidx, ridx;
    lidx.reserve(pairs.size());
    ridx.reserve(pairs.size());
    for (const auto& pr : pairs) {
        lidx.push_back(pr.first);
        ridx.push_back(pr.second);
    }
    return t.concat_cols(t.gather_rows(H[static_cast<size_t>(es.src_type)], std::move(lidx)),
                         t.gather_rows(H[static_cast<size_t>(es.dst_type)], std::move(ridx)));
}

// sum_e w_e * log(1 - d_e), taking the log term directly (a log-probability
// column); pass w_col = -1 for unweighted.
inline ValueId fake_edge_score_sum(Tape& t, ValueId log_not_d_col, ValueId w_col) {
    return t.sum_all(w_col >= 0 ? t.mul(w_col, log_not_d_col) : log_not_d_col);
}

// sum_e log d_e, taking the log term directly.
inline ValueId real_edge_score_sum(Tape& t, ValueId log_d_col) { return t.sum_all(log_d_col); }

// Mean over all retained candidates of w_e * log(1 - D(h_e)), the descent
// target for the generator triple. Surrogate mode weights by the (taped)
// preservation likelihood so the dropper receives adversarial gradient;
// literal mode uses w_e = 1. Discriminator weights are recorded frozen.
inline ValueId generator_loss(Tape& t, const GanModel& model, const AugmentedSubgraph& aug, const GanForward& f,
                              bool surrogate) {
    long total = 0;
    ValueId acc = -1;
    for (size_t si = 0; si < aug.scored.size(); ++si) {
        const auto& set = aug.scored[si];
        std::vector<int> ridx;
        for (size_t j = 0; j < set.cands.size(); ++j)
            if (set.cands[j].retained) ridx.push_back(static_cast<int>(j));
        if (ridx.empty()) continue;
        total += static_cast<long>(ridx.size());
        const ValueId he = t.gather_rows(f.cand_he[si], ridx);
        const ValueId lnd = discriminate_log_col(t, model, set.edge_type, he, kFakeCol, /*frozen=*/true);
        const ValueId w = surrogate ? t.gather_rows(f.p_col[si], std::move(ridx)) : -1;
        const ValueId s = fake_edge_score_sum(t, lnd, w);
        acc = acc < 0 ? s : t.add(acc, s);
    }
    if (total == 0) throw DomainError("generator loss undefined: no retained candidate edges");
    return t.affine(acc, 1.0 / static_cast<double>(total), 0.0);
}

// Detached edge embeddings per scored set for a discriminator update.
struct DiscLossInput {
    std::vector<Matrix> real_he; // Gamma rows
    std::vector<Matrix> fake_he; // retained candidate rows
};

// Per scored type: mean log D over real edges plus mean log(1-D) over
// retained fakes; types averaged with equal weight. Embeddings enter as
// constants, so gradients reach only discriminator parameters. The trainer
// ascends by descending on the negated value.
inline ValueId discriminator_loss(Tape& t, const GanModel& model, const DiscLossInput& in) {
    if (in.real_he.size() != model.scored.size() || in.fake_he.size() != model.scored.size())
        throw ContractError("discriminator_loss: per-type input count mismatch");
    long n_real = 0, n_fake = 0;
    for (size_t si = 0; si < model.scored.size(); ++si) {
        n_real += in.real_he[si].rows;
        n_fake += in.fake_he[si].rows;
    }
    if (n_real == 0 || n_fake == 0)
        throw DomainError("discriminator loss undefined: a class of edges is empty");

    ValueId acc = -1;
    int contributing = 0;
    for (size_t si = 0; si < model.scored.size(); ++si) {
        const int et = model.scored[si];
        ValueId term = -1;
        if (in.real_he[si].rows > 0) {
            const ValueId ld = discriminate_log_col(t, model, et, t.constant(in.real_he[si]), kRealCol, false);
            term = t.affine(real_edge_score_sum(t, ld), 1.0 / in.real_he[si].rows, 0.0);
        }
        if (in.fake_he[si].rows > 0) {
            const ValueId lnd =
                discriminate_log_col(t, model, et, t.constant(in.fake_he[si]), kFakeCol, false);
            const ValueId ft = t.affine(fake_edge_score_sum(t, lnd, -1), 1.0 / in.fake_he[si].rows, 0.0);
            term = term < 0 ? ft : t.add(term, ft);
        }
        if (term >= 0) {
            ++contributing;
            acc = acc < 0 ? term : t.add(acc, term);
        }
    }
    return t.affine(acc, 1.0 / contributing, 0.0);
}

} // namespace flashgan
