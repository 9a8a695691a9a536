#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "flashgan/adam.hpp"
#include "flashgan/checkpoint.hpp"
#include "flashgan/gan.hpp"
#include "flashgan/hetgraph.hpp"
#include "flashgan/jsonutil.hpp"
#include "flashgan/textio.hpp"
#include "flashgan/threshold.hpp"

namespace flashgan {

struct TrainConfig {
    uint64_t seed = 0;
    int epochs = 60;
    int subgraphs_per_epoch = 20; // m
    int synth_per_subgraph = 5;   // k
    int gen_update_period = 1;
    int disc_update_period = 12;
    int gen_iters = 1; // collection+update rounds per epoch
    int checkpoint_period = 30;
    long collection_attempt_factor = 10; // cap = factor * m * fail_threshold per round
    bool surrogate_loss = true;
    AdamConfig adam_gen;
    AdamConfig adam_disc;
    ThresholdConfig threshold;
    GanDims dims;

    void validate() const {
        if (subgraphs_per_epoch < 1) throw ConfigError("train: subgraphs_per_epoch must be >= 1");
        if (synth_per_subgraph < 1) throw ConfigError("train: synth_per_subgraph must be >= 1");
        if (gen_update_period < 1 || disc_update_period < 1) throw ConfigError("train: periods must be >= 1");
        if (gen_iters < 1) throw ConfigError("train: gen_iters must be >= 1");
        if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
        if (checkpoint_period < 1) throw ConfigError("train: checkpoint_period must be >= 1");
        if (collection_attempt_factor < 1) throw ConfigError("train: collection_attempt_factor must be >= 1");
        threshold.validate();
    }
};

inline json train_config_to_json(const TrainConfig& c) {
    return json{{"seed", c.seed},
                {"epochs", c.epochs},
                {"subgraphs_per_epoch", c.subgraphs_per_epoch},
                {"synth_per_subgraph", c.synth_per_subgraph},
                {"gen_update_period", c.gen_update_period},
                {"disc_update_period", c.disc_update_period},
                {"gen_iters", c.gen_iters},
                {"checkpoint_period", c.checkpoint_period},
                {"collection_attempt_factor", c.collection_attempt_factor},
                {"surrogate_loss", c.surrogate_loss},
                {"adam_gen", adam_to_json(c.adam_gen)},
                {"adam_disc", adam_to_json(c.adam_disc)},
                {"threshold", threshold_to_json(c.threshold)},
                {"dims", dims_to_json(c.dims)}};
}

inline TrainConfig train_config_from_json(const json& j, const std::string& ctx) {
    JsonCursor c(j, ctx);
    TrainConfig t;
    t.seed = c.u64("seed", t.seed);
    t.epochs = static_cast<int>(c.integer("epochs", t.epochs));
    t.subgraphs_per_epoch = static_cast<int>(c.integer("subgraphs_per_epoch", t.subgraphs_per_epoch));
    t.synth_per_subgraph = static_cast<int>(c.integer("synth_per_subgraph", t.synth_per_subgraph));
    t.gen_update_period = static_cast<int>(c.integer("gen_update_period", t.gen_update_period));
    t.disc_update_period = static_cast<int>(c.integer("disc_update_period", t.disc_update_period));
    t.gen_iters = static_cast<int>(c.integer("gen_iters", t.gen_iters));
    t.checkpoint_period = static_cast<int>(c.integer("checkpoint_period", t.checkpoint_period));
    t.collection_attempt_factor = c.integer("collection_attempt_factor", t.collection_attempt_factor);
    t.surrogate_loss = c.flag("surrogate_loss", t.surrogate_loss);
    t.adam_gen = adam_from_json(c.sub("adam_gen"), ctx + ".adam_gen", t.adam_gen);
    t.adam_disc = adam_from_json(c.sub("adam_disc"), ctx + ".adam_disc", t.adam_disc);
    t.threshold = threshold_from_json(c.sub("threshold"), ctx + ".threshold");
    t.dims = dims_from_json(c.sub("dims"), ctx + ".dims");
    c.done();
    t.validate();
    return t;
}

struct EpochRow {
    int epoch = 0;
    double loss_g = 0.0;
    bool has_loss_d = false;
    double loss_d = 0.0;
    std::vector<double> eta;
    int failures = 0;
    long retained_pairs = 0;
    std::string checkpoint;
};

struct TrainHistory {
    std::vector<std::string> scored_names;
    std::vector<EpochRow> rows;
};

inline CsvTable history_csv(const TrainHistory& h) {
    CsvTable t;
    t.header = {"epoch", "loss_g", "loss_d"};
    for (const auto& n : h.scored_names) t.header.push_back("eta_" + n);
    t.header.push_back("failures");
    t.header.push_back("retained_edges");
    t.header.push_back("checkpoint");
    for (const auto& r : h.rows) {
        std::vector<std::string> row;
        row.push_back(std::to_string(r.epoch));
        row.push_back(fmt_double(r.loss_g));
        row.push_back(r.has_loss_d ? fmt_double(r.loss_d) : std::string());
        for (double e : r.eta) row.push_back(fmt_double(e));
        row.push_back(std::to_string(r.failures));
        row.push_back(std::to_string(r.retained_pairs));
        row.push_back(r.checkpoint);
        t.rows.push_back(std::move(row));
    }
    return t;
}

// One successfully collected subgraph: the tape still holds the recorded
// forward, so the generator step can run backward without re-recording.
struct CollectedItem {
    AugmentedSubgraph aug;
    std::unique_ptr<Tape> tape;
    ValueId loss_g = -1;
    double loss_value = 0.0;
};

struct CollectStats {
    long attempts = 0;
    int failures = 0;
};

// One collection round: threshold increment at entry, then sampling until m
// subgraphs each keep at least one candidate edge. attempt_counter seeds the
// per-attempt RNG substream and keeps advancing across rounds of one epoch.
inline std::vector<CollectedItem> collect_subgraphs(const HeteroGraph& g, const GanModel& model,
                                                    ThresholdState& st, const TrainConfig& cfg, int epoch,
                                                    long& attempt_counter, CollectStats& stats) {
    round_begin(st);
    const long cap = cfg.collection_attempt_factor * static_cast<long>(cfg.subgraphs_per_epoch) *
                     static_cast<long>(cfg.threshold.fail_threshold);
    std::vector<CollectedItem> batch;
    long attempts_this_round = 0;
    while (static_cast<int>(batch.size()) < cfg.subgraphs_per_epoch) {
        if (attempts_this_round >= cap)
            throw StallError("subgraph collection stalled: " + std::to_string(attempts_this_round) +
                             " attempts yielded " + std::to_string(batch.size()) + " of " +
                             std::to_string(cfg.subgraphs_per_epoch) + " subgraphs");
        ++attempts_this_round;
        ++stats.attempts;
        RngStream rs = RngStream::derive(cfg.seed, {0x5ab9u, static_cast<uint64_t>(epoch),
                                                    static_cast<uint64_t>(attempt_counter++)});
        Subgraph sub = sample_one_hop(g, rs);
        AugmentedSubgraph aug = attach_full(model, std::move(sub), cfg.synth_per_subgraph,
                                            sample_noise(rs, cfg.synth_per_subgraph, model.dims.noise_dim));
        auto tape = std::make_unique<Tape>();
        const GanForward fwd = gan_forward(*tape, model, aug, /*frozen_gen=*/false, /*fill_p=*/true);
        drop_edges(aug, st.eta);
        if (aug.retained_pairs() == 0) {
            record_failure(st);
            ++stats.failures;
            continue;
        }
        record_success(st);
        CollectedItem item;
        item.loss_g = generator_loss(*tape, model, aug, fwd, cfg.surrogate_loss);
        item.loss_value = tape->scalar(item.loss_g);
        item.aug = std::move(aug);
        item.tape = std::move(tape);
        batch.push_back(std::move(item));
    }
    return batch;
}

struct TrainResult {
    GanModel model;
    AdamState adam_gen;
    AdamState adam_disc;
    ThresholdState thresholds;
    TrainHistory history;
};

namespace detail {

inline Matrix take_rows(const Matrix& src, const std::vector<int>& idx) {
    Matrix out(static_cast<int>(idx.size()), src.cols);
    for (size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < src.cols; ++j) out(static_cast<int>(i), j) = src(idx[i], j);
    return out;
}

inline json checkpoint_meta(const char* kind, const HeteroGraph& g, const TrainConfig& cfg, int epoch) {
    json scored_names = json::array();
    for (size_t et = 0; et < g.schema.edge_types.size(); ++et) {
        const auto& es = g.schema.edge_types[et];
        if (es.src_type == g.classified_type || es.dst_type == g.classified_type)
            scored_names.push_back(es.name);
    }
    return json{{"kind", kind},
                {"epoch", epoch},
                {"seed", cfg.seed},
                {"k", cfg.synth_per_subgraph},
                {"surrogate_loss", cfg.surrogate_loss},
                {"dims", dims_to_json(cfg.dims)},
                {"schema", schema_to_json(g.schema)},
                {"scored_types", scored_names}};
}

} // namespace detail

// Fixed-epoch training loop: every epoch collects m subgraphs per generator
// iteration under the threshold controller; the generator descends on the
// summed L_G when due, and the discriminator ascends on the summed L_D over
// the same batch when due, with embeddings recomputed under the just-updated
// generator and detached. Writes history.csv, periodic full snapshots, and
// final generator/discriminator checkpoints when out_dir is given.
inline TrainResult train(const HeteroGraph& g, const TrainConfig& cfg,
                         const std::filesystem::path& out_dir = {}) {
    cfg.validate();
    GanDims dims = cfg.dims;
    TrainResult res{GanModel::build(g.schema, dims, cfg.seed), AdamState(), AdamState(), ThresholdState(),
                    TrainHistory()};
    GanModel& model = res.model;
    res.adam_gen = AdamState(cfg.adam_gen, model.params, model.gen_names);
    res.adam_disc = AdamState(cfg.adam_disc, model.params, model.disc_names);
    res.thresholds = ThresholdState::init(cfg.threshold, model.scored.size());
    for (int et : model.scored)
        res.history.scored_names.push_back(model.schema.edge_types[static_cast<size_t>(et)].name);

    const bool writing = !out_dir.empty();
    if (writing) std::filesystem::create_directories(out_dir);

    auto write_snapshot = [&](int epoch) -> std::string {
        if (!writing) return std::string();
        char name[48];
        std::snprintf(name, sizeof(name), "checkpoint_epoch_%04d.bin", epoch);
        Checkpoint ck;
        ck.meta_json = detail::checkpoint_meta("snapshot", g, cfg, epoch).dump();
        ck.tensors = snapshot_params(model.params);
        ck.adam.push_back(snapshot_adam("gen", res.adam_gen));
        ck.adam.push_back(snapshot_adam("disc", res.adam_disc));
        ck.has_thresholds = true;
        ck.eta = res.thresholds.eta;
        ck.threshold_failures = res.thresholds.failures;
        ck.threshold_cfg = cfg.threshold;
        save_checkpoint(out_dir / name, ck);
        return name;
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        long attempt_counter = 0;
        EpochRow row;
        row.epoch = epoch;
        std::vector<CollectedItem> batch;
        CollectStats stats;
        for (int iter = 0; iter < cfg.gen_iters; ++iter) {
            batch = collect_subgraphs(g, model, res.thresholds, cfg, epoch, attempt_counter, stats);
            double lsum = 0.0;
            for (const auto& item : batch) lsum += item.loss_value;
            row.loss_g = lsum / static_cast<double>(batch.size());
            if (epoch % cfg.gen_update_period == 0) {
                GradStore grads;
                for (auto& item : batch) item.tape->backward(item.loss_g, grads);
                res.adam_gen.step(model.params, grads);
            }
        }

        if (epoch % cfg.disc_update_period == 0) {
            GradStore grads;
            int contributing = 0;
            double lsum = 0.0;
            for (auto& item : batch) {
                Tape vt;
                const GanForward fwd = gan_forward(vt, model, item.aug, /*frozen_gen=*/true, /*fill_p=*/false);
                const auto gamma = real_minority_edges(model, item.aug.base);
                DiscLossInput in;
                long n_real = 0;
                for (size_t si = 0; si < model.scored.size(); ++si) {
                    if (gamma[si].empty())
                        in.real_he.emplace_back(0, 2 * model.dims.mixer_out);
                    else
                        in.real_he.push_back(
                            vt.value(edge_embeddings(vt, model, model.scored[si], gamma[si], fwd.H)));
                    n_real += static_cast<long>(gamma[si].size());
                    std::vector<int> ridx;
                    const auto& cands = item.aug.scored[si].cands;
                    for (size_t ci = 0; ci < cands.size(); ++ci)
                        if (cands[ci].retained) ridx.push_back(static_cast<int>(ci));
                    if (ridx.empty())
                        in.fake_he.emplace_back(0, 2 * model.dims.mixer_out);
                    else
                        in.fake_he.push_back(detail::take_rows(vt.value(fwd.cand_he[si]), ridx));
                }
                if (n_real == 0) continue; // no visible minority edge: this subgraph sits out
                Tape dt;
                const ValueId ld = discriminator_loss(dt, model, in);
                lsum += dt.scalar(ld);
                dt.backward(ld, grads);
                ++contributing;
            }
            if (contributing > 0) {
                res.adam_disc.step(model.params, grads, /*grad_scale=*/-1.0);
                row.has_loss_d = true;
                row.loss_d = lsum / static_cast<double>(contributing);
            }
        }

        row.eta = res.thresholds.eta;
        row.failures = stats.failures;
        long retained = 0;
        for (const auto& item : batch) retained += item.aug.retained_pairs();
        row.retained_pairs = retained;
        if (epoch % cfg.checkpoint_period == 0) row.checkpoint = write_snapshot(epoch);
        res.history.rows.push_back(std::move(row));
    }

    if (writing) {
        Checkpoint gen;
        gen.meta_json = detail::checkpoint_meta("generator", g, cfg, cfg.epochs).dump();
        gen.tensors = snapshot_params(model.params, model.gen_names);
        gen.has_thresholds = true;
        gen.eta = res.thresholds.eta;
        gen.threshold_failures = res.thresholds.failures;
        gen.threshold_cfg = cfg.threshold;
        save_checkpoint(out_dir / "generator.bin", gen);

        Checkpoint disc;
        disc.meta_json = detail::checkpoint_meta("discriminator", g, cfg, cfg.epochs).dump();
        disc.tensors = snapshot_params(model.params, model.disc_names);
        save_checkpoint(out_dir / "discriminator.bin", disc);

        write_csv(out_dir / "history.csv", history_csv(res.history));
    }
    return res;
}

} // namespace flashgan
