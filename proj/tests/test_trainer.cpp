#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "flashgan/dataio.hpp"
#include "flashgan/trainer.hpp"

namespace fg = flashgan;
namespace fs = std::filesystem;

namespace {

fg::SynthConfig trainer_graph_cfg(uint64_t seed) {
    fg::SynthConfig cfg;
    cfg.n_users = 60;
    cfg.n_products = 10;
    cfg.fraud_fraction = 0.3;
    cfg.user_dim = 5;
    cfg.product_dim = 3;
    cfg.mu = 1.0;
    cfg.p_uu_intra = 0.10;
    cfg.p_uu_inter = 0.04;
    cfg.up_rate_minority = 2.0;
    cfg.up_rate_majority = 2.0;
    cfg.minority_product_frac = 0.5;
    cfg.p_pp = 0.05;
    cfg.seed = seed;
    return cfg;
}

fg::GanDims tiny_dims() {
    fg::GanDims d;
    d.noise_dim = 4;
    d.gen_hidden = 8;
    d.gen_layers = 2;
    d.mixer_hidden = 8;
    d.mixer_out = 4;
    d.mixer_layers = 2;
    d.dropper_hidden = 8;
    d.dropper_layers = 2;
    d.disc_hidden = 8;
    d.disc_layers = 2;
    return d;
}

fg::TrainConfig quick_train_cfg(uint64_t seed) {
    fg::TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 3;
    cfg.subgraphs_per_epoch = 3;
    cfg.synth_per_subgraph = 2;
    cfg.gen_update_period = 1;
    cfg.disc_update_period = 2;
    cfg.checkpoint_period = 1000;
    cfg.dims = tiny_dims();
    return cfg;
}

bool params_equal(const fg::ParamStore& a, const fg::ParamStore& b) {
    auto na = a.names(), nb = b.names();
    if (na != nb) return false;
    for (const auto& n : na)
        if (a.get(n).a != b.get(n).a) return false;
    return true;
}

bool subset_equal(const fg::ParamStore& a, const fg::ParamStore& b, const std::vector<std::string>& names) {
    for (const auto& n : names)
        if (a.get(n).a != b.get(n).a) return false;
    return true;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("fg_trainer_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("one collection round yields the requested batch under a raised threshold") {
    fg::HeteroGraph g = fg::generate(trainer_graph_cfg(21));
    fg::TrainConfig cfg = quick_train_cfg(5);
    cfg.threshold.initial = 0.10;
    cfg.threshold.lower = 0.05;
    fg::GanModel model = fg::GanModel::build(g.schema, cfg.dims, cfg.seed);

    fg::ThresholdState st = fg::ThresholdState::init(cfg.threshold, model.scored.size());
    long counter = 0;
    fg::CollectStats stats;
    auto batch = fg::collect_subgraphs(g, model, st, cfg, 1, counter, stats);

    REQUIRE(static_cast<int>(batch.size()) == cfg.subgraphs_per_epoch);
    for (const auto& item : batch) {
        REQUIRE(item.aug.retained_pairs() >= 1);
        REQUIRE(item.loss_value == item.tape->scalar(item.loss_g));
    }
    // Entry raises every threshold by one increment exactly; the handful of
    // organic failures stays below the decrement trigger, so the thresholds
    // hold there for the whole round and the counters obey the attempt law.
    REQUIRE(stats.failures < cfg.threshold.fail_threshold);
    for (double e : st.eta) REQUIRE(e == 0.10 + cfg.threshold.increment);
    REQUIRE(st.failures == stats.failures);
    REQUIRE(stats.attempts == static_cast<long>(batch.size()) + stats.failures);
    REQUIRE(stats.attempts == counter);

    // The attempt counter keeps advancing across rounds of the same epoch.
    const long after_first = counter;
    fg::CollectStats stats2;
    auto batch2 = fg::collect_subgraphs(g, model, st, cfg, 1, counter, stats2);
    REQUIRE(counter == after_first + stats2.attempts);
    REQUIRE(batch2.size() == batch.size());
}

TEST_CASE("collection is a pure function of graph, model, state, and seed") {
    fg::HeteroGraph g = fg::generate(trainer_graph_cfg(22));
    fg::TrainConfig cfg = quick_train_cfg(6);
    fg::GanModel model = fg::GanModel::build(g.schema, cfg.dims, cfg.seed);

    auto run = [&]() {
        fg::ThresholdState st = fg::ThresholdState::init(cfg.threshold, model.scored.size());
        long counter = 0;
        fg::CollectStats stats;
        return fg::collect_subgraphs(g, model, st, cfg, 1, counter, stats);
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].aug.base.center_global == b[i].aug.base.center_global);
        REQUIRE(a[i].aug.retained_pairs() == b[i].aug.retained_pairs());
        REQUIRE(a[i].loss_value == b[i].loss_value);
    }
}

TEST_CASE("an unreachable retention threshold stalls collection") {
    fg::HeteroGraph g = fg::generate(trainer_graph_cfg(23));
    fg::TrainConfig cfg = quick_train_cfg(7);
    cfg.subgraphs_per_epoch = 1;
    cfg.collection_attempt_factor = 1;
    cfg.threshold.initial = 0.9999;
    cfg.threshold.lower = 0.9999;
    cfg.threshold.upper = 0.9999;
    cfg.threshold.fail_threshold = 2;
    fg::GanModel model = fg::GanModel::build(g.schema, cfg.dims, cfg.seed);

    fg::ThresholdState st = fg::ThresholdState::init(cfg.threshold, model.scored.size());
    long counter = 0;
    fg::CollectStats stats;
    REQUIRE_THROWS_AS(fg::collect_subgraphs(g, model, st, cfg, 1, counter, stats), fg::StallError);
    REQUIRE_THROWS_AS(fg::train(g, cfg), fg::StallError);
}

TEST_CASE("training history has one row per epoch with gated loss columns") {
    fg::HeteroGraph g = fg::generate(trainer_graph_cfg(24));
    fg::TrainConfig cfg = quick_train_cfg(8);

    fg::TrainResult res = fg::train(g, cfg);
    REQUIRE(res.history.scored_names == std::vector<std::string>{"uu", "up"});
    REQUIRE(static_cast<int>(res.history.rows.size()) == cfg.epochs);

    fg::CsvTable t = fg::history_csv(res.history);
    REQUIRE(t.header == std::vector<std::string>{"epoch", "loss_g", "loss_d", "eta_uu", "eta_up",
                                                 "failures", "retained_edges", "checkpoint"});
    for (int e = 1; e <= cfg.epochs; ++e) {
        const auto& row = res.history.rows[static_cast<size_t>(e - 1)];
        REQUIRE(row.epoch == e);
        REQUIRE(row.retained_pairs >= cfg.subgraphs_per_epoch);
        REQUIRE(row.eta.size() == 2);
        // The adversary column fills only on its update epochs.
        if (e % cfg.disc_update_period != 0) REQUIRE(!row.has_loss_d);
        REQUIRE(row.checkpoint.empty()); // period larger than the run
        REQUIRE(t.rows[static_cast<size_t>(e - 1)][0] == std::to_string(e));
        REQUIRE(t.rows[static_cast<size_t>(e - 1)][2].empty() == !row.has_loss_d);
    }
    // Thresholds rise by one increment per collection round while no
    // decrement fires, so the trace is monotone under an easy regime.
    REQUIRE(res.history.rows[1].eta[0] >= res.history.rows[0].eta[0]);
}

TEST_CASE("training twice from one seed is bit-identical, other seeds differ") {
    fg::HeteroGraph g = fg::generate(trainer_graph_cfg(25));
    fg::TrainConfig cfg = quick_train_cfg(9);

    fg::TrainResult a = fg::train(g, cfg);
    fg::TrainResult b = fg::train(g, cfg);
    REQUIRE(params_equal(a.model.params, b.model.params));
    REQUIRE(a.thresholds.eta == b.thresholds.eta);
    for (size_t i = 0; i < a.history.rows.size(); ++i) {
        REQUIRE(a.history.rows[i].loss_g == b.history.rows[i].loss_g);
        REQUIRE(a.history.rows[i].has_loss_d == b.history.rows[i].has_loss_d);
        if (a.history.rows[i].has_loss_d)
            REQUIRE(a.history.rows[i].loss_d == b.history.rows[i].loss_d);
    }

    cfg.seed = 10;
    fg::TrainResult c = fg::train(g, cfg);
    REQUIRE(!params_equal(a.model.params, c.model.params));
}

TEST_CASE("update periods gate which networks move") {
    fg::HeteroGraph g = fg::generate(trainer_graph_cfg(26));
    fg::TrainConfig cfg = quick_train_cfg(11);
    fg::GanModel initial = fg::GanModel::build(g.schema, cfg.dims, cfg.seed);

    // No period divides any epoch: all parameters stay at initialization.
    cfg.epochs = 1;
    cfg.gen_update_period = 2;
    cfg.disc_update_period = 3;
    fg::TrainResult frozen = fg::train(g, cfg);
    REQUIRE(params_equal(frozen.model.params, initial.params));
    REQUIRE(frozen.adam_gen.step_count() == 0);
    REQUIRE(frozen.adam_disc.step_count() == 0);

    // Generator-only epochs leave the discriminators untouched.
    cfg.epochs = 2;
    cfg.gen_update_period = 1;
    cfg.disc_update_period = 5;
    fg::TrainResult gen_only = fg::train(g, cfg);
    REQUIRE(!subset_equal(gen_only.model.params, initial.params, gen_only.model.gen_names));
    REQUIRE(subset_equal(gen_only.model.params, initial.params, gen_only.model.disc_names));
    REQUIRE(gen_only.adam_gen.step_count() == 2);
    REQUIRE(gen_only.adam_disc.step_count() == 0);

    // Discriminator-only epochs leave the generator untouched. A wider batch
    // guarantees some subgraph carries a visible minority edge to learn from.
    cfg.gen_update_period = 5;
    cfg.disc_update_period = 2;
    cfg.subgraphs_per_epoch = 8;
    fg::TrainResult disc_only = fg::train(g, cfg);
    REQUIRE(subset_equal(disc_only.model.params, initial.params, disc_only.model.gen_names));
    REQUIRE(!subset_equal(disc_only.model.params, initial.params, disc_only.model.disc_names));
    REQUIRE(disc_only.adam_gen.step_count() == 0);
    REQUIRE(disc_only.adam_disc.step_count() == 1);
    REQUIRE(disc_only.history.rows[1].has_loss_d);
}

TEST_CASE("checkpoints capture the final state exactly") {
    fg::HeteroGraph g = fg::generate(trainer_graph_cfg(27));
    fg::TrainConfig cfg = quick_train_cfg(12);
    cfg.epochs = 2;
    cfg.checkpoint_period = 1;
    TempDir dir("ckpt");

    fg::TrainResult res = fg::train(g, cfg, dir.path);
    for (const char* f : {"checkpoint_epoch_0001.bin", "checkpoint_epoch_0002.bin", "generator.bin",
                          "discriminator.bin", "history.csv"})
        REQUIRE(fs::exists(dir.path / f));
    REQUIRE(res.history.rows[0].checkpoint == "checkpoint_epoch_0001.bin");
    REQUIRE(res.history.rows[1].checkpoint == "checkpoint_epoch_0002.bin");

    // The generator file restores the trained generator bit for bit.
    fg::Checkpoint gen = fg::load_checkpoint(dir.path / "generator.bin");
    fg::GanModel fresh = fg::GanModel::build(g.schema, cfg.dims, 999);
    fg::restore_params(fresh.params, gen.tensors);
    REQUIRE(subset_equal(fresh.params, res.model.params, res.model.gen_names));
    REQUIRE(gen.has_thresholds);
    REQUIRE(gen.eta == res.thresholds.eta);
    REQUIRE(gen.threshold_failures == res.thresholds.failures);

    fg::Checkpoint disc = fg::load_checkpoint(dir.path / "discriminator.bin");
    fg::restore_params(fresh.params, disc.tensors);
    REQUIRE(subset_equal(fresh.params, res.model.params, res.model.disc_names));

    // The last periodic snapshot equals the final full state, including the
    // optimizer moments, and survives a save/load/save byte cycle.
    fg::Checkpoint last = fg::load_checkpoint(dir.path / "checkpoint_epoch_0002.bin");
    fg::GanModel full = fg::GanModel::build(g.schema, cfg.dims, 999);
    fg::restore_params(full.params, last.tensors);
    REQUIRE(params_equal(full.params, res.model.params));
    REQUIRE(last.adam.size() == 2);
    REQUIRE(last.adam[0].name == "gen");
    REQUIRE(last.adam[1].name == "disc");
    REQUIRE(last.adam[0].t == res.adam_gen.step_count());
    REQUIRE(last.adam[1].t == res.adam_disc.step_count());
    for (const auto& [name, m] : last.adam[0].m)
        REQUIRE(m.a == res.adam_gen.moments1().at(name).a);

    fg::save_checkpoint(dir.path / "resaved.bin", last);
    REQUIRE(file_bytes(dir.path / "resaved.bin") == file_bytes(dir.path / "checkpoint_epoch_0002.bin"));

    // Restoring Adam moments into a fresh optimizer reproduces the counters.
    fg::AdamState re_gen(cfg.adam_gen, fresh.params, fresh.gen_names);
    fg::restore_adam(re_gen, last.adam[0]);
    REQUIRE(re_gen.step_count() == res.adam_gen.step_count());
}

TEST_CASE("repeated training runs write byte-identical outputs") {
    fg::HeteroGraph g = fg::generate(trainer_graph_cfg(28));
    fg::TrainConfig cfg = quick_train_cfg(13);
    cfg.epochs = 2;
    cfg.checkpoint_period = 2;
    TempDir a("rerun_a"), b("rerun_b");
    fg::train(g, cfg, a.path);
    fg::train(g, cfg, b.path);
    for (const char* f : {"history.csv", "generator.bin", "discriminator.bin", "checkpoint_epoch_0002.bin"})
        REQUIRE(file_bytes(a.path / f) == file_bytes(b.path / f));
}

TEST_CASE("a zero-epoch run leaves initialization untouched but still saves") {
    fg::HeteroGraph g = fg::generate(trainer_graph_cfg(29));
    fg::TrainConfig cfg = quick_train_cfg(14);
    cfg.epochs = 0;
    TempDir dir("zero");
    fg::TrainResult res = fg::train(g, cfg, dir.path);
    REQUIRE(res.history.rows.empty());
    REQUIRE(params_equal(res.model.params, fg::GanModel::build(g.schema, cfg.dims, cfg.seed).params));
    REQUIRE(fs::exists(dir.path / "generator.bin"));
    REQUIRE(fs::exists(dir.path / "history.csv"));
}

TEST_CASE("trainer configuration survives the JSON round trip") {
    fg::TrainConfig cfg = quick_train_cfg(15);
    cfg.surrogate_loss = false;
    cfg.adam_gen.lr = 0.002;
    cfg.adam_disc.lr = 0.003;
    cfg.threshold.fail_threshold = 7;
    fg::TrainConfig back = fg::train_config_from_json(fg::train_config_to_json(cfg), "test");
    REQUIRE(back.seed == cfg.seed);
    REQUIRE(back.epochs == cfg.epochs);
    REQUIRE(back.subgraphs_per_epoch == cfg.subgraphs_per_epoch);
    REQUIRE(back.synth_per_subgraph == cfg.synth_per_subgraph);
    REQUIRE(back.gen_update_period == cfg.gen_update_period);
    REQUIRE(back.disc_update_period == cfg.disc_update_period);
    REQUIRE(back.checkpoint_period == cfg.checkpoint_period);
    REQUIRE(back.collection_attempt_factor == cfg.collection_attempt_factor);
    REQUIRE(back.surrogate_loss == cfg.surrogate_loss);
    REQUIRE(back.adam_gen.lr == cfg.adam_gen.lr);
    REQUIRE(back.adam_disc.lr == cfg.adam_disc.lr);
    REQUIRE(back.threshold.fail_threshold == cfg.threshold.fail_threshold);
    REQUIRE(back.dims.noise_dim == cfg.dims.noise_dim);

    fg::json j = fg::train_config_to_json(cfg);
    j["typo_key"] = 1;
    REQUIRE_THROWS_AS(fg::train_config_from_json(j, "test"), fg::ConfigError);

    fg::TrainConfig bad = cfg;
    bad.subgraphs_per_epoch = 0;
    REQUIRE_THROWS_AS(bad.validate(), fg::ConfigError);
    bad = cfg;
    bad.gen_iters = 0;
    REQUIRE_THROWS_AS(bad.validate(), fg::ConfigError);
}
