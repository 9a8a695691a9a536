#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "flashgan/augment.hpp"
#include "flashgan/dataio.hpp"
#include "flashgan/jsonutil.hpp"

namespace fg = flashgan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("fg_cli_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args, const fs::path& log_dir) {
    const std::string cmd = std::string(FLASHGAN_CLI_PATH) + " " + args + " > " +
                            (log_dir / "out.txt").string() + " 2> " + (log_dir / "err.txt").string();
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

long line_count(const std::string& text) {
    long n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

void write_gen_config(const fs::path& p, uint64_t seed) {
    fg::json j{{"n_users", 100},       {"n_products", 12},
               {"fraud_fraction", 0.2}, {"user_dim", 5},
               {"product_dim", 3},      {"mu", 1.5},
               {"p_uu_intra", 0.08},    {"p_uu_inter", 0.03},
               {"up_rate_minority", 2.0}, {"up_rate_majority", 2.0},
               {"minority_product_frac", 0.4}, {"p_pp", 0.05},
               {"split_train", 0.7},    {"split_val", 0.2},
               {"split_test", 0.1},     {"seed", seed}};
    fg::write_text_file(p, j.dump(2));
}

void write_train_config(const fs::path& p, int epochs) {
    fg::json dims{{"noise_dim", 4},     {"gen_hidden", 8},  {"gen_layers", 2}, {"mixer_hidden", 8},
                  {"mixer_out", 4},     {"mixer_layers", 2}, {"dropper_hidden", 8},
                  {"dropper_layers", 2}, {"disc_hidden", 8}, {"disc_layers", 2}};
    fg::json j{{"seed", 1},
               {"epochs", epochs},
               {"subgraphs_per_epoch", 3},
               {"synth_per_subgraph", 2},
               {"gen_update_period", 1},
               {"disc_update_period", 2},
               {"gen_iters", 1},
               {"checkpoint_period", 100},
               {"collection_attempt_factor", 10},
               {"surrogate_loss", true},
               {"adam_gen", {{"lr", 0.001}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}},
               {"adam_disc", {{"lr", 0.001}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}},
               {"threshold",
                {{"initial", 0.49},
                 {"increment", 0.04},
                 {"decrement", 0.005},
                 {"lower", 0.49},
                 {"upper", 0.95},
                 {"fail_threshold", 10}}},
               {"dims", dims}};
    fg::write_text_file(p, j.dump(2));
}

void write_eval_config(const fs::path& p) {
    fg::json j{{"classifier",
                {{"hidden", 8},
                 {"embed", 8},
                 {"layers", 2},
                 {"epochs", 10},
                 {"seed", 0},
                 {"adam", {{"lr", 0.01}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}},
                 {"selection_metric", "auc_prc"}}},
               {"tau", 0.5}};
    fg::write_text_file(p, j.dump(2));
}

} // namespace

TEST_CASE("graph generation is reproducible and loadable from the command line") {
    TempDir dir("gen");
    write_gen_config(dir.path / "gen.json", 5);

    REQUIRE(run_cli("gen-data --config " + (dir / "gen.json") + " --out " + (dir / "g1"), dir.path) == 0);
    fg::HeteroGraph g = fg::load_graph(dir / "g1");
    REQUIRE(g.node_count(0) == 100);
    REQUIRE(g.node_count(1) == 12);

    REQUIRE(run_cli("gen-data --config " + (dir / "gen.json") + " --out " + (dir / "g2"), dir.path) == 0);
    for (const char* f : {"manifest.json", "nodes_user.csv", "nodes_product.csv", "edges_uu.csv",
                          "edges_up.csv", "edges_pp.csv", "stats.json"})
        REQUIRE(slurp(dir.path / "g1" / f) == slurp(dir.path / "g2" / f));

    // The seed flag overrides the config and changes the data.
    REQUIRE(run_cli("gen-data --config " + (dir / "gen.json") + " --seed 6 --out " + (dir / "g3"),
                    dir.path) == 0);
    REQUIRE(slurp(dir.path / "g1" / "nodes_user.csv") != slurp(dir.path / "g3" / "nodes_user.csv"));
}

TEST_CASE("bad invocations map to the usage exit code") {
    TempDir dir("usage");
    write_gen_config(dir.path / "gen.json", 5);

    // Unknown config key.
    fg::json j = fg::parse_json_file(dir / "gen.json");
    j["typo_key"] = 1;
    fg::write_text_file(dir.path / "bad.json", j.dump(2));
    REQUIRE(run_cli("gen-data --config " + (dir / "bad.json") + " --out " + (dir / "g"), dir.path) == 2);
    REQUIRE(slurp(dir.path / "err.txt").find("typo_key") != std::string::npos);

    // Missing input graph, unknown method, missing checkpoint, no subcommand.
    REQUIRE(run_cli("train --graph " + (dir / "nowhere") + " --out " + (dir / "r"), dir.path) == 2);
    REQUIRE(run_cli("gen-data --config " + (dir / "gen.json") + " --out " + (dir / "g"), dir.path) == 0);
    REQUIRE(run_cli("augment --graph " + (dir / "g") + " --method bogus --alpha 1.0 --out " + (dir / "a"),
                    dir.path) == 2);
    REQUIRE(run_cli("augment --graph " + (dir / "g") + " --method flashgan --alpha 1.0 --out " + (dir / "a"),
                    dir.path) == 2);
    REQUIRE(run_cli("", dir.path) == 2);
    REQUIRE(run_cli("no-such-command", dir.path) == 2);
}

TEST_CASE("training from the command line is reproducible") {
    TempDir dir("train");
    write_gen_config(dir.path / "gen.json", 7);
    write_train_config(dir.path / "train.json", 3);
    REQUIRE(run_cli("gen-data --config " + (dir / "gen.json") + " --out " + (dir / "g"), dir.path) == 0);

    REQUIRE(run_cli("train --graph " + (dir / "g") + " --config " + (dir / "train.json") + " --out " +
                        (dir / "r1"),
                    dir.path) == 0);
    const std::string hist = slurp(dir.path / "r1" / "history.csv");
    REQUIRE(line_count(hist) == 4); // header + one row per epoch
    REQUIRE(hist.rfind("epoch,loss_g,loss_d,eta_uu,eta_up,failures,retained_edges,checkpoint", 0) == 0);
    REQUIRE(fs::exists(dir.path / "r1" / "generator.bin"));
    REQUIRE(fs::exists(dir.path / "r1" / "discriminator.bin"));

    REQUIRE(run_cli("train --graph " + (dir / "g") + " --config " + (dir / "train.json") + " --out " +
                        (dir / "r2"),
                    dir.path) == 0);
    REQUIRE(slurp(dir.path / "r2" / "history.csv") == hist);
    REQUIRE(slurp(dir.path / "r2" / "generator.bin") == slurp(dir.path / "r1" / "generator.bin"));

    // The epochs flag overrides the config.
    REQUIRE(run_cli("train --graph " + (dir / "g") + " --config " + (dir / "train.json") +
                        " --epochs 1 --out " + (dir / "r3"),
                    dir.path) == 0);
    REQUIRE(line_count(slurp(dir.path / "r3" / "history.csv")) == 2);
}

TEST_CASE("an impossible training threshold exits with the stall code") {
    TempDir dir("stall");
    write_gen_config(dir.path / "gen.json", 8);
    REQUIRE(run_cli("gen-data --config " + (dir / "gen.json") + " --out " + (dir / "g"), dir.path) == 0);

    write_train_config(dir.path / "train.json", 2);
    fg::json t = fg::parse_json_file(dir / "train.json");
    t["subgraphs_per_epoch"] = 1;
    t["collection_attempt_factor"] = 1;
    t["threshold"]["initial"] = 0.9999;
    t["threshold"]["lower"] = 0.9999;
    t["threshold"]["upper"] = 0.9999;
    t["threshold"]["fail_threshold"] = 1;
    fg::write_text_file(dir.path / "stall.json", t.dump(2));
    REQUIRE(run_cli("train --graph " + (dir / "g") + " --config " + (dir / "stall.json") + " --out " +
                        (dir / "r"),
                    dir.path) == 4);
}

TEST_CASE("augmentation from the command line hits the ratio for every method") {
    TempDir dir("aug");
    write_gen_config(dir.path / "gen.json", 9);
    write_train_config(dir.path / "train.json", 2);
    REQUIRE(run_cli("gen-data --config " + (dir / "gen.json") + " --out " + (dir / "g"), dir.path) == 0);
    REQUIRE(run_cli("train --graph " + (dir / "g") + " --config " + (dir / "train.json") + " --out " +
                        (dir / "run"),
                    dir.path) == 0);

    const fg::HeteroGraph g = fg::load_graph(dir / "g");
    const long M = fg::class_count(g, g.majority_class, fg::Split::train);
    const double alpha = 0.6;

    REQUIRE(run_cli("augment --graph " + (dir / "g") + " --method oversample --alpha 0.6 --seed 2 --out " +
                        (dir / "a_os"),
                    dir.path) == 0);
    REQUIRE(run_cli("augment --graph " + (dir / "g") + " --method smote --knn 3 --alpha 0.6 --seed 2 --out " +
                        (dir / "a_sm"),
                    dir.path) == 0);
    REQUIRE(run_cli("augment --graph " + (dir / "g") + " --method flashgan --checkpoint " +
                        (dir / "run") + "/generator.bin --alpha 0.6 --k 3 --seed 2 --out " + (dir / "a_fg"),
                    dir.path) == 0);

    for (const char* out : {"a_os", "a_sm", "a_fg"}) {
        const fg::HeteroGraph a = fg::load_graph(dir / out);
        REQUIRE(fg::class_count(a, a.positive_class, fg::Split::train) ==
                std::llround(alpha * static_cast<double>(M)));
        REQUIRE(fs::exists(dir.path / out / "provenance.csv"));
        const auto prov = fg::provenance_from_csv(fg::read_csv(dir.path / out / "provenance.csv"), out);
        REQUIRE(!prov.empty());
    }

    // A target below the current ratio is a domain problem, not a crash.
    REQUIRE(run_cli("augment --graph " + (dir / "g") + " --method oversample --alpha 0.01 --out " +
                        (dir / "a_low"),
                    dir.path) == 3);

    // Determinism: the same augment invocation writes identical bytes.
    REQUIRE(run_cli("augment --graph " + (dir / "g") + " --method flashgan --checkpoint " +
                        (dir / "run") + "/generator.bin --alpha 0.6 --k 3 --seed 2 --out " + (dir / "a_fg2"),
                    dir.path) == 0);
    for (const char* f : {"nodes_user.csv", "edges_uu.csv", "edges_up.csv", "provenance.csv"})
        REQUIRE(slurp(dir.path / "a_fg" / f) == slurp(dir.path / "a_fg2" / f));
}

TEST_CASE("evaluation reports are complete and bit-stable across reruns") {
    TempDir dir("eval");
    write_gen_config(dir.path / "gen.json", 10);
    write_eval_config(dir.path / "eval.json");
    REQUIRE(run_cli("gen-data --config " + (dir / "gen.json") + " --out " + (dir / "g"), dir.path) == 0);
    REQUIRE(run_cli("augment --graph " + (dir / "g") + " --method oversample --alpha 0.8 --seed 3 --out " +
                        (dir / "a"),
                    dir.path) == 0);

    const std::string cmd = "evaluate " + (dir / "g") + " " + (dir / "a") + " " + (dir / "g") +
                            "::reweight --config " + (dir / "eval.json") + " --seeds 0,1 --out ";
    REQUIRE(run_cli(cmd + (dir / "rep1"), dir.path) == 0);

    const fg::json rep = fg::parse_json_file(dir.path / "rep1" / "report.json");
    REQUIRE(rep["baseline"] == "g");
    REQUIRE(rep["seeds"] == fg::json::array({0, 1}));
    REQUIRE(rep["partial"] == false);
    REQUIRE(rep["variants"].size() == 3);
    REQUIRE(rep["variants"][0]["name"] == "g");
    REQUIRE(rep["variants"][1]["name"] == "a");
    REQUIRE(rep["variants"][2]["name"] == "g+reweight");
    REQUIRE(rep["variants"][2]["reweight"] == true);
    for (const auto& jv : rep["variants"]) {
        REQUIRE(jv["cells"].size() == 2);
        for (const char* key : {"auc_prc", "auc_roc", "f_score", "accuracy", "precision", "recall"}) {
            REQUIRE(jv["mean"].contains(key));
            REQUIRE(jv["stdev"].contains(key));
        }
        for (const auto& cell : jv["cells"]) {
            REQUIRE(cell["auc_prc"].get<double>() >= 0.0);
            REQUIRE(cell["auc_prc"].get<double>() <= 1.0);
        }
    }
    // Non-baseline variants carry the size-normalized comparison.
    REQUIRE(rep["variants"][1].contains("auc_prc_improvement"));
    REQUIRE(rep["variants"][1]["size_increment_frac"].get<double>() > 0.0);

    const std::string csv = slurp(dir.path / "rep1" / "report.csv");
    REQUIRE(csv.rfind("variant,auc_prc,auc_roc,f_score,accuracy,precision,recall,byte_size,"
                      "auc_prc_improvement,size_increment_frac,improvement_per_increment",
                      0) == 0);
    REQUIRE(line_count(csv) == 4);

    REQUIRE(run_cli(cmd + (dir / "rep2"), dir.path) == 0);
    REQUIRE(slurp(dir.path / "rep2" / "report.json") == slurp(dir.path / "rep1" / "report.json"));
    REQUIRE(slurp(dir.path / "rep2" / "report.csv") == csv);
}

TEST_CASE("relative paths resolve under the workdir flag") {
    TempDir dir("workdir");
    write_gen_config(dir.path / "gen.json", 11);
    REQUIRE(run_cli("--workdir " + dir.path.string() + " gen-data --config gen.json --out rel_out",
                    dir.path) == 0);
    REQUIRE(fs::exists(dir.path / "rel_out" / "manifest.json"));
}
