// Command-line front end: gen-data, train, augment, evaluate. Every
// subcommand is deterministic given (inputs, config, seed) and drops a
// run_manifest.json next to its outputs. Exit codes: 0 success, 2 usage or
// config problem, 3 domain problem (e.g. nothing to add), 4 stall.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flashgan/augment.hpp"
#include "flashgan/checkpoint.hpp"
#include "flashgan/classifier.hpp"
#include "flashgan/dataio.hpp"
#include "flashgan/evalsuite.hpp"
#include "flashgan/trainer.hpp"

namespace fg = flashgan;
namespace fs = std::filesystem;
using fg::json;

namespace {

uint64_t hash_file(const fs::path& p) { return fg::fnv1a64(fg::read_text_file(p)); }

// Stable fingerprint of a graph container: every regular file except the
// derived sidecars, keyed by filename.
json dir_hashes(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    json out = json::object();
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        if (name == "run_manifest.json") continue;
        out[name] = fg::hex64(hash_file(f));
    }
    return out;
}

void write_run_manifest(const fs::path& out_dir, json manifest) {
    fs::create_directories(out_dir);
    fg::write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
}

std::vector<long> parse_seeds(const std::string& s) {
    std::vector<long> seeds;
    const auto range_at = s.find("..");
    if (range_at != std::string::npos) {
        const long a = fg::parse_long(s.substr(0, range_at), "--seeds");
        const long b = fg::parse_long(s.substr(range_at + 2), "--seeds");
        if (b < a) throw fg::ConfigError("--seeds: descending range");
        for (long v = a; v <= b; ++v) seeds.push_back(v);
        return seeds;
    }
    for (const auto& part : fg::split_csv_line(s))
        if (!part.empty()) seeds.push_back(fg::parse_long(part, "--seeds"));
    if (seeds.empty()) throw fg::ConfigError("--seeds: empty list");
    return seeds;
}

json load_config_or_empty(const std::string& path) {
    if (path.empty()) return json::object();
    return fg::parse_json_file(path);
}

struct GenDataArgs {
    std::string config, out;
    long seed = -1;
};

int cmd_gen_data(const GenDataArgs& a) {
    json cfg_json = load_config_or_empty(a.config);
    if (a.seed >= 0) cfg_json["seed"] = a.seed;
    const fg::SynthConfig cfg = fg::synth_config_from_json(cfg_json, a.config.empty() ? "<defaults>" : a.config);
    const fg::HeteroGraph g = fg::generate(cfg);
    const json stats = fg::save_graph(g, a.out, json{{"generator_config", fg::synth_config_to_json(cfg)}});
    write_run_manifest(a.out, json{{"subcommand", "gen-data"},
                                   {"config", a.config},
                                   {"out_dir", a.out},
                                   {"seed", cfg.seed},
                                   {"input_hashes", a.config.empty() ? json::object()
                                                                     : json{{a.config, fg::hex64(hash_file(a.config))}}}});
    std::cout << stats.dump(2) << "\n";
    return 0;
}

struct TrainArgs {
    std::string graph, config, out;
    long seed = -1;
    long epochs = -1;
};

int cmd_train(const TrainArgs& a) {
    json cfg_json = load_config_or_empty(a.config);
    if (a.seed >= 0) cfg_json["seed"] = a.seed;
    if (a.epochs >= 0) cfg_json["epochs"] = a.epochs;
    const fg::TrainConfig cfg = fg::train_config_from_json(cfg_json, a.config.empty() ? "<defaults>" : a.config);
    const fg::HeteroGraph g = fg::load_graph(a.graph);
    json inputs = dir_hashes(a.graph);
    if (!a.config.empty()) inputs[a.config] = fg::hex64(hash_file(a.config));

    const fg::TrainResult res = fg::train(g, cfg, a.out);
    write_run_manifest(a.out, json{{"subcommand", "train"},
                                   {"config", a.config},
                                   {"graph_dir", a.graph},
                                   {"out_dir", a.out},
                                   {"seed", cfg.seed},
                                   {"input_hashes", std::move(inputs)}});
    double final_g = 0.0;
    if (!res.history.rows.empty()) final_g = res.history.rows.back().loss_g;
    std::cout << "trained " << cfg.epochs << " epochs, final generator loss " << fg::fmt_double(final_g)
              << ", thresholds";
    for (double e : res.thresholds.eta) std::cout << ' ' << fg::fmt_double(e);
    std::cout << "\n";
    return 0;
}

struct AugmentArgs {
    std::string graph, checkpoint, method = "flashgan", out;
    double alpha = 1.0;
    long seed = 0;
    long k = -1;
    long knn = 5;
};

int cmd_augment(const AugmentArgs& a) {
    const fg::HeteroGraph g = fg::load_graph(a.graph);
    json inputs = dir_hashes(a.graph);

    fg::AugmentResult res;
    json meta{{"method", a.method}, {"alpha", a.alpha}, {"seed", a.seed}};
    if (a.method == "oversample") {
        res = fg::oversample(g, a.alpha, static_cast<uint64_t>(a.seed));
    } else if (a.method == "smote") {
        if (a.knn < 1) throw fg::ConfigError("--knn must be >= 1");
        res = fg::smote(g, a.alpha, static_cast<int>(a.knn), static_cast<uint64_t>(a.seed));
        meta["k_nn"] = a.knn;
    } else if (a.method == "flashgan") {
        if (a.checkpoint.empty()) throw fg::ConfigError("--method flashgan requires --checkpoint");
        const fg::Checkpoint ck = fg::load_checkpoint(a.checkpoint);
        inputs[a.checkpoint] = fg::hex64(hash_file(a.checkpoint));
        const json ck_meta = json::parse(ck.meta_json);
        fg::JsonCursor c(ck_meta, a.checkpoint + ":meta");
        if (c.str("kind", "") != "generator")
            throw fg::ConfigError(a.checkpoint + ": not a generator checkpoint");
        const fg::Schema schema = fg::schema_from_json(c.sub("schema"), a.checkpoint + ":schema");
        fg::check_schema_compatible(schema, g.schema, "augment");
        const fg::GanDims dims = fg::dims_from_json(c.sub("dims"), a.checkpoint + ":dims");
        const long k = a.k >= 1 ? a.k : c.integer("k", 5);
        if (!ck.has_thresholds) throw fg::ConfigError(a.checkpoint + ": checkpoint carries no thresholds");
        fg::GanModel model = fg::GanModel::build(schema, dims, /*seed=*/0);
        fg::restore_params(model.params, ck.tensors);
        res = fg::flashgan_augment(g, model, ck.eta, a.alpha, static_cast<int>(k),
                                   static_cast<uint64_t>(a.seed));
        meta["k"] = k;
        json eta = json::array();
        for (double e : ck.eta) eta.push_back(e);
        meta["thresholds"] = std::move(eta);
    } else {
        throw fg::ConfigError("unknown augmentation method '" + a.method + "'");
    }

    const json stats = fg::save_graph(res.graph, a.out, meta);
    fg::write_csv(fs::path(a.out) / "provenance.csv", fg::provenance_csv(res.provenance));
    write_run_manifest(a.out, json{{"subcommand", "augment"},
                                   {"method", a.method},
                                   {"graph_dir", a.graph},
                                   {"checkpoint", a.checkpoint},
                                   {"out_dir", a.out},
                                   {"alpha", a.alpha},
                                   {"seed", a.seed},
                                   {"input_hashes", std::move(inputs)}});
    std::cout << "added " << res.provenance.size() << " nodes; train ratio now "
              << fg::fmt_double(stats["imbalance_ratio_train"].get<double>()) << "\n";
    return 0;
}

struct EvaluateArgs {
    std::vector<std::string> graphs;
    std::string config, out, seeds;
    double tau = -1.0;
    long jobs = 1;
};

int cmd_evaluate(const EvaluateArgs& a) {
    if (a.jobs < 1) throw fg::ConfigError("--jobs must be >= 1");
    fg::EvalOptions opt;
    json cfg_json = load_config_or_empty(a.config);
    {
        fg::JsonCursor c(cfg_json, a.config.empty() ? "<defaults>" : a.config);
        if (c.has("classifier"))
            opt.classifier = fg::classifier_config_from_json(c.sub("classifier"), a.config + ".classifier");
        opt.tau = c.num("tau", opt.tau);
        if (c.has("seeds")) {
            const json js = c.sub("seeds");
            if (!js.is_array()) throw fg::ConfigError(a.config + ".seeds: expected an array");
            opt.seeds.clear();
            for (const auto& v : js) opt.seeds.push_back(v.get<long>());
        }
        c.done();
    }
    if (!a.seeds.empty()) opt.seeds = parse_seeds(a.seeds);
    if (a.tau >= 0.0) opt.tau = a.tau;

    std::vector<fg::VariantSpec> variants;
    json inputs = json::object();
    std::map<std::string, int> name_uses;
    for (const auto& spec : a.graphs) {
        fg::VariantSpec v;
        std::string dir = spec;
        const auto marker = spec.rfind("::reweight");
        if (marker != std::string::npos && marker + 10 == spec.size()) {
            v.reweight = true;
            dir = spec.substr(0, marker);
        }
        v.dir = dir;
        v.name = fs::path(dir).filename().string();
        if (v.name.empty()) v.name = dir;
        if (v.reweight) v.name += "+reweight";
        const int uses = name_uses[v.name]++;
        if (uses > 0) v.name += "#" + std::to_string(uses);
        inputs[dir] = dir_hashes(dir);
        variants.push_back(std::move(v));
    }
    if (!a.config.empty()) inputs[a.config] = fg::hex64(hash_file(a.config));

    const json report = fg::run_experiment(variants, opt);
    fs::create_directories(a.out);
    fg::write_text_file(fs::path(a.out) / "report.json", report.dump(2) + "\n");
    fg::write_csv(fs::path(a.out) / "report.csv", fg::report_csv(report));
    json jseeds = json::array();
    for (long s : opt.seeds) jseeds.push_back(s);
    write_run_manifest(a.out, json{{"subcommand", "evaluate"},
                                   {"config", a.config},
                                   {"out_dir", a.out},
                                   {"seeds", std::move(jseeds)},
                                   {"jobs", a.jobs},
                                   {"input_hashes", std::move(inputs)}});
    for (const auto& jv : report["variants"]) {
        std::cout << jv["name"].get<std::string>() << ": auc_prc ";
        std::cout << (jv["mean"].contains("auc_prc") ? fg::fmt_double(jv["mean"]["auc_prc"].get<double>())
                                                     : std::string("n/a"));
        std::cout << "\n";
    }
    if (report["partial"].get<bool>()) std::cout << "warning: partial report (failed cells inside)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge-aware GAN graph augmentation pipeline"};
    app.require_subcommand(1);
    std::string workdir;
    app.add_option("--workdir", workdir, "resolve all paths relative to this directory");

    GenDataArgs gen;
    auto* sc_gen = app.add_subcommand("gen-data", "generate a planted benchmark graph container");
    sc_gen->add_option("--config", gen.config, "generator config JSON");
    sc_gen->add_option("--out", gen.out, "output graph directory")->required();
    sc_gen->add_option("--seed", gen.seed, "override the config seed");

    TrainArgs tr;
    auto* sc_train = app.add_subcommand("train", "train the generator/discriminator pair on a graph");
    sc_train->add_option("--graph", tr.graph, "input graph directory")->required();
    sc_train->add_option("--config", tr.config, "training config JSON");
    sc_train->add_option("--out", tr.out, "output directory for checkpoints and history")->required();
    sc_train->add_option("--seed", tr.seed, "override the config seed");
    sc_train->add_option("--epochs", tr.epochs, "override the config epoch count");

    AugmentArgs aug;
    auto* sc_aug = app.add_subcommand("augment", "augment a graph to a target training ratio");
    sc_aug->add_option("--graph", aug.graph, "input graph directory")->required();
    sc_aug->add_option("--method", aug.method, "flashgan | oversample | smote");
    sc_aug->add_option("--checkpoint", aug.checkpoint, "generator checkpoint (flashgan method)");
    sc_aug->add_option("--alpha", aug.alpha, "target training-split minority/majority ratio")->required();
    sc_aug->add_option("--seed", aug.seed, "sampling seed");
    sc_aug->add_option("--k", aug.k, "synthetic nodes per subgraph (default: from checkpoint)");
    sc_aug->add_option("--knn", aug.knn, "neighbor count for smote");
    sc_aug->add_option("--out", aug.out, "output graph directory")->required();

    EvaluateArgs ev;
    auto* sc_eval = app.add_subcommand("evaluate", "train classifiers over graph variants and report metrics");
    sc_eval->add_option("graphs", ev.graphs, "graph directories (append ::reweight for weighted loss)")
        ->required()
        ->expected(-1);
    sc_eval->add_option("--config", ev.config, "evaluation config JSON");
    sc_eval->add_option("--seeds", ev.seeds, "seed list: comma-separated or a..b range");
    sc_eval->add_option("--tau", ev.tau, "decision threshold for the confusion metrics");
    sc_eval->add_option("--jobs", ev.jobs, "upper bound on parallel cells (cells run serially in this build)");
    sc_eval->add_option("--out", ev.out, "output directory for report.json / report.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!workdir.empty()) fs::current_path(workdir);
        if (sc_gen->parsed()) return cmd_gen_data(gen);
        if (sc_train->parsed()) return cmd_train(tr);
        if (sc_aug->parsed()) return cmd_augment(aug);
        if (sc_eval->parsed()) return cmd_evaluate(ev);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const fg::StallError& e) {
        std::cerr << "stall: " << e.what() << "\n";
        return 4;
    } catch (const fg::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 3;
    } catch (const fg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fg::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "filesystem error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
