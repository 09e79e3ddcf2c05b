#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "treecut/errors.hpp"
#include "treecut/experiment.hpp"
#include "treecut/instance.hpp"
#include "treecut/policy.hpp"
#include "treecut/rl.hpp"
#include "treecut/tree.hpp"

namespace fs = std::filesystem;
using namespace treecut;

namespace {

struct SolveFlags {
    std::string scope = "all_nodes";
    int rounds = 2;
    int max_cuts = 20;
    long node_limit = 1000000;
    long pivot_limit = 50000;
    double time_limit_s = 0.0;  // 0 = unlimited
};

void add_solve_flags(CLI::App* cmd, SolveFlags& f, bool with_scope = true) {
    if (with_scope)
        cmd->add_option("--scope", f.scope, "Cut scope: root_only | all_nodes | none")
            ->check(CLI::IsMember({"root_only", "all_nodes", "none"}));
    cmd->add_option("--rounds", f.rounds, "Separation rounds per node");
    cmd->add_option("--max-cuts", f.max_cuts, "Max candidate cuts per round");
    cmd->add_option("--node-limit", f.node_limit, "Node budget");
    cmd->add_option("--pivot-limit", f.pivot_limit, "Per-LP pivot cap");
    cmd->add_option("--time-limit-s", f.time_limit_s, "Wall-clock budget in seconds (0 = off)");
}

SolveConfig to_config(const SolveFlags& f, std::uint64_t seed) {
    SolveConfig cfg;
    cfg.cut_scope = scope_from_name(f.scope);
    cfg.rounds_per_node = f.rounds;
    cfg.max_cuts_per_round = f.max_cuts;
    cfg.node_limit = f.node_limit;
    cfg.pivot_limit = f.pivot_limit;
    cfg.wall_time_limit = f.time_limit_s > 0.0 ? f.time_limit_s : kInf;
    cfg.seed = seed;
    return cfg;
}

std::vector<MipInstance> load_all(const std::vector<std::string>& paths) {
    std::vector<MipInstance> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_instance(p));
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << content;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"treecut: branch-and-cut MIP solver with learned cut selection"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate synthetic instances");
    std::string family = "set_covering";
    int n = 60, m = 30, p = 40, count = 1;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    gen->add_option("--family", family,
                    "set_covering | max_independent_set | multi_knapsack");
    gen->add_option("--n", n, "Variables (set covering, knapsack)");
    gen->add_option("--m", m, "Rows (set covering)");
    gen->add_option("--p", p, "Vertices (independent set)");
    gen->add_option("--count", count, "Number of instances");
    gen->add_option("--seed", seed, "Base seed");
    gen->add_option("--out-dir", out_dir, "Output directory");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Solve one instance");
    std::string solve_path, selector_tag = "default", solve_out;
    SolveFlags solve_flags;
    bool no_wall = false;
    std::uint64_t solve_seed = 0;
    solve_cmd->add_option("instance", solve_path, "Instance JSON file")->required();
    solve_cmd->add_option("--selector", selector_tag,
                          "nocuts | default | random | sbp:<ckpt> | gcs:<ckpt>");
    solve_cmd->add_option("--seed", solve_seed, "Selector seed");
    solve_cmd->add_option("--out-dir", solve_out, "Write run JSON here instead of stdout");
    solve_cmd->add_flag("--no-wall", no_wall, "Zero wall-time fields for byte-stable output");
    add_solve_flags(solve_cmd, solve_flags);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a learned selector with PPO");
    std::vector<std::string> train_paths;
    std::string train_selector = "gcs", train_out = ".", checkpoint;
    std::uint64_t train_seed = 0;
    int iterations = 50, episodes = 8, workers = 1;
    SolveFlags train_flags;
    train_cmd->add_option("instances", train_paths, "Instance JSON files")->required();
    train_cmd->add_option("--selector", train_selector, "gcs | sbp");
    train_cmd->add_option("--seed", train_seed, "Training seed");
    train_cmd->add_option("--checkpoint", checkpoint, "Initial checkpoint to resume from");
    train_cmd->add_option("--out-dir", train_out, "Checkpoint and curve output directory");
    train_cmd->add_option("--iters", iterations, "PPO iterations");
    train_cmd->add_option("--episodes", episodes, "Rollout episodes per iteration");
    train_cmd->add_option("--workers", workers, "Rollout workers (1 = deterministic)");
    add_solve_flags(train_cmd, train_flags);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a selector over a set");
    std::vector<std::string> eval_paths;
    std::string eval_tag = "default", eval_out;
    std::uint64_t eval_seed = 0;
    int eval_workers = 1;
    bool eval_no_wall = false;
    SolveFlags eval_flags;
    eval_cmd->add_option("instances", eval_paths, "Instance JSON files")->required();
    eval_cmd->add_option("--selector", eval_tag, "Selector tag");
    eval_cmd->add_option("--seed", eval_seed, "Selector seed");
    eval_cmd->add_option("--out-dir", eval_out, "Write per-run JSONs and results.csv here");
    eval_cmd->add_option("--workers", eval_workers, "Parallel runs");
    eval_cmd->add_flag("--no-wall", eval_no_wall, "Zero wall-time columns");
    add_solve_flags(eval_cmd, eval_flags);

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Compare selectors; first is the reference");
    std::vector<std::string> cmp_paths;
    std::vector<std::string> cmp_selectors;
    std::vector<std::string> cmp_scopes;
    std::string cmp_out;
    std::uint64_t cmp_seed = 0;
    int cmp_workers = 1;
    bool cmp_no_wall = false;
    SolveFlags cmp_flags;
    cmp_cmd->add_option("instances", cmp_paths, "Instance JSON files")->required();
    cmp_cmd->add_option("--selector", cmp_selectors, "Selector tags (repeatable)")->required();
    cmp_cmd->add_option("--scope", cmp_scopes, "Scopes, one per selector or a single shared one");
    cmp_cmd->add_option("--seed", cmp_seed, "Selector seed");
    cmp_cmd->add_option("--out-dir", cmp_out, "Write comparison.csv here");
    cmp_cmd->add_option("--workers", cmp_workers, "Parallel runs");
    cmp_cmd->add_flag("--no-wall", cmp_no_wall, "Zero wall-time columns");
    add_solve_flags(cmp_cmd, cmp_flags, /*with_scope=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            GeneratorConfig cfg;
            cfg.family = family_from_name(family);
            cfg.n = n;
            cfg.m = m;
            cfg.p = p;
            fs::create_directories(out_dir);
            for (int i = 0; i < count; ++i) {
                cfg.seed = seed + static_cast<std::uint64_t>(i);
                MipInstance inst = generate(cfg);
                save_instance(inst, out_dir + "/" + inst.name + ".json");
            }
            std::cout << count << " instance(s) written to " << out_dir << "\n";
        } else if (*solve_cmd) {
            MipInstance inst = load_instance(solve_path);
            auto selector = make_selector(selector_tag, solve_seed);
            RunRecord rec = run_instance(inst, *selector, to_config(solve_flags, solve_seed));
            std::string doc = run_record_json(rec, no_wall);
            if (solve_out.empty()) {
                std::cout << doc << "\n";
            } else {
                fs::create_directories(solve_out);
                std::string path =
                    solve_out + "/" + inst.name + "." + selector->tag() + ".json";
                write_file(path, doc + "\n");
                std::cout << path << "\n";
            }
        } else if (*train_cmd) {
            auto all = load_all(train_paths);
            std::vector<MipInstance> train_set, test_set;
            split_train_test(all, train_seed, train_set, test_set);
            if (train_set.empty()) throw InvalidInput("train: empty training split");
            std::unique_ptr<TrainableModel> model;
            if (train_selector == "gcs")
                model = checkpoint.empty() ? std::make_unique<GcsModel>(train_seed)
                                           : std::make_unique<GcsModel>(checkpoint);
            else if (train_selector == "sbp")
                model = checkpoint.empty() ? std::make_unique<SbpModel>(train_seed)
                                           : std::make_unique<SbpModel>(checkpoint);
            else
                throw InvalidInput("train: selector must be gcs or sbp");
            TrainConfig cfg;
            cfg.ppo.seed = train_seed;
            cfg.solve = to_config(train_flags, train_seed);
            cfg.iterations = iterations;
            cfg.episodes_per_iteration = episodes;
            cfg.workers = workers;
            fs::create_directories(train_out);
            cfg.out_dir = train_out;
            TrainResult res = train(train_set, test_set, *model, cfg);
            write_file(train_out + "/curve.csv", res.curve_csv);
            std::cout << "trained " << iterations << " iteration(s); best checkpoint: "
                      << res.best_checkpoint << "\n";
        } else if (*eval_cmd) {
            auto set = load_all(eval_paths);
            EvalResult res = eval_selector(set, eval_tag, eval_flags.scope,
                                           to_config(eval_flags, eval_seed), eval_seed,
                                           eval_workers);
            std::string csv = eval_csv(res, eval_no_wall);
            if (!eval_out.empty()) {
                fs::create_directories(eval_out);
                write_file(eval_out + "/results.csv", csv);
                for (const auto& rec : res.records)
                    write_file(eval_out + "/" + rec.instance + "." + rec.selector + ".json",
                               run_record_json(rec, eval_no_wall) + "\n");
            }
            std::cout << csv;
        } else if (*cmp_cmd) {
            auto set = load_all(cmp_paths);
            if (cmp_scopes.empty()) cmp_scopes.assign(cmp_selectors.size(), "all_nodes");
            if (cmp_scopes.size() == 1 && cmp_selectors.size() > 1)
                cmp_scopes.assign(cmp_selectors.size(), cmp_scopes.front());
            if (cmp_scopes.size() != cmp_selectors.size())
                throw InvalidInput("compare: scope count must match selector count");
            std::vector<MethodResult> methods;
            for (std::size_t k = 0; k < cmp_selectors.size(); ++k) {
                MethodResult mr;
                mr.method = cmp_selectors[k].substr(0, cmp_selectors[k].find(':'));
                mr.scope = cmp_scopes[k];
                mr.eval = treecut::eval_selector(set, cmp_selectors[k], cmp_scopes[k],
                                        to_config(cmp_flags, cmp_seed), cmp_seed, cmp_workers);
                methods.push_back(std::move(mr));
            }
            std::string csv = comparison_csv(methods, cmp_no_wall);
            if (!cmp_out.empty()) {
                fs::create_directories(cmp_out);
                write_file(cmp_out + "/comparison.csv", csv);
            }
            std::cout << comparison_table(methods, cmp_no_wall);
        }
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
