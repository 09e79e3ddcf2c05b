#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"
#include "treecut/experiment.hpp"
#include "treecut/metrics.hpp"
#include "treecut/policy.hpp"

using namespace treecut;
using namespace treecut::testing;

namespace {

std::vector<MipInstance> small_set(int count, std::uint64_t seed) {
    std::vector<MipInstance> set;
    for (int i = 0; i < count; ++i) {
        GeneratorConfig gcfg;
        gcfg.family = Family::MultiKnapsack;
        gcfg.n = 10;
        gcfg.seed = seed + static_cast<std::uint64_t>(i);
        set.push_back(generate(gcfg));
    }
    return set;
}

EvalResult synthetic_eval(double mean_pivots, double mean_nodes, long instances = 3) {
    EvalResult e;
    e.instances = instances;
    e.mean_pivots = mean_pivots;
    e.mean_nodes = mean_nodes;
    e.mean_wall = 0.0;
    return e;
}

} // namespace

TEST_CASE("improvement and reduction arithmetic") {
    CHECK(improvement(10.0, 5.0) == doctest::Approx(0.5));
    CHECK(improvement(10.0, 20.0) == doctest::Approx(-1.0));   // doubled cost: -100%
    CHECK(improvement(10.0, 10.0) == 0.0);
    CHECK(node_reduction(40.0, 30.0) == doctest::Approx(0.25));
    CHECK_THROWS(improvement(0.0, 5.0));
    CHECK(mean({1.0, 2.0, 6.0}) == doctest::Approx(3.0));
    CHECK(median({5.0, 1.0, 3.0}) == 3.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
    CHECK_THROWS(mean({}));
}

TEST_CASE("run record json carries every field") {
    MipInstance inst = small_set(1, 50)[0];
    DefaultScoreSelector sel;
    SolveConfig cfg;
    RunRecord rec = run_instance(inst, sel, cfg);
    auto doc = nlohmann::json::parse(run_record_json(rec, /*no_wall=*/true));
    CHECK(doc["instance"] == inst.name);
    CHECK(doc["selector"] == "default");
    CHECK(doc["scope"] == "all_nodes");
    CHECK(doc["status"] == "optimal");
    CHECK(doc["wall_s"] == 0.0);
    CHECK(doc["nodes"].get<long>() == rec.nodes);
    CHECK(doc["pivots"].get<long>() == rec.pivots);
    CHECK(doc["cuts_added"].get<long>() == rec.cuts_added);
    CHECK(doc["incumbent"].get<double>() == doctest::Approx(rec.incumbent_value));
    CHECK(doc["gap_trace"].size() == rec.gap_trace.size());

    RunRecord empty = rec;
    empty.has_incumbent = false;
    auto doc2 = nlohmann::json::parse(run_record_json(empty, true));
    CHECK(doc2["incumbent"].is_null());
}

TEST_CASE("eval csv is byte-identical across repeated runs") {
    auto set = small_set(4, 60);
    SolveConfig cfg;
    EvalResult a = eval_selector(set, "default", "all_nodes", cfg, 1);
    EvalResult b = eval_selector(set, "default", "all_nodes", cfg, 1);
    std::string csv = eval_csv(a, true);
    CHECK(csv == eval_csv(b, true));
    CHECK(csv.rfind("instance,selector,scope,status,nodes,pivots,cuts_added,wall_s,incumbent,"
                    "dual_bound", 0) == 0);
    // Rows stay in instance order with one line per instance plus header.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("worker count does not change eval results") {
    auto set = small_set(5, 70);
    SolveConfig cfg;
    EvalResult a = eval_selector(set, "random", "all_nodes", cfg, 3, 1);
    EvalResult b = eval_selector(set, "random", "all_nodes", cfg, 3, 4);
    CHECK(eval_csv(a, true) == eval_csv(b, true));
    CHECK(a.mean_nodes == b.mean_nodes);
    CHECK(a.mean_pivots == b.mean_pivots);
}

TEST_CASE("comparison csv header and reference row") {
    std::vector<MethodResult> methods = {
        {"nocuts", "none", synthetic_eval(10.33, 40.0)},
        {"gcs", "all_nodes", synthetic_eval(5.79, 30.0)},
    };
    std::string csv = comparison_csv(methods, true);
    CHECK(csv.rfind("method,scope,instances,mean_pivots,mean_nodes,mean_wall_s,"
                    "improvement_pivots,node_reduction", 0) == 0);
    std::istringstream is(csv);
    std::string header, row0, row1;
    std::getline(is, header);
    std::getline(is, row0);
    std::getline(is, row1);
    // Reference improvement is exactly zero.
    CHECK(row0 == "nocuts,none,3,10.330000,40.000000,0.000000,0.000000,0.000000");
    // (10.33 - 5.79) / 10.33 = 43.9497...%
    CHECK(row1.find("gcs,all_nodes,3,5.790000,30.000000,0.000000,0.439497") == 0);
    CHECK(row1.find(",0.250000") != std::string::npos);
}

TEST_CASE("improvement in the table is recomputable from the csv means") {
    std::vector<MethodResult> methods = {
        {"base", "none", synthetic_eval(20.0, 100.0)},
        {"fast", "all_nodes", synthetic_eval(15.0, 80.0)},
        {"slow", "all_nodes", synthetic_eval(40.0, 120.0)},
    };
    std::string csv = comparison_csv(methods, true);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        REQUIRE(cells.size() == 8);
        double mp = std::stod(cells[3]), im = std::stod(cells[6]);
        double mn = std::stod(cells[4]), red = std::stod(cells[7]);
        CHECK(im == doctest::Approx((20.0 - mp) / 20.0).epsilon(1e-6));
        CHECK(red == doctest::Approx((100.0 - mn) / 100.0).epsilon(1e-6));
    }
}

TEST_CASE("comparison table renders improvement as a percentage") {
    std::vector<MethodResult> methods = {
        {"nocuts", "none", synthetic_eval(10.33, 40.0)},
        {"gcs", "all_nodes", synthetic_eval(5.79, 30.0)},
    };
    std::string table = comparison_table(methods, true);
    CHECK(table.find("43.9") != std::string::npos);
    CHECK(table.find('%') != std::string::npos);
}

TEST_CASE("comparison rejects mismatched instance sets and single methods") {
    auto set_a = small_set(2, 80);
    auto set_b = small_set(2, 90);
    SolveConfig cfg;
    MethodResult a{"nocuts", "none", eval_selector(set_a, "nocuts", "none", cfg, 0)};
    MethodResult b{"default", "all_nodes", eval_selector(set_b, "default", "all_nodes", cfg, 0)};
    CHECK_THROWS(comparison_csv({a, b}, true));
    CHECK_THROWS(comparison_csv({a}, true));
    MethodResult c{"default", "all_nodes", eval_selector(set_a, "default", "all_nodes", cfg, 0)};
    CHECK_NOTHROW(comparison_csv({a, c}, true));
}

TEST_CASE("train test split is a deterministic 80/20 partition") {
    auto all = small_set(10, 100);
    std::vector<MipInstance> tr1, te1, tr2, te2;
    split_train_test(all, 7, tr1, te1);
    split_train_test(all, 7, tr2, te2);
    CHECK(tr1.size() == 8);
    CHECK(te1.size() == 2);
    auto names = [](const std::vector<MipInstance>& v) {
        std::vector<std::string> out;
        for (const auto& m : v) out.push_back(m.name);
        return out;
    };
    CHECK(names(tr1) == names(tr2));
    CHECK(names(te1) == names(te2));
    // Partition covers everything exactly once.
    std::set<std::string> seen;
    for (const auto& m : tr1) seen.insert(m.name);
    for (const auto& m : te1) seen.insert(m.name);
    CHECK(seen.size() == 10);
    // A different seed shuffles differently.
    std::vector<MipInstance> tr3, te3;
    split_train_test(all, 8, tr3, te3);
    CHECK(names(tr3) != names(tr1));
}

TEST_CASE("eval rejects an empty set and unknown scope") {
    SolveConfig cfg;
    CHECK_THROWS(eval_selector({}, "default", "all_nodes", cfg, 0));
    auto set = small_set(1, 110);
    CHECK_THROWS(eval_selector(set, "default", "everywhere", cfg, 0));
}
