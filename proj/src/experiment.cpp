#include "treecut/experiment.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "treecut/errors.hpp"
#include "treecut/metrics.hpp"
#include "treecut/policy.hpp"
#include "treecut/rng.hpp"

namespace treecut {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

} // namespace

RunRecord run_instance(const MipInstance& inst, CutSelector& selector,
                       const SolveConfig& config) {
    SolveResult res = solve(inst, config, selector);
    RunRecord rec;
    rec.instance = inst.name;
    rec.selector = selector.tag();
    rec.scope = scope_name(config.cut_scope);
    rec.status = res.metrics.final_status;
    rec.has_incumbent = res.metrics.has_incumbent;
    rec.incumbent_value = res.metrics.incumbent_value;
    rec.dual_bound = res.metrics.dual_bound;
    rec.nodes = res.metrics.nodes_processed;
    rec.pivots = res.metrics.total_pivots;
    rec.cuts_added = res.metrics.cuts_added;
    rec.wall_s = res.metrics.wall_seconds;
    rec.gap_trace = res.metrics.gap_trace;
    return rec;
}

std::string run_record_json(const RunRecord& record, bool no_wall) {
    nlohmann::json j;
    j["instance"] = record.instance;
    j["selector"] = record.selector;
    j["scope"] = record.scope;
    j["status"] = record.status;
    if (record.has_incumbent)
        j["incumbent"] = record.incumbent_value;
    else
        j["incumbent"] = nullptr;
    j["dual_bound"] = record.dual_bound;
    j["nodes"] = record.nodes;
    j["pivots"] = record.pivots;
    j["cuts_added"] = record.cuts_added;
    j["wall_s"] = no_wall ? 0.0 : record.wall_s;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& [t, gap] : record.gap_trace) trace.push_back({t, gap});
    j["gap_trace"] = std::move(trace);
    return j.dump(2);
}

EvalResult eval_selector(const std::vector<MipInstance>& set, const std::string& selector_tag,
                         const std::string& scope, const SolveConfig& config,
                         std::uint64_t seed, int workers) {
    if (set.empty()) throw InvalidInput("eval: empty instance set");
    SolveConfig cfg = config;
    cfg.cut_scope = scope_from_name(scope);
    EvalResult result;
    result.records.resize(set.size());
    auto run_one = [&](std::size_t i) {
        auto selector = make_selector(selector_tag, seed + i);
        result.records[i] = run_instance(set[i], *selector, cfg);
    };
    workers = std::max(1, workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < set.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = static_cast<std::size_t>(w); i < set.size();
                     i += static_cast<std::size_t>(workers))
                    run_one(i);
            });
        for (auto& t : pool) t.join();
    }
    result.instances = static_cast<long>(set.size());
    for (const auto& r : result.records) {
        result.mean_nodes += static_cast<double>(r.nodes);
        result.mean_pivots += static_cast<double>(r.pivots);
        result.mean_wall += r.wall_s;
    }
    result.mean_nodes /= static_cast<double>(set.size());
    result.mean_pivots /= static_cast<double>(set.size());
    result.mean_wall /= static_cast<double>(set.size());
    return result;
}

std::string eval_csv(const EvalResult& result, bool no_wall) {
    std::ostringstream os;
    os << "instance,selector,scope,status,nodes,pivots,cuts_added,wall_s,incumbent,dual_bound\n";
    for (const auto& r : result.records) {
        os << r.instance << ',' << r.selector << ',' << r.scope << ',' << r.status << ','
           << r.nodes << ',' << r.pivots << ',' << r.cuts_added << ','
           << fmt(no_wall ? 0.0 : r.wall_s) << ','
           << (r.has_incumbent ? fmt(r.incumbent_value) : std::string("")) << ','
           << fmt(r.dual_bound) << '\n';
    }
    return os.str();
}

namespace {

void check_same_instances(const std::vector<MethodResult>& methods) {
    std::set<std::string> reference;
    bool have_ref = false;
    for (const auto& m : methods) {
        if (m.eval.records.empty()) continue;
        std::set<std::string> names;
        for (const auto& r : m.eval.records) names.insert(r.instance);
        if (!have_ref) {
            reference = std::move(names);
            have_ref = true;
        } else if (names != reference) {
            throw InvalidInput("compare: methods were evaluated on different instance sets");
        }
    }
}

struct CompareRow {
    std::string method, scope;
    long instances;
    double mean_pivots, mean_nodes, mean_wall, im, red;
};

std::vector<CompareRow> build_rows(const std::vector<MethodResult>& methods, bool no_wall) {
    if (methods.size() < 2) throw InvalidInput("compare: need at least two methods");
    check_same_instances(methods);
    const EvalResult& ref = methods.front().eval;
    std::vector<CompareRow> rows;
    for (const auto& m : methods) {
        CompareRow row;
        row.method = m.method;
        row.scope = m.scope;
        row.instances = m.eval.instances;
        row.mean_pivots = m.eval.mean_pivots;
        row.mean_nodes = m.eval.mean_nodes;
        row.mean_wall = no_wall ? 0.0 : m.eval.mean_wall;
        row.im = improvement(ref.mean_pivots, m.eval.mean_pivots);
        row.red = node_reduction(ref.mean_nodes, m.eval.mean_nodes);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

std::string comparison_csv(const std::vector<MethodResult>& methods, bool no_wall) {
    std::ostringstream os;
    os << "method,scope,instances,mean_pivots,mean_nodes,mean_wall_s,improvement_pivots,"
          "node_reduction\n";
    for (const auto& row : build_rows(methods, no_wall)) {
        os << row.method << ',' << row.scope << ',' << row.instances << ','
           << fmt(row.mean_pivots) << ',' << fmt(row.mean_nodes) << ',' << fmt(row.mean_wall)
           << ',' << fmt(row.im) << ',' << fmt(row.red) << '\n';
    }
    return os.str();
}

std::string comparison_table(const std::vector<MethodResult>& methods, bool no_wall) {
    auto rows = build_rows(methods, no_wall);
    std::ostringstream os;
    os << std::left << std::setw(12) << "method" << std::setw(11) << "scope" << std::right
       << std::setw(10) << "instances" << std::setw(14) << "mean_pivots" << std::setw(12)
       << "mean_nodes" << std::setw(12) << "mean_wall_s" << std::setw(14) << "improvement"
       << std::setw(12) << "reduction" << '\n';
    for (const auto& row : rows) {
        os << std::left << std::setw(12) << row.method << std::setw(11) << row.scope
           << std::right << std::setw(10) << row.instances << std::setw(14)
           << fmt(row.mean_pivots) << std::setw(12) << fmt(row.mean_nodes) << std::setw(12)
           << fmt(row.mean_wall) << std::setw(13) << fmt(row.im * 100.0) << '%' << std::setw(12)
           << fmt(row.red) << '\n';
    }
    return os.str();
}

void split_train_test(const std::vector<MipInstance>& all, std::uint64_t seed,
                      std::vector<MipInstance>& train, std::vector<MipInstance>& test) {
    std::vector<std::size_t> order(all.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    std::size_t cut = (all.size() * 4) / 5;
    train.clear();
    test.clear();
    for (std::size_t k = 0; k < order.size(); ++k)
        (k < cut ? train : test).push_back(all[order[k]]);
}

} // namespace treecut
