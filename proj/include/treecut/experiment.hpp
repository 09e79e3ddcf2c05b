#ifndef TREECUT_EXPERIMENT_HPP
#define TREECUT_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "treecut/instance.hpp"
#include "treecut/tree.hpp"

namespace treecut {

struct RunRecord {
    std::string instance;
    std::string selector;
    std::string scope;
    std::string status;
    bool has_incumbent = false;
    double incumbent_value = 0.0;
    double dual_bound = 0.0;
    long nodes = 0;
    long pivots = 0;
    long cuts_added = 0;
    double wall_s = 0.0;
    std::vector<std::pair<int, double>> gap_trace;
};

/// Solves one instance and captures the run summary. The selector is
/// consumed statefully; use a fresh one per instance for reproducibility.
RunRecord run_instance(const MipInstance& inst, CutSelector& selector,
                       const SolveConfig& config);

/// Run-result document; no_wall zeroes the wall-time field so output is
/// byte-stable across machines.
std::string run_record_json(const RunRecord& record, bool no_wall);

struct EvalResult {
    std::vector<RunRecord> records;
    long instances = 0;
    double mean_nodes = 0.0;
    double mean_pivots = 0.0;
    double mean_wall = 0.0;
};

/// Evaluates one selector tag over a set. Each instance gets a fresh
/// selector seeded by seed + index, so results do not depend on the worker
/// count or completion order.
EvalResult eval_selector(const std::vector<MipInstance>& set, const std::string& selector_tag,
                         const std::string& scope, const SolveConfig& config,
                         std::uint64_t seed, int workers = 1);

/// Per-instance rows in deterministic order plus recomputable aggregates.
std::string eval_csv(const EvalResult& result, bool no_wall);

struct MethodResult {
    std::string method;
    std::string scope;
    EvalResult eval;
};

/// Comparison against the first row as reference. Improvement and node
/// reduction use the pivot / node means. Methods with recorded runs must
/// cover the same instance set.
std::string comparison_csv(const std::vector<MethodResult>& methods, bool no_wall);
std::string comparison_table(const std::vector<MethodResult>& methods, bool no_wall);

/// Deterministic 80/20 shuffle split.
void split_train_test(const std::vector<MipInstance>& all, std::uint64_t seed,
                      std::vector<MipInstance>& train, std::vector<MipInstance>& test);

} // namespace treecut

#endif
