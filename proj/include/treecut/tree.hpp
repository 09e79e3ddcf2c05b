#ifndef TREECUT_TREE_HPP
#define TREECUT_TREE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treecut/cuts.hpp"
#include "treecut/instance.hpp"
#include "treecut/selector.hpp"
#include "treecut/simplex.hpp"
#include "treecut/state_graph.hpp"

namespace treecut {

enum class CutScope { RootOnly, AllNodes, None };
enum class NodeStatus { Open, Branched, PrunedBound, PrunedInfeasible, Integral };

CutScope scope_from_name(const std::string& s);
std::string scope_name(CutScope s);

/// One search-tree node. Branching tightens a single variable bound; the
/// full local bounds and the list of cuts on the root path are materialized
/// per node (desk-scale trees).
struct BncNode {
    int id = 0;
    std::optional<int> parent;
    int depth = 0;
    CutBranchContext branching;         // sign 0 at the root
    std::vector<double> lower, upper;   // local bounds
    std::vector<int> path_cuts;         // pool ids of cuts valid at this node
    std::vector<int> warm_basis;        // parent's optimal basis
    std::vector<int> warm_at_upper;     // parent's nonbasic-at-upper columns
    double dual_bound = -kInf;
    NodeStatus status = NodeStatus::Open;
};

struct RunMetrics {
    long nodes_processed = 0;
    long total_pivots = 0;
    long cuts_added = 0;
    double wall_seconds = 0.0;
    std::vector<std::pair<int, double>> gap_trace;  // (decision index, gap)
    std::string final_status;  // optimal | infeasible | node_limit | time_limit
    bool has_incumbent = false;
    double incumbent_value = 0.0;
    double dual_bound = -kInf;
};

struct SolveConfig {
    CutScope cut_scope = CutScope::AllNodes;
    int rounds_per_node = 2;
    int max_cuts_per_round = 20;
    long node_limit = 1000000;
    long pivot_limit = 50000;        // per-LP cap; hitting it aborts the run
    double wall_time_limit = kInf;   // seconds
    std::uint64_t seed = 0;
    bool record_decisions = false;   // keep per-decision graph snapshots
};

/// One MDP step: the state graph as presented to the selector, the
/// candidates, the chosen action and the gap before/after.
struct DecisionRecord {
    StateGraph graph;
    std::vector<CutCandidate> candidates;
    CutAction action;
    double gap_before = 1.0;
    double gap_after = 1.0;
};

struct SolveResult {
    RunMetrics metrics;
    std::optional<std::vector<double>> incumbent;
    std::vector<DecisionRecord> decisions;  // only with record_decisions
    std::vector<CutProvenance> cut_pool;    // all cuts added during the run
    std::vector<BncNode> nodes;             // final tree (for reconstruction checks)
};

/// Primal-dual gap |p - d| / max(|p|, 1e-9), capped at 1; 1 without an
/// incumbent, 0 when the bounds agree within 1e-9.
double global_gap(bool has_incumbent, double primal, double dual);

/// Branch-and-cut: best-bound node selection (ties FIFO), most-fractional
/// branching (ties lowest index), up to rounds_per_node cut rounds per node
/// in scope with the given selector. Exact when no limits are hit.
SolveResult solve(const MipInstance& inst, const SolveConfig& config, CutSelector& selector);

} // namespace treecut

#endif
