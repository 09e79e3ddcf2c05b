#include "treecut/tree.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

#include "treecut/errors.hpp"

namespace treecut {

namespace {

constexpr double kBoundTol = 1e-9;

struct QueueEntry {
    double bound;
    int id;
    bool operator>(const QueueEntry& other) const {
        if (bound != other.bound) return bound > other.bound;
        return id > other.id;  // FIFO on ties
    }
};

int most_fractional_var(const MipInstance& inst, const std::vector<double>& x) {
    int best = -1;
    double best_dist = kTolIntegrality;
    for (int j : inst.integer_set) {
        double f = x[j] - std::floor(x[j]);
        double dist = std::min(f, 1.0 - f);
        if (dist > best_dist) {
            best_dist = dist;
            best = j;
        }
    }
    return best;
}

double objective_parallelism(const std::vector<std::pair<int, double>>& coefs,
                             const std::vector<double>& c) {
    double dot = 0.0, anorm = 0.0, cnorm = 0.0;
    for (double v : c) cnorm += v * v;
    for (const auto& [j, v] : coefs) {
        dot += v * c[j];
        anorm += v * v;
    }
    if (cnorm <= 0.0 || anorm <= 0.0) return 0.0;
    return std::fabs(dot) / std::sqrt(cnorm * anorm);
}

} // namespace

CutScope scope_from_name(const std::string& s) {
    if (s == "root_only") return CutScope::RootOnly;
    if (s == "all_nodes") return CutScope::AllNodes;
    if (s == "none") return CutScope::None;
    throw InvalidInput("unknown cut scope '" + s + "'");
}

std::string scope_name(CutScope s) {
    switch (s) {
        case CutScope::RootOnly: return "root_only";
        case CutScope::AllNodes: return "all_nodes";
        case CutScope::None: return "none";
    }
    return "?";
}

double global_gap(bool has_incumbent, double primal, double dual) {
    if (!has_incumbent) return 1.0;
    if (std::fabs(primal - dual) <= 1e-9) return 0.0;
    double g = std::fabs(primal - dual) / std::max(std::fabs(primal), 1e-9);
    return std::min(g, 1.0);
}

SolveResult solve(const MipInstance& inst, const SolveConfig& config, CutSelector& selector) {
    if (config.rounds_per_node < 0 || config.max_cuts_per_round <= 0 || config.node_limit <= 0 ||
        config.pivot_limit <= 0)
        throw InvalidInput("solve: limits must be positive");
    inst.validate();
    auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    SolveResult result;
    RunMetrics& metrics = result.metrics;
    SimplexOptions lp_opts;
    lp_opts.pivot_limit = config.pivot_limit;

    std::vector<BncNode>& nodes = result.nodes;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> open;

    BncNode root;
    root.id = 0;
    root.lower = inst.lower;
    root.upper = inst.upper;
    nodes.push_back(root);
    open.push({-kInf, 0});

    std::optional<std::vector<double>> incumbent;
    double incumbent_value = kInf;

    std::vector<CutProvenance>& cut_pool = result.cut_pool;
    StateGraph graph = build_graph(inst, {}, {}, 0);
    std::vector<CutProvenance> pending_cuts;  // added since the last graph refresh
    int decision_index = 0;

    // Dual bound over all open nodes plus the node currently in hand.
    auto current_dual = [&](double in_hand) {
        double d = in_hand;
        if (!open.empty()) d = std::min(d, open.top().bound);
        return d;
    };

    std::string stop_reason;
    while (!open.empty()) {
        if (metrics.nodes_processed >= config.node_limit) {
            stop_reason = "node_limit";
            break;
        }
        if (elapsed() > config.wall_time_limit) {
            stop_reason = "time_limit";
            break;
        }
        QueueEntry entry = open.top();
        open.pop();
        BncNode& node = nodes[entry.id];
        if (incumbent && node.dual_bound >= incumbent_value - kBoundTol) {
            node.status = NodeStatus::PrunedBound;
            continue;
        }
        ++metrics.nodes_processed;

        LpProblem lp = LpProblem::from_instance(inst);
        lp.lower = node.lower;
        lp.upper = node.upper;
        for (int cid : node.path_cuts) {
            SparseRow row;
            row.coefs = cut_pool[cid].coefs;
            row.rhs = cut_pool[cid].rhs;
            lp.add_row(std::move(row));
        }

        LpSolver solver(lp, lp_opts);
        LpSolution sol = solver.solve(node.warm_basis.empty() ? nullptr : &node.warm_basis,
                                      node.warm_basis.empty() ? nullptr : &node.warm_at_upper);
        metrics.total_pivots += sol.pivot_count;
        if (sol.status == LpStatus::IterLimit)
            throw SolveError("LP pivot limit reached at node " + std::to_string(node.id));
        if (sol.status == LpStatus::Unbounded)
            throw SolveError("LP relaxation unbounded at node " + std::to_string(node.id));
        if (sol.status == LpStatus::Infeasible) {
            node.status = NodeStatus::PrunedInfeasible;
            continue;
        }
        node.dual_bound = sol.objective;

        bool in_scope = config.cut_scope == CutScope::AllNodes ||
                        (config.cut_scope == CutScope::RootOnly && node.id == 0);
        bool pruned = false;

        if (incumbent && sol.objective >= incumbent_value - kBoundTol) {
            node.status = NodeStatus::PrunedBound;
            pruned = true;
        }

        if (!pruned && in_scope && config.rounds_per_node > 0) {
            for (int round = 0; round < config.rounds_per_node; ++round) {
                if (most_fractional_var(inst, sol.x) < 0) break;  // integral already
                auto candidates = separate_gomory(solver, sol, inst, config.max_cuts_per_round,
                                                  node.id, decision_index);
                if (candidates.empty()) break;

                GraphDelta delta;
                delta.base_version = graph.version;
                delta.current_round = decision_index;
                delta.new_cuts = std::move(pending_cuts);
                pending_cuts.clear();
                delta.candidates = candidates;
                refresh(graph, delta);

                double gap_before =
                    global_gap(incumbent.has_value(), incumbent_value, current_dual(node.dual_bound));

                SelectionContext ctx{graph, candidates, sol.x, incumbent};
                CutAction action = selector.select(ctx);

                bool keep_going = !action.selected.empty();
                std::vector<int> new_cut_ids;
                if (keep_going) {
                    double bound_before = sol.objective;
                    for (int idx : action.selected) {
                        const CutCandidate& cand = candidates[idx];
                        CutProvenance prov;
                        prov.coefs = cand.coefs;
                        prov.rhs = cand.rhs;
                        prov.node_id = node.id;
                        prov.addition_round = decision_index;
                        prov.bound_before = bound_before;
                        prov.parallelism = objective_parallelism(cand.coefs, inst.objective);
                        prov.branch = node.branching;
                        new_cut_ids.push_back(static_cast<int>(cut_pool.size()));
                        cut_pool.push_back(std::move(prov));
                        SparseRow row;
                        row.coefs = cand.coefs;
                        row.rhs = cand.rhs;
                        lp.add_row(std::move(row));
                        node.path_cuts.push_back(new_cut_ids.back());
                        ++metrics.cuts_added;
                    }
                    // Warm start: previous basis plus the new rows' slacks.
                    std::vector<int> warm = sol.basis;
                    std::vector<int> warm_up = sol.at_upper;
                    for (int k = lp.num_rows() - static_cast<int>(new_cut_ids.size());
                         k < lp.num_rows(); ++k)
                        warm.push_back(lp.num_structural + k);
                    solver = LpSolver(lp, lp_opts);
                    sol = solver.solve(&warm, &warm_up);
                    metrics.total_pivots += sol.pivot_count;
                    if (sol.status == LpStatus::IterLimit)
                        throw SolveError("LP pivot limit reached at node " +
                                         std::to_string(node.id));
                    if (sol.status == LpStatus::Infeasible) {
                        node.status = NodeStatus::PrunedInfeasible;
                        pruned = true;
                    } else {
                        node.dual_bound = std::max(node.dual_bound, sol.objective);
                        for (int cid : new_cut_ids) cut_pool[cid].bound_after = sol.objective;
                        for (int cid : new_cut_ids) pending_cuts.push_back(cut_pool[cid]);
                    }
                }

                double gap_after = global_gap(
                    incumbent.has_value(), incumbent_value,
                    current_dual(pruned ? incumbent_value : node.dual_bound));
                metrics.gap_trace.emplace_back(decision_index, gap_after);
                if (config.record_decisions) {
                    DecisionRecord rec;
                    rec.graph = graph;
                    rec.candidates = candidates;
                    rec.action = action;
                    rec.gap_before = gap_before;
                    rec.gap_after = gap_after;
                    result.decisions.push_back(std::move(rec));
                }
                ++decision_index;
                if (pruned || !keep_going) break;
                if (incumbent && sol.objective >= incumbent_value - kBoundTol) {
                    node.status = NodeStatus::PrunedBound;
                    pruned = true;
                    break;
                }
            }
        }

        if (pruned) continue;

        int branch_var = most_fractional_var(inst, sol.x);
        if (branch_var < 0) {
            // Integral LP solution: candidate incumbent.
            std::vector<double> point = sol.x;
            double value = 0.0;
            for (int j : inst.integer_set) point[j] = std::round(point[j]);
            for (int j = 0; j < inst.num_vars; ++j) value += inst.objective[j] * point[j];
            node.status = NodeStatus::Integral;
            if (!incumbent || value < incumbent_value) {
                incumbent = std::move(point);
                incumbent_value = value;
            }
            continue;
        }

        node.status = NodeStatus::Branched;
        double v = sol.x[branch_var];
        // Copies first: pushing children may reallocate `nodes` and
        // invalidate the parent reference.
        const int parent_id = node.id;
        const int parent_depth = node.depth;
        const double parent_bound = node.dual_bound;
        const std::vector<double> parent_lower = node.lower;
        const std::vector<double> parent_upper = node.upper;
        const std::vector<int> parent_cuts = node.path_cuts;
        for (int side = 0; side < 2; ++side) {
            BncNode child;
            child.id = static_cast<int>(nodes.size());
            child.parent = parent_id;
            child.depth = parent_depth + 1;
            child.lower = parent_lower;
            child.upper = parent_upper;
            if (side == 0) {
                child.upper[branch_var] = std::floor(v);
                child.branching = {branch_var, -1.0, std::floor(v)};
            } else {
                child.lower[branch_var] = std::ceil(v);
                child.branching = {branch_var, 1.0, std::ceil(v)};
            }
            if (child.lower[branch_var] > child.upper[branch_var] + kBoundTol) continue;
            child.path_cuts = parent_cuts;
            child.warm_basis = sol.basis;
            child.warm_at_upper = sol.at_upper;
            child.dual_bound = parent_bound;
            open.push({child.dual_bound, child.id});
            nodes.push_back(std::move(child));
        }
    }

    metrics.wall_seconds = elapsed();
    metrics.has_incumbent = incumbent.has_value();
    metrics.incumbent_value = incumbent ? incumbent_value : 0.0;
    if (!stop_reason.empty()) {
        metrics.final_status = stop_reason;
        double d = incumbent ? incumbent_value : kInf;
        if (!open.empty()) d = std::min(d, open.top().bound);
        metrics.dual_bound = d;
    } else {
        metrics.final_status = incumbent ? "optimal" : "infeasible";
        metrics.dual_bound = incumbent ? incumbent_value : kInf;
    }
    result.incumbent = std::move(incumbent);
    return result;
}

} // namespace treecut
