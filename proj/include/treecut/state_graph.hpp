#ifndef TREECUT_STATE_GRAPH_HPP
#define TREECUT_STATE_GRAPH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "treecut/cuts.hpp"
#include "treecut/instance.hpp"

namespace treecut {

enum class VertexClass { Variable, Constraint, AddedCut, Candidate };

/// Fixed per-class feature arities.
inline constexpr int kVarFeatureArity = 6;   // lb, ub, obj_coef, one-hot type (bin/int/cont)
inline constexpr int kConFeatureArity = 6;   // rhs, lhs -inf flag, one-hot type (le/ge/eq), nnz
inline constexpr int kCutFeatureArity = 3;   // addition_time, improvement_effect, parallelism
inline constexpr int kCandFeatureArity = 5;  // the five candidate quality features

inline constexpr double kFeatureClip = 1e10;

/// Branching constraint in force at the node where a cut was added:
/// sign +1 for x_var >= rhs, -1 for x_var <= rhs, 0 at the root.
struct CutBranchContext {
    int var_index = -1;
    double sign = 0.0;
    double rhs = 0.0;
};

/// Everything the graph needs to encode one added cut.
struct CutProvenance {
    std::vector<std::pair<int, double>> coefs;
    double rhs = 0.0;
    int node_id = 0;
    int addition_round = 0;        // global decision index at insertion
    double bound_before = 0.0;     // local dual bound when the cut entered
    double bound_after = 0.0;
    double parallelism = 0.0;
    CutBranchContext branch;
};

struct GraphVertex {
    VertexClass cls;
    std::vector<double> features;
};

/// Edges run row-side vertex (constraint / cut / candidate) -> variable.
struct GraphEdge {
    int u = 0;  // graph vertex index of the row-side endpoint
    int v = 0;  // graph vertex index of the variable endpoint
    std::vector<double> features;
};

/// (addition_time, improvement_effect, parallelism) for a cut vertex.
std::array<double, 3> cut_history_features(const CutProvenance& prov, int current_round);

/// Bipartite encoding of the whole search tree: variables on one side,
/// constraints, added cuts and current candidates on the other. Vertex
/// order is fixed: variables, constraints, added cuts, candidates.
///
/// The addition-time feature of cut vertices is stored as the raw addition
/// round; normalization by the current round happens in feature readout
/// (cut_time_feature), which keeps refresh() work proportional to the delta.
struct StateGraph {
    int num_vars = 0;
    int num_cons = 0;
    int num_cuts = 0;
    int num_cands = 0;
    int current_round = 0;
    std::uint64_t version = 0;
    std::vector<GraphVertex> vertices;
    std::vector<GraphEdge> edges;
    std::vector<int> cut_node_ids;  // provenance node per added-cut vertex

    int var_vertex(int j) const { return j; }
    int con_vertex(int i) const { return num_vars + i; }
    int cut_vertex(int k) const { return num_vars + num_cons + k; }
    int cand_vertex(int k) const { return num_vars + num_cons + num_cuts + k; }
    int total_vertices() const { return num_vars + num_cons + num_cuts + num_cands; }

    /// Cut vertex time feature normalized per addition_round / max(round, 1).
    double cut_time_feature(int k) const;
    /// Materialized (normalized) feature vector for any vertex.
    std::vector<double> vertex_features(int v) const;

    std::string to_json() const;

    bool operator==(const StateGraph& other) const;
};

/// Changes since the last refresh: cuts appended and the replaced candidate
/// set (with the LP solution they were separated at).
struct GraphDelta {
    std::uint64_t base_version = 0;
    int current_round = 0;
    std::vector<CutProvenance> new_cuts;
    std::vector<CutCandidate> candidates;
};

StateGraph build_graph(const MipInstance& inst, const std::vector<CutProvenance>& cuts,
                       const std::vector<CutCandidate>& candidates, int current_round);

/// Applies a delta in place; work is proportional to the delta size. The
/// result equals a full rebuild with the same inputs. Throws on a stale
/// delta (base_version mismatch). `op_counter`, when given, accumulates the
/// number of vertices and edges touched.
void refresh(StateGraph& graph, const GraphDelta& delta, long* op_counter = nullptr);

} // namespace treecut

#endif
