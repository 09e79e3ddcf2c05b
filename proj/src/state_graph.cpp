#include "treecut/state_graph.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "treecut/errors.hpp"

namespace treecut {

namespace {

double clip(double v) { return std::clamp(v, -kFeatureClip, kFeatureClip); }

std::vector<double> var_features(const MipInstance& inst, int j) {
    bool is_int = inst.is_integer(j);
    bool is_bin = is_int && inst.lower[j] == 0.0 && inst.upper[j] == 1.0;
    return {clip(inst.lower[j]), clip(inst.upper[j]), clip(inst.objective[j]),
            is_bin ? 1.0 : 0.0, (is_int && !is_bin) ? 1.0 : 0.0, is_int ? 0.0 : 1.0};
}

std::vector<double> con_features(const SparseRow& row) {
    // All rows are a'x <= b: lhs is -inf (flag 1), type one-hot = (le, ge, eq).
    return {clip(row.rhs), 1.0, 1.0, 0.0, 0.0, static_cast<double>(row.coefs.size())};
}

std::vector<double> cand_features(const CutCandidate& c) {
    return {c.features.parallelism, c.features.efficacy, c.features.support,
            c.features.integral_support, c.features.normalized_violation};
}

void append_cut(StateGraph& g, const CutProvenance& prov, long* ops) {
    int v = g.total_vertices() - g.num_cands;  // insertion point before candidates
    (void)v;
    GraphVertex vert;
    vert.cls = VertexClass::AddedCut;
    double improvement = (prov.bound_after - prov.bound_before) /
                         std::max(std::fabs(prov.bound_before), 1.0);
    vert.features = {static_cast<double>(prov.addition_round), improvement, prov.parallelism};
    g.vertices.push_back(std::move(vert));
    g.cut_node_ids.push_back(prov.node_id);
    int u = static_cast<int>(g.vertices.size()) - 1;
    if (ops) ++*ops;
    for (const auto& [j, coef] : prov.coefs) {
        g.edges.push_back({u, g.var_vertex(j), {coef, prov.branch.sign, prov.branch.rhs}});
        if (ops) ++*ops;
    }
    ++g.num_cuts;
}

void append_candidate(StateGraph& g, const CutCandidate& cand, long* ops) {
    GraphVertex vert;
    vert.cls = VertexClass::Candidate;
    vert.features = cand_features(cand);
    g.vertices.push_back(std::move(vert));
    int u = static_cast<int>(g.vertices.size()) - 1;
    if (ops) ++*ops;
    for (const auto& [j, coef] : cand.coefs) {
        g.edges.push_back({u, g.var_vertex(j), {coef}});
        if (ops) ++*ops;
    }
    ++g.num_cands;
}

} // namespace

std::array<double, 3> cut_history_features(const CutProvenance& prov, int current_round) {
    double time = static_cast<double>(prov.addition_round) / std::max(current_round, 1);
    double improvement = (prov.bound_after - prov.bound_before) /
                         std::max(std::fabs(prov.bound_before), 1.0);
    return {time, improvement, prov.parallelism};
}

double StateGraph::cut_time_feature(int k) const {
    return vertices[cut_vertex(k)].features[0] / std::max(current_round, 1);
}

std::vector<double> StateGraph::vertex_features(int v) const {
    std::vector<double> f = vertices[v].features;
    if (vertices[v].cls == VertexClass::AddedCut)
        f[0] = f[0] / std::max(current_round, 1);
    for (double& x : f) x = clip(x);
    return f;
}

bool StateGraph::operator==(const StateGraph& other) const {
    if (num_vars != other.num_vars || num_cons != other.num_cons ||
        num_cuts != other.num_cuts || num_cands != other.num_cands ||
        current_round != other.current_round || cut_node_ids != other.cut_node_ids)
        return false;
    if (vertices.size() != other.vertices.size() || edges.size() != other.edges.size())
        return false;
    for (std::size_t i = 0; i < vertices.size(); ++i)
        if (vertices[i].cls != other.vertices[i].cls ||
            vertices[i].features != other.vertices[i].features)
            return false;
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (edges[i].u != other.edges[i].u || edges[i].v != other.edges[i].v ||
            edges[i].features != other.edges[i].features)
            return false;
    return true;
}

StateGraph build_graph(const MipInstance& inst, const std::vector<CutProvenance>& cuts,
                       const std::vector<CutCandidate>& candidates, int current_round) {
    StateGraph g;
    g.num_vars = inst.num_vars;
    g.num_cons = inst.num_cons;
    g.current_round = current_round;
    for (int j = 0; j < inst.num_vars; ++j)
        g.vertices.push_back({VertexClass::Variable, var_features(inst, j)});
    for (int i = 0; i < inst.num_cons; ++i) {
        g.vertices.push_back({VertexClass::Constraint, con_features(inst.rows[i])});
    }
    for (int i = 0; i < inst.num_cons; ++i)
        for (const auto& [j, coef] : inst.rows[i].coefs)
            g.edges.push_back({g.con_vertex(i), g.var_vertex(j), {coef}});
    for (const auto& prov : cuts) append_cut(g, prov, nullptr);
    for (const auto& cand : candidates) append_candidate(g, cand, nullptr);
    return g;
}

void refresh(StateGraph& g, const GraphDelta& delta, long* op_counter) {
    if (delta.base_version != g.version)
        throw InvalidInput("refresh: stale delta (base version " +
                           std::to_string(delta.base_version) + ", graph version " +
                           std::to_string(g.version) + ")");
    long ops = 0;
    // Drop the trailing candidate block.
    int cand_offset = g.cut_vertex(g.num_cuts);  // first candidate vertex index
    while (!g.edges.empty() && g.edges.back().u >= cand_offset) {
        g.edges.pop_back();
        ++ops;
    }
    ops += g.num_cands;
    g.vertices.resize(cand_offset);
    g.num_cands = 0;
    // Append new cuts, then the fresh candidate set.
    for (const auto& prov : delta.new_cuts) append_cut(g, prov, &ops);
    g.current_round = delta.current_round;
    for (const auto& cand : delta.candidates) append_candidate(g, cand, &ops);
    ++g.version;
    if (op_counter) *op_counter += ops;
}

std::string StateGraph::to_json() const {
    nlohmann::json j;
    nlohmann::json verts = nlohmann::json::array();
    static const char* names[] = {"variable", "constraint", "cut", "candidate"};
    for (int v = 0; v < total_vertices(); ++v) {
        nlohmann::json vj;
        vj["class"] = names[static_cast<int>(vertices[v].cls)];
        vj["features"] = vertex_features(v);
        verts.push_back(std::move(vj));
    }
    j["vertices"] = std::move(verts);
    nlohmann::json es = nlohmann::json::array();
    for (const auto& e : edges) {
        nlohmann::json ej;
        ej["u"] = e.u;
        ej["v"] = e.v;
        ej["features"] = e.features;
        es.push_back(std::move(ej));
    }
    j["edges"] = std::move(es);
    j["version"] = version;
    return j.dump();
}

} // namespace treecut
