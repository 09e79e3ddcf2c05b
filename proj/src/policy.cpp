#include "treecut/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treecut/errors.hpp"

namespace treecut {

using nn::Tensor;

namespace {

constexpr int kEdgeArity = 3;  // con/cand edges zero-padded to the cut arity

std::string round_prefix(int r) { return "conv" + std::to_string(r); }

// Clamp away from 0/1 so log-probs stay finite under PPO.
constexpr double kProbFloor = 1e-7;

double clamp_prob(double p) {
    return std::min(1.0 - kProbFloor, std::max(kProbFloor, p));
}

} // namespace

std::string gcs_config_hash() {
    return "gcs-w" + std::to_string(kEmbedWidth) + "-r" + std::to_string(kConvRounds) + "-t" +
           std::to_string(kTransformerBlocks) + "x" + std::to_string(kTransformerHeads);
}

std::string sbp_config_hash() { return "sbp-h" + std::to_string(kSbpHidden); }

void gcs_init(nn::ParamStore& store, Rng& rng) {
    const int w = kEmbedWidth;
    store.add_param("embed.var.w", kVarFeatureArity, w, rng);
    store.add_zeros("embed.var.b", 1, w);
    store.add_param("embed.con.w", kConFeatureArity, w, rng);
    store.add_zeros("embed.con.b", 1, w);
    store.add_param("embed.cut.w", kCutFeatureArity, w, rng);
    store.add_zeros("embed.cut.b", 1, w);
    store.add_param("embed.cand.w", kCandFeatureArity, w, rng);
    store.add_zeros("embed.cand.b", 1, w);
    for (int r = 0; r < kConvRounds; ++r) {
        std::string p = round_prefix(r);
        store.add_param(p + ".msg_to_var.w", w + kEdgeArity, w, rng);
        store.add_zeros(p + ".msg_to_var.b", 1, w);
        store.add_param(p + ".upd_var.w", 2 * w, w, rng);
        store.add_zeros(p + ".upd_var.b", 1, w);
        store.add_param(p + ".msg_to_row.w", w + kEdgeArity, w, rng);
        store.add_zeros(p + ".msg_to_row.b", 1, w);
        store.add_param(p + ".upd_row.w", 2 * w, w, rng);
        store.add_zeros(p + ".upd_row.b", 1, w);
    }
    for (int b = 0; b < kTransformerBlocks; ++b)
        nn::TransformerBlock::create(store, "tf" + std::to_string(b), kTransformerWidth,
                                     kTransformerHeads, kFfnHidden, rng);
    store.add_param("policy.w", kTransformerWidth, 1, rng);
    store.add_zeros("policy.b", 1, 1);
    store.add_param("value.w1", w, w, rng);
    store.add_zeros("value.b1", 1, w);
    store.add_param("value.w2", w, 1, rng);
    store.add_zeros("value.b2", 1, 1);
}

void sbp_init(nn::ParamStore& store, Rng& rng) {
    store.add_param("sbp.w1", kCandFeatureArity, kSbpHidden, rng);
    store.add_zeros("sbp.b1", 1, kSbpHidden);
    store.add_param("sbp.w2", kSbpHidden, 1, rng);
    store.add_zeros("sbp.b2", 1, 1);
}

GcsOutput gcs_forward(const StateGraph& graph, const nn::ParamStore& store) {
    if (graph.num_cands < 1) throw InvalidInput("gcs_forward: graph has no candidates");
    const int n = graph.num_vars;
    const int num_rows = graph.num_cons + graph.num_cuts + graph.num_cands;

    auto class_matrix = [&](int first, int count, int arity) {
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(count) * arity);
        for (int k = 0; k < count; ++k) {
            auto f = graph.vertex_features(first + k);
            vals.insert(vals.end(), f.begin(), f.end());
        }
        return Tensor::from_values(count, arity, std::move(vals));
    };

    Tensor h_var = nn::affine(class_matrix(graph.var_vertex(0), n, kVarFeatureArity),
                              store.get("embed.var.w"), store.get("embed.var.b"));

    // Row side stacked in graph order: constraints, cuts, candidates.
    auto embed_into_rows = [&](const Tensor& h, int offset) {
        std::vector<int> idx(h.rows());
        std::iota(idx.begin(), idx.end(), offset);
        return nn::scatter_sum_rows(h, std::move(idx), num_rows);
    };
    Tensor h_row;
    {
        Tensor acc = embed_into_rows(
            nn::affine(class_matrix(graph.con_vertex(0), graph.num_cons, kConFeatureArity),
                       store.get("embed.con.w"), store.get("embed.con.b")),
            0);
        if (graph.num_cuts > 0)
            acc = nn::add(acc,
                          embed_into_rows(
                              nn::affine(class_matrix(graph.cut_vertex(0), graph.num_cuts,
                                                      kCutFeatureArity),
                                         store.get("embed.cut.w"), store.get("embed.cut.b")),
                              graph.num_cons));
        acc = nn::add(acc, embed_into_rows(
                               nn::affine(class_matrix(graph.cand_vertex(0), graph.num_cands,
                                                       kCandFeatureArity),
                                          store.get("embed.cand.w"), store.get("embed.cand.b")),
                               graph.num_cons + graph.num_cuts));
        h_row = acc;
    }

    // Edge endpoints as row indices into h_row / h_var, features padded to
    // the widest per-class arity.
    const int num_edges = static_cast<int>(graph.edges.size());
    std::vector<int> edge_row(num_edges), edge_var(num_edges);
    std::vector<double> edge_feats(static_cast<std::size_t>(num_edges) * kEdgeArity, 0.0);
    for (int e = 0; e < num_edges; ++e) {
        const GraphEdge& ed = graph.edges[e];
        edge_row[e] = ed.u - n;
        edge_var[e] = ed.v;
        for (std::size_t k = 0; k < ed.features.size() && k < kEdgeArity; ++k)
            edge_feats[static_cast<std::size_t>(e) * kEdgeArity + k] = ed.features[k];
    }
    Tensor edge_f = Tensor::from_values(num_edges, kEdgeArity, std::move(edge_feats));

    for (int r = 0; r < kConvRounds; ++r) {
        std::string p = round_prefix(r);
        // row side -> variables
        Tensor msg = nn::affine(nn::concat_cols(nn::gather_rows(h_row, edge_row), edge_f),
                                store.get(p + ".msg_to_var.w"), store.get(p + ".msg_to_var.b"));
        Tensor agg = nn::scatter_sum_rows(msg, edge_var, n);
        Tensor h_var_next = nn::relu(nn::layer_norm_rows(
            nn::affine(nn::concat_cols(h_var, agg), store.get(p + ".upd_var.w"),
                       store.get(p + ".upd_var.b"))));
        // variables -> row side
        Tensor vmsg = nn::affine(nn::concat_cols(nn::gather_rows(h_var, edge_var), edge_f),
                                 store.get(p + ".msg_to_row.w"), store.get(p + ".msg_to_row.b"));
        Tensor vagg = nn::scatter_sum_rows(vmsg, edge_row, num_rows);
        h_row = nn::relu(nn::layer_norm_rows(
            nn::affine(nn::concat_cols(h_row, vagg), store.get(p + ".upd_row.w"),
                       store.get(p + ".upd_row.b"))));
        h_var = h_var_next;
    }

    std::vector<int> cand_idx(graph.num_cands);
    std::iota(cand_idx.begin(), cand_idx.end(), graph.num_cons + graph.num_cuts);
    Tensor h_cand = nn::gather_rows(h_row, cand_idx);
    Tensor context = nn::repeat_rows(nn::mean_rows(h_cand), graph.num_cands);
    Tensor seq = nn::concat_cols(h_cand, context);
    for (int b = 0; b < kTransformerBlocks; ++b) {
        auto block = nn::TransformerBlock::from_store(store, "tf" + std::to_string(b),
                                                      kTransformerHeads);
        seq = block.forward(seq);
    }
    Tensor probs = nn::sigmoid(nn::affine(seq, store.get("policy.w"), store.get("policy.b")));

    double total = static_cast<double>(n + num_rows);
    Tensor pooled = nn::scale(nn::add(nn::scale(nn::mean_rows(h_var), n / total),
                                      nn::scale(nn::mean_rows(h_row), num_rows / total)),
                              1.0);
    Tensor value = nn::affine(nn::relu(nn::affine(pooled, store.get("value.w1"),
                                                  store.get("value.b1"))),
                              store.get("value.w2"), store.get("value.b2"));
    return {probs, value};
}

Tensor sbp_forward(const std::vector<CutCandidate>& candidates, const nn::ParamStore& store) {
    if (candidates.empty()) throw InvalidInput("sbp_forward: no candidates");
    std::vector<double> vals;
    vals.reserve(candidates.size() * kCandFeatureArity);
    for (const auto& c : candidates) {
        vals.push_back(c.features.efficacy);
        vals.push_back(c.features.parallelism);
        vals.push_back(c.features.support);
        vals.push_back(c.features.integral_support);
        vals.push_back(c.features.normalized_violation);
    }
    Tensor x = Tensor::from_values(candidates.size(), kCandFeatureArity, std::move(vals));
    return nn::affine(nn::relu(nn::affine(x, store.get("sbp.w1"), store.get("sbp.b1"))),
                      store.get("sbp.w2"), store.get("sbp.b2"));
}

CutAction sample_action(const std::vector<double>& probs, SampleMode mode, int max_select,
                        Rng* rng) {
    if (probs.empty()) throw InvalidInput("sample_action: empty probabilities");
    const int l = static_cast<int>(probs.size());
    CutAction action;
    action.probs.resize(l);
    action.bits.assign(l, 0);
    for (int i = 0; i < l; ++i) action.probs[i] = clamp_prob(probs[i]);
    if (mode == SampleMode::Stochastic && rng == nullptr)
        throw InvalidInput("sample_action: stochastic mode needs an rng");
    for (int i = 0; i < l; ++i) {
        bool on = mode == SampleMode::Greedy ? action.probs[i] > 0.5
                                             : rng->bernoulli(action.probs[i]);
        action.bits[i] = on ? 1 : 0;
    }
    std::vector<int> selected;
    for (int i = 0; i < l; ++i)
        if (action.bits[i]) selected.push_back(i);
    std::stable_sort(selected.begin(), selected.end(), [&](int a, int b) {
        if (action.probs[a] != action.probs[b]) return action.probs[a] > action.probs[b];
        return a < b;
    });
    if (max_select >= 0 && static_cast<int>(selected.size()) > max_select) {
        for (std::size_t k = max_select; k < selected.size(); ++k)
            action.bits[selected[k]] = 0;
        selected.resize(max_select);
    }
    action.selected = std::move(selected);
    action.log_prob = 0.0;
    for (int i = 0; i < l; ++i)
        action.log_prob +=
            action.bits[i] ? std::log(action.probs[i]) : std::log(1.0 - action.probs[i]);
    return action;
}

std::vector<double> default_scores(const std::vector<CutCandidate>& candidates,
                                   const DefaultWeights& w, const std::vector<double>& x_lp,
                                   const std::optional<std::vector<double>>& incumbent) {
    std::vector<double> scores(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const CutFeatures& f = candidates[i].features;
        double s = w.w_eff * f.efficacy + w.w_par * f.parallelism +
                   w.w_int * f.integral_support;
        if (incumbent) s += w.w_dcd * directed_cutoff(candidates[i], x_lp, incumbent);
        scores[i] = s;
    }
    return scores;
}

CutAction ranked_selection(const std::vector<double>& scores, double rho) {
    const int l = static_cast<int>(scores.size());
    int take = std::min(l, static_cast<int>(std::ceil(rho * l)));
    std::vector<int> order(l);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    CutAction action;
    action.bits.assign(l, 0);
    action.probs.assign(l, 0.5);
    for (int k = 0; k < take; ++k) {
        action.selected.push_back(order[k]);
        action.bits[order[k]] = 1;
    }
    action.log_prob = l * std::log(0.5);
    return action;
}

CutAction NoCutsSelector::select(const SelectionContext& ctx) {
    CutAction action;
    action.bits.assign(ctx.candidates.size(), 0);
    action.probs.assign(ctx.candidates.size(), kProbFloor);
    return action;
}

CutAction DefaultScoreSelector::select(const SelectionContext& ctx) {
    if (ctx.candidates.empty()) return {};
    return ranked_selection(default_scores(ctx.candidates, weights_, ctx.x_lp, ctx.incumbent),
                            weights_.rho);
}

CutAction RandomSelector::select(const SelectionContext& ctx) {
    std::vector<double> probs(ctx.candidates.size(), 0.5);
    return sample_action(probs, SampleMode::Stochastic, -1, &rng_);
}

CutAction SbpSelector::select(const SelectionContext& ctx) {
    if (ctx.candidates.empty()) return {};
    Tensor s = sbp_forward(ctx.candidates, *store_);
    return ranked_selection(s.value(), rho_);
}

CutAction GcsSelector::select(const SelectionContext& ctx) {
    if (ctx.candidates.empty()) return {};
    GcsOutput out = gcs_forward(ctx.graph, *store_);
    return sample_action(out.probs.value(), mode_, max_select_,
                         mode_ == SampleMode::Stochastic ? &rng_ : nullptr);
}

std::unique_ptr<CutSelector> make_selector(const std::string& tag, std::uint64_t seed,
                                           SampleMode gcs_mode) {
    if (tag == "nocuts") return std::make_unique<NoCutsSelector>();
    if (tag == "default") return std::make_unique<DefaultScoreSelector>();
    if (tag == "random") return std::make_unique<RandomSelector>(seed);
    auto colon = tag.find(':');
    if (colon != std::string::npos) {
        std::string kind = tag.substr(0, colon);
        std::string path = tag.substr(colon + 1);
        auto store = std::make_shared<nn::ParamStore>();
        if (kind == "sbp") {
            store->load(path, sbp_config_hash());
            return std::make_unique<SbpSelector>(std::move(store));
        }
        if (kind == "gcs") {
            store->load(path, gcs_config_hash());
            return std::make_unique<GcsSelector>(std::move(store), gcs_mode, seed);
        }
    }
    throw InvalidInput("unknown selector tag '" + tag + "'");
}

} // namespace treecut
