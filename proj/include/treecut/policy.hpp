#ifndef TREECUT_POLICY_HPP
#define TREECUT_POLICY_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "treecut/selector.hpp"
#include "treecut/state_graph.hpp"
#include "treecut/tensor.hpp"

namespace treecut {

/// GCS network sizes. Fixed for checkpoints; config_hash encodes them.
inline constexpr int kEmbedWidth = 32;
inline constexpr int kConvRounds = 4;
inline constexpr int kTransformerWidth = 64;  // candidate embedding + pooled context
inline constexpr int kTransformerBlocks = 2;
inline constexpr int kTransformerHeads = 4;
inline constexpr int kFfnHidden = 128;
inline constexpr int kSbpHidden = 16;

std::string gcs_config_hash();
std::string sbp_config_hash();

/// Creates all GCS parameters (embeddings, 4 untied message-passing rounds,
/// 2 transformer blocks, policy head, value head) in the store.
void gcs_init(nn::ParamStore& store, Rng& rng);
void sbp_init(nn::ParamStore& store, Rng& rng);

struct GcsOutput {
    nn::Tensor probs;  // l x 1, each in (0,1)
    nn::Tensor value;  // 1 x 1
};

/// Full forward pass over the state graph. Requires >= 1 candidate.
/// Permutation-equivariant in the candidates.
GcsOutput gcs_forward(const StateGraph& graph, const nn::ParamStore& store);

/// 2-layer perceptron score per candidate from the 5 quality features.
nn::Tensor sbp_forward(const std::vector<CutCandidate>& candidates, const nn::ParamStore& store);

enum class SampleMode { Stochastic, Greedy };

/// Builds the action from per-candidate probabilities. Stochastic draws
/// independent Bernoulli bits; greedy thresholds at 0.5. Selected cuts are
/// ordered by descending probability (ties by index); max_select keeps the
/// top ones. The log-prob covers the bits only (the ordering is
/// deterministic given the bits).
CutAction sample_action(const std::vector<double>& probs, SampleMode mode,
                        int max_select = -1, Rng* rng = nullptr);

struct DefaultWeights {
    double w_eff = 1.0;
    double w_par = 0.1;
    double w_int = 0.1;
    double w_dcd = 0.5;  // applied only when an incumbent exists
    double rho = 0.3;    // select ceil(rho * l) candidates
};

std::vector<double> default_scores(const std::vector<CutCandidate>& candidates,
                                   const DefaultWeights& weights,
                                   const std::vector<double>& x_lp,
                                   const std::optional<std::vector<double>>& incumbent);

/// Top-ceil(rho*l) by score (ties by index), ordered by descending score.
CutAction ranked_selection(const std::vector<double>& scores, double rho);

// --- selectors ------------------------------------------------------------
class NoCutsSelector : public CutSelector {
public:
    CutAction select(const SelectionContext& ctx) override;
    std::string tag() const override { return "nocuts"; }
};

class DefaultScoreSelector : public CutSelector {
public:
    explicit DefaultScoreSelector(DefaultWeights weights = {}) : weights_(weights) {}
    CutAction select(const SelectionContext& ctx) override;
    std::string tag() const override { return "default"; }

private:
    DefaultWeights weights_;
};

class RandomSelector : public CutSelector {
public:
    explicit RandomSelector(std::uint64_t seed) : rng_(seed) {}
    CutAction select(const SelectionContext& ctx) override;
    std::string tag() const override { return "random"; }

private:
    Rng rng_;
};

class SbpSelector : public CutSelector {
public:
    SbpSelector(std::shared_ptr<nn::ParamStore> store, double rho = 0.3)
        : store_(std::move(store)), rho_(rho) {}
    CutAction select(const SelectionContext& ctx) override;
    std::string tag() const override { return "sbp"; }

private:
    std::shared_ptr<nn::ParamStore> store_;
    double rho_;
};

class GcsSelector : public CutSelector {
public:
    GcsSelector(std::shared_ptr<nn::ParamStore> store, SampleMode mode,
                std::uint64_t seed = 0, int max_select = -1)
        : store_(std::move(store)), mode_(mode), rng_(seed), max_select_(max_select) {}
    CutAction select(const SelectionContext& ctx) override;
    std::string tag() const override { return "gcs"; }

private:
    std::shared_ptr<nn::ParamStore> store_;
    SampleMode mode_;
    Rng rng_;
    int max_select_;
};

/// Builds a selector from a CLI tag: nocuts | default | random |
/// sbp:<ckpt> | gcs:<ckpt>. The seed drives the random selector and
/// stochastic sampling.
std::unique_ptr<CutSelector> make_selector(const std::string& tag, std::uint64_t seed,
                                           SampleMode gcs_mode = SampleMode::Greedy);

} // namespace treecut

#endif
