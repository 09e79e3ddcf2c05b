#ifndef TREECUT_RL_HPP
#define TREECUT_RL_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "treecut/policy.hpp"
#include "treecut/tree.hpp"

namespace treecut {

/// One recorded decision: everything needed to re-evaluate the policy on
/// the state and rebuild the action's log-probability.
struct TrajStep {
    StateGraph graph;
    std::vector<CutCandidate> candidates;
    std::vector<char> bits;
    double old_log_prob = 0.0;
    double reward = 0.0;
    double ret = 0.0;        // discounted return
    double advantage = 0.0;
};

struct Trajectory {
    std::vector<TrajStep> steps;
    double terminal_reward = 0.0;
};

/// Deterministic reference run of one instance under the default scorer:
/// per-decision gap improvements plus the total pivot cost.
struct BaselineTrace {
    std::vector<double> gap_improvements;
    long total_pivots = 0;
    long nodes = 0;
};

BaselineTrace baseline_trace(const MipInstance& inst, const SolveConfig& config);

struct PpoConfig {
    double gamma = 0.99;
    double clip = 0.2;
    int epochs = 4;
    int minibatch = 32;
    double lr = 3e-4;
    double value_weight = 0.5;
    double entropy_weight = 0.01;
    double lambda_terminal = 1.0;
    std::uint64_t seed = 0;
};

/// r_t = method gap improvement at t minus the baseline's improvement at
/// the same decision index (0 past the baseline's last step).
std::vector<double> compute_rewards(const std::vector<double>& method_improvements,
                                    const std::vector<double>& baseline_improvements);

/// lambda * (C_baseline - C_method) / max(C_baseline, 1).
double terminal_reward(double baseline_cost, double method_cost, double lambda);

/// R_t = r_t + gamma * R_{t+1}, terminal folded into the last reward.
std::vector<double> discounted_returns(const std::vector<double>& rewards, double terminal,
                                       double gamma);

/// Policy + value network trained by PPO. Implementations share one
/// parameter store between the rollout sampler and the update path.
class TrainableModel {
public:
    virtual ~TrainableModel() = default;
    virtual nn::ParamStore& params() = 0;
    virtual const nn::ParamStore& params() const = 0;
    virtual GcsOutput forward(const StateGraph& graph,
                              const std::vector<CutCandidate>& candidates) const = 0;
    virtual std::unique_ptr<CutSelector> sampler(std::uint64_t seed) const = 0;
    virtual std::unique_ptr<CutSelector> greedy() const = 0;
    virtual std::string config_hash() const = 0;
};

class GcsModel : public TrainableModel {
public:
    explicit GcsModel(std::uint64_t init_seed);
    explicit GcsModel(const std::string& checkpoint_path);
    nn::ParamStore& params() override { return *store_; }
    const nn::ParamStore& params() const override { return *store_; }
    GcsOutput forward(const StateGraph& graph,
                      const std::vector<CutCandidate>& candidates) const override;
    std::unique_ptr<CutSelector> sampler(std::uint64_t seed) const override;
    std::unique_ptr<CutSelector> greedy() const override;
    std::string config_hash() const override { return gcs_config_hash(); }

private:
    std::shared_ptr<nn::ParamStore> store_;
};

/// Score-based policy over the five candidate features; probabilities are
/// independent sigmoids of the scores, the value estimate comes from a
/// small head over the mean feature vector.
class SbpModel : public TrainableModel {
public:
    explicit SbpModel(std::uint64_t init_seed);
    explicit SbpModel(const std::string& checkpoint_path);
    nn::ParamStore& params() override { return *store_; }
    const nn::ParamStore& params() const override { return *store_; }
    GcsOutput forward(const StateGraph& graph,
                      const std::vector<CutCandidate>& candidates) const override;
    std::unique_ptr<CutSelector> sampler(std::uint64_t seed) const override;
    std::unique_ptr<CutSelector> greedy() const override;
    std::string config_hash() const override { return sbp_config_hash(); }

private:
    std::shared_ptr<nn::ParamStore> store_;
};

struct PpoStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
};

/// Clipped-surrogate update over the batch: advantages are recomputed with
/// the current value net and normalized per batch, then `epochs` passes of
/// minibatch gradient steps. Throws on a NaN loss, naming the minibatch.
PpoStats ppo_update(std::vector<Trajectory>& batch, TrainableModel& model,
                    const PpoConfig& config);

struct TrainConfig {
    PpoConfig ppo;
    SolveConfig solve;
    int iterations = 50;
    int episodes_per_iteration = 8;
    int eval_interval = 10;
    int checkpoint_interval = 25;
    int workers = 1;           // rollout concurrency; 1 = deterministic
    std::string out_dir;       // empty disables checkpoint files
};

struct TrainResult {
    std::string curve_csv;     // iteration,mean_return,eval_nodes_mean,...
    std::string best_checkpoint;
    double best_eval_nodes = 0.0;
    std::vector<double> mean_returns;
    long dropped_episodes = 0;
};

TrainResult train(const std::vector<MipInstance>& train_set,
                  const std::vector<MipInstance>& eval_set, TrainableModel& model,
                  const TrainConfig& config);

/// Number of ordered subsets of n candidates, sum over k of n!/(n-k)!.
/// Exact in 64 bits only up to n = 12.
std::uint64_t count_action_space(int n);

} // namespace treecut

#endif
