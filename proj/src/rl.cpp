#include "treecut/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "treecut/errors.hpp"

namespace treecut {

using nn::Tensor;

namespace {

/// Stochastic/greedy sampler driving the engine from a model's forward
/// pass. Holds a frozen view of the parameters.
class ModelSampler : public CutSelector {
public:
    ModelSampler(const TrainableModel& model, SampleMode mode, std::uint64_t seed)
        : model_(model), mode_(mode), rng_(seed) {}
    CutAction select(const SelectionContext& ctx) override {
        if (ctx.candidates.empty()) return {};
        GcsOutput out = model_.forward(ctx.graph, ctx.candidates);
        return sample_action(out.probs.value(), mode_, -1,
                             mode_ == SampleMode::Stochastic ? &rng_ : nullptr);
    }
    std::string tag() const override { return "model"; }

private:
    const TrainableModel& model_;
    SampleMode mode_;
    Rng rng_;
};

// Differentiable clamp of probabilities into [eps, 1-eps].
Tensor squeeze_probs(const Tensor& p) {
    constexpr double eps = 1e-7;
    std::vector<double> off(p.size(), eps);
    return nn::add(nn::scale(p, 1.0 - 2.0 * eps),
                   Tensor::from_values(p.rows(), p.cols(), std::move(off)));
}

Tensor action_log_prob(const Tensor& probs, const std::vector<char>& bits) {
    std::vector<double> on(bits.size()), off(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        on[i] = bits[i] ? 1.0 : 0.0;
        off[i] = 1.0 - on[i];
    }
    Tensor b = Tensor::from_values(bits.size(), 1, std::move(on));
    Tensor nb = Tensor::from_values(bits.size(), 1, std::move(off));
    Tensor one_minus = nn::sub(Tensor::from_values(bits.size(), 1,
                                                   std::vector<double>(bits.size(), 1.0)),
                               probs);
    return nn::sum_all(nn::add(nn::mul(b, nn::log_t(probs)),
                               nn::mul(nb, nn::log_t(one_minus))));
}

Tensor bernoulli_entropy(const Tensor& probs) {
    Tensor one_minus = nn::sub(Tensor::from_values(probs.rows(), 1,
                                                   std::vector<double>(probs.rows(), 1.0)),
                               probs);
    return nn::scale(nn::mean_all(nn::add(nn::mul(probs, nn::log_t(probs)),
                                          nn::mul(one_minus, nn::log_t(one_minus)))),
                     -1.0);
}

std::optional<Trajectory> collect_episode(const MipInstance& inst, const TrainableModel& model,
                                          const SolveConfig& base_cfg,
                                          const BaselineTrace& baseline, double gamma,
                                          double lambda, std::uint64_t seed) {
    auto sel = std::make_unique<ModelSampler>(model, SampleMode::Stochastic, seed);
    SolveConfig cfg = base_cfg;
    cfg.record_decisions = true;
    SolveResult res = solve(inst, cfg, *sel);
    if (res.decisions.empty()) return std::nullopt;
    std::vector<double> improvements;
    improvements.reserve(res.decisions.size());
    for (const auto& d : res.decisions) improvements.push_back(d.gap_before - d.gap_after);
    std::vector<double> rewards = compute_rewards(improvements, baseline.gap_improvements);
    double terminal = terminal_reward(static_cast<double>(baseline.total_pivots),
                                      static_cast<double>(res.metrics.total_pivots), lambda);
    std::vector<double> returns = discounted_returns(rewards, terminal, gamma);
    Trajectory traj;
    traj.terminal_reward = terminal;
    traj.steps.reserve(res.decisions.size());
    for (std::size_t t = 0; t < res.decisions.size(); ++t) {
        TrajStep step;
        step.graph = std::move(res.decisions[t].graph);
        step.candidates = std::move(res.decisions[t].candidates);
        step.bits = res.decisions[t].action.bits;
        step.old_log_prob = res.decisions[t].action.log_prob;
        step.reward = rewards[t];
        step.ret = returns[t];
        traj.steps.push_back(std::move(step));
    }
    return traj;
}

double trajectory_return(const Trajectory& traj) {
    double total = traj.terminal_reward;
    for (const auto& s : traj.steps) total += s.reward;
    return total;
}

struct EvalStats {
    double mean_nodes = 0.0;
    double mean_pivots = 0.0;
};

EvalStats evaluate(const std::vector<MipInstance>& set, const TrainableModel& model,
                   const SolveConfig& cfg) {
    EvalStats stats;
    if (set.empty()) return stats;
    for (const auto& inst : set) {
        auto sel = model.greedy();
        SolveResult res = solve(inst, cfg, *sel);
        stats.mean_nodes += static_cast<double>(res.metrics.nodes_processed);
        stats.mean_pivots += static_cast<double>(res.metrics.total_pivots);
    }
    stats.mean_nodes /= static_cast<double>(set.size());
    stats.mean_pivots /= static_cast<double>(set.size());
    return stats;
}

} // namespace

BaselineTrace baseline_trace(const MipInstance& inst, const SolveConfig& config) {
    DefaultScoreSelector selector;
    SolveConfig cfg = config;
    cfg.record_decisions = true;
    SolveResult res = solve(inst, cfg, selector);
    BaselineTrace trace;
    trace.total_pivots = res.metrics.total_pivots;
    trace.nodes = res.metrics.nodes_processed;
    trace.gap_improvements.reserve(res.decisions.size());
    for (const auto& d : res.decisions)
        trace.gap_improvements.push_back(d.gap_before - d.gap_after);
    return trace;
}

std::vector<double> compute_rewards(const std::vector<double>& method_improvements,
                                    const std::vector<double>& baseline_improvements) {
    std::vector<double> rewards(method_improvements.size());
    for (std::size_t t = 0; t < rewards.size(); ++t) {
        double base = t < baseline_improvements.size() ? baseline_improvements[t] : 0.0;
        rewards[t] = method_improvements[t] - base;
    }
    return rewards;
}

double terminal_reward(double baseline_cost, double method_cost, double lambda) {
    return lambda * (baseline_cost - method_cost) / std::max(baseline_cost, 1.0);
}

std::vector<double> discounted_returns(const std::vector<double>& rewards, double terminal,
                                       double gamma) {
    if (rewards.empty()) throw InvalidInput("discounted_returns: empty rewards");
    std::vector<double> returns(rewards.size());
    double acc = 0.0;
    for (std::size_t k = rewards.size(); k-- > 0;) {
        double r = rewards[k] + (k + 1 == rewards.size() ? terminal : 0.0);
        acc = r + gamma * acc;
        returns[k] = acc;
    }
    return returns;
}

// --- models ---------------------------------------------------------------

GcsModel::GcsModel(std::uint64_t init_seed) : store_(std::make_shared<nn::ParamStore>()) {
    Rng rng(init_seed);
    gcs_init(*store_, rng);
}

GcsModel::GcsModel(const std::string& checkpoint_path)
    : store_(std::make_shared<nn::ParamStore>()) {
    store_->load(checkpoint_path, gcs_config_hash());
}

GcsOutput GcsModel::forward(const StateGraph& graph,
                            const std::vector<CutCandidate>&) const {
    return gcs_forward(graph, *store_);
}

std::unique_ptr<CutSelector> GcsModel::sampler(std::uint64_t seed) const {
    return std::make_unique<GcsSelector>(store_, SampleMode::Stochastic, seed);
}

std::unique_ptr<CutSelector> GcsModel::greedy() const {
    return std::make_unique<GcsSelector>(store_, SampleMode::Greedy);
}

SbpModel::SbpModel(std::uint64_t init_seed) : store_(std::make_shared<nn::ParamStore>()) {
    Rng rng(init_seed);
    sbp_init(*store_, rng);
    store_->add_param("sbp.vw1", kCandFeatureArity, kSbpHidden, rng);
    store_->add_zeros("sbp.vb1", 1, kSbpHidden);
    store_->add_param("sbp.vw2", kSbpHidden, 1, rng);
    store_->add_zeros("sbp.vb2", 1, 1);
}

SbpModel::SbpModel(const std::string& checkpoint_path)
    : store_(std::make_shared<nn::ParamStore>()) {
    store_->load(checkpoint_path, sbp_config_hash());
}

GcsOutput SbpModel::forward(const StateGraph&,
                            const std::vector<CutCandidate>& candidates) const {
    Tensor probs = nn::sigmoid(sbp_forward(candidates, *store_));
    std::vector<double> mean_feats(kCandFeatureArity, 0.0);
    for (const auto& c : candidates) {
        mean_feats[0] += c.features.efficacy;
        mean_feats[1] += c.features.parallelism;
        mean_feats[2] += c.features.support;
        mean_feats[3] += c.features.integral_support;
        mean_feats[4] += c.features.normalized_violation;
    }
    for (double& v : mean_feats) v /= static_cast<double>(candidates.size());
    Tensor x = Tensor::from_values(1, kCandFeatureArity, std::move(mean_feats));
    Tensor value = nn::affine(
        nn::relu(nn::affine(x, store_->get("sbp.vw1"), store_->get("sbp.vb1"))),
        store_->get("sbp.vw2"), store_->get("sbp.vb2"));
    return {probs, value};
}

std::unique_ptr<CutSelector> SbpModel::sampler(std::uint64_t seed) const {
    return std::make_unique<ModelSampler>(*this, SampleMode::Stochastic, seed);
}

std::unique_ptr<CutSelector> SbpModel::greedy() const {
    return std::make_unique<ModelSampler>(*this, SampleMode::Greedy, 0);
}

// --- PPO ------------------------------------------------------------------

PpoStats ppo_update(std::vector<Trajectory>& batch, TrainableModel& model,
                    const PpoConfig& config) {
    std::vector<TrajStep*> steps;
    for (auto& traj : batch)
        for (auto& s : traj.steps) steps.push_back(&s);
    if (steps.empty()) return {};

    // Advantages from the value net as it stands, normalized per batch.
    double mean = 0.0;
    for (TrajStep* s : steps) {
        GcsOutput out = model.forward(s->graph, s->candidates);
        s->advantage = s->ret - out.value.item();
        mean += s->advantage;
    }
    mean /= static_cast<double>(steps.size());
    double var = 0.0;
    for (TrajStep* s : steps) var += (s->advantage - mean) * (s->advantage - mean);
    double sd = std::sqrt(var / static_cast<double>(steps.size()));
    for (TrajStep* s : steps) s->advantage = (s->advantage - mean) / (sd + 1e-8);

    Rng rng(config.seed + 0x9e3779b97f4a7c15ull);
    std::vector<int> order(steps.size());
    std::iota(order.begin(), order.end(), 0);
    int minibatch = config.minibatch > 0 ? config.minibatch : static_cast<int>(steps.size());

    PpoStats stats;
    int stat_batches = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(minibatch)) {
            std::size_t end = std::min(order.size(), start + minibatch);
            Tensor policy_sum = Tensor::scalar(0.0);
            Tensor value_sum = Tensor::scalar(0.0);
            Tensor entropy_sum = Tensor::scalar(0.0);
            for (std::size_t k = start; k < end; ++k) {
                TrajStep& s = *steps[order[k]];
                GcsOutput out = model.forward(s.graph, s.candidates);
                Tensor p = squeeze_probs(out.probs);
                Tensor logp = action_log_prob(p, s.bits);
                Tensor ratio = nn::exp_t(nn::sub(logp, Tensor::scalar(s.old_log_prob)));
                double r = ratio.item();
                double A = s.advantage;
                Tensor surrogate;
                // min(rA, clip(r)A): the clipped branch is constant, so it
                // contributes no gradient.
                if ((A >= 0.0 && r > 1.0 + config.clip) || (A < 0.0 && r < 1.0 - config.clip)) {
                    double c = A >= 0.0 ? (1.0 + config.clip) * A : (1.0 - config.clip) * A;
                    surrogate = Tensor::scalar(c);
                } else {
                    surrogate = nn::scale(ratio, A);
                }
                policy_sum = nn::add(policy_sum, surrogate);
                entropy_sum = nn::add(entropy_sum, bernoulli_entropy(p));
                Tensor diff = nn::sub(out.value, Tensor::scalar(s.ret));
                value_sum = nn::add(value_sum, nn::mul(diff, diff));
            }
            double m = static_cast<double>(end - start);
            Tensor policy_loss = nn::scale(policy_sum, -1.0 / m);
            Tensor value_loss = nn::scale(value_sum, 1.0 / m);
            Tensor total = nn::add(
                nn::sub(policy_loss, nn::scale(entropy_sum, config.entropy_weight / m)),
                nn::scale(value_loss, config.value_weight));
            if (std::isnan(total.item()))
                throw SolveError("ppo_update: NaN loss in epoch " + std::to_string(epoch) +
                                 " minibatch at offset " + std::to_string(start) + " of " +
                                 std::to_string(steps.size()) + " steps");
            model.params().zero_grad();
            nn::backward(total);
            model.params().adam_step(config.lr);
            if (epoch + 1 == config.epochs) {
                stats.policy_loss += policy_loss.item();
                stats.value_loss += value_loss.item();
                ++stat_batches;
            }
        }
    }
    if (stat_batches > 0) {
        stats.policy_loss /= stat_batches;
        stats.value_loss /= stat_batches;
    }
    return stats;
}

TrainResult train(const std::vector<MipInstance>& train_set,
                  const std::vector<MipInstance>& eval_set, TrainableModel& model,
                  const TrainConfig& config) {
    if (train_set.empty()) throw InvalidInput("train: empty training set");
    TrainResult result;
    std::ostringstream curve;
    curve << "iteration,mean_return,eval_nodes_mean,eval_pivots_mean,policy_loss,value_loss\n";

    std::vector<std::optional<BaselineTrace>> baselines(train_set.size());
    auto baseline_for = [&](std::size_t idx) -> const BaselineTrace& {
        if (!baselines[idx]) baselines[idx] = baseline_trace(train_set[idx], config.solve);
        return *baselines[idx];
    };

    Rng rng(config.ppo.seed);
    EvalStats eval{};
    bool have_eval = false;
    result.best_eval_nodes = kInf;

    auto save_checkpoint = [&](const std::string& name) {
        if (config.out_dir.empty()) return std::string();
        std::string path = config.out_dir + "/" + name;
        model.params().save(path, model.config_hash());
        return path;
    };

    for (int iter = 0; iter < config.iterations; ++iter) {
        struct Slot {
            std::size_t inst = 0;
            std::uint64_t seed = 0;
            std::optional<Trajectory> traj;
            bool failed = false;
        };
        std::vector<Slot> slots(config.episodes_per_iteration);
        for (auto& slot : slots) {
            slot.inst = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(train_set.size()) - 1));
            slot.seed = static_cast<std::uint64_t>(rng.uniform_int(0, 1 << 30));
            baseline_for(slot.inst);  // materialize before parallel rollouts
        }
        auto run_slot = [&](Slot& slot) {
            try {
                slot.traj = collect_episode(train_set[slot.inst], model, config.solve,
                                            *baselines[slot.inst], config.ppo.gamma,
                                            config.ppo.lambda_terminal, slot.seed);
            } catch (const SolveError&) {
                slot.failed = true;
            }
        };
        int workers = std::max(1, config.workers);
        if (workers == 1) {
            for (auto& slot : slots) run_slot(slot);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w)
                pool.emplace_back([&, w] {
                    for (std::size_t k = w; k < slots.size(); k += workers) run_slot(slots[k]);
                });
            for (auto& t : pool) t.join();
        }

        std::vector<Trajectory> batch;
        double mean_return = 0.0;
        int episodes = 0;
        for (auto& slot : slots) {
            if (slot.failed) {
                ++result.dropped_episodes;
                continue;
            }
            if (!slot.traj) continue;
            mean_return += trajectory_return(*slot.traj);
            ++episodes;
            batch.push_back(std::move(*slot.traj));
        }
        if (episodes > 0) mean_return /= episodes;
        result.mean_returns.push_back(mean_return);

        PpoStats stats;
        if (!batch.empty()) stats = ppo_update(batch, model, config.ppo);

        bool do_eval = config.eval_interval > 0 &&
                       (iter % config.eval_interval == 0 || iter + 1 == config.iterations);
        if (do_eval && !eval_set.empty()) {
            eval = evaluate(eval_set, model, config.solve);
            have_eval = true;
            if (eval.mean_nodes < result.best_eval_nodes) {
                result.best_eval_nodes = eval.mean_nodes;
                std::string path = save_checkpoint("best.ckpt.json");
                if (!path.empty()) result.best_checkpoint = path;
            }
        }
        if (config.checkpoint_interval > 0 && (iter + 1) % config.checkpoint_interval == 0)
            save_checkpoint("iter" + std::to_string(iter + 1) + ".ckpt.json");

        curve << iter << ',' << mean_return << ',' << (have_eval ? eval.mean_nodes : 0.0) << ','
              << (have_eval ? eval.mean_pivots : 0.0) << ',' << stats.policy_loss << ','
              << stats.value_loss << '\n';
    }
    save_checkpoint("final.ckpt.json");
    if (result.best_checkpoint.empty() && !config.out_dir.empty())
        result.best_checkpoint = config.out_dir + "/final.ckpt.json";
    result.curve_csv = curve.str();
    return result;
}

std::uint64_t count_action_space(int n) {
    if (n < 0 || n > 12) throw InvalidInput("count_action_space: n must be in [0, 12]");
    std::uint64_t total = 0;
    for (int k = 0; k <= n; ++k) {
        std::uint64_t perms = 1;
        for (int j = 0; j < k; ++j) perms *= static_cast<std::uint64_t>(n - j);
        total += perms;
    }
    return total;
}

} // namespace treecut
