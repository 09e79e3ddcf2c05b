#ifndef TREECUT_TENSOR_HPP
#define TREECUT_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "treecut/rng.hpp"

namespace treecut::nn {

/// 2-D float64 tensor with reverse-mode gradients. Value-semantic handle
/// over a shared node in the computation tape; building expressions records
/// the tape, backward() walks it in reverse topological order. Forward
/// evaluation with frozen parameters is safe concurrently; parameter
/// mutation is single-writer.
class Tensor {
public:
    struct Impl {
        std::size_t rows = 0, cols = 0;
        std::vector<double> value;
        std::vector<double> grad;
        std::vector<std::shared_ptr<Impl>> parents;
        std::function<void(Impl&)> backprop;  // empty for leaves
        bool requires_grad = false;
    };

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

    static Tensor from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return impl_ != nullptr; }
    std::size_t rows() const { return impl_->rows; }
    std::size_t cols() const { return impl_->cols; }
    std::size_t size() const { return impl_->value.size(); }
    const std::vector<double>& value() const { return impl_->value; }
    std::vector<double>& mutable_value() { return impl_->value; }
    const std::vector<double>& grad() const { return impl_->grad; }
    double item() const { return impl_->value.at(0); }
    std::shared_ptr<Impl> impl() const { return impl_; }

    void zero_grad() { impl_->grad.assign(impl_->value.size(), 0.0); }

private:
    std::shared_ptr<Impl> impl_;
};

// --- elementary ops -------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);   // same shape, or b is 1 x cols
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);   // elementwise, or b is 1 x cols
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor sum_all(const Tensor& a);                // 1x1
Tensor mean_all(const Tensor& a);               // 1x1
Tensor mean_rows(const Tensor& a);              // 1 x cols
Tensor transpose(const Tensor& a);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm_rows(const Tensor& a, double eps = 1e-5);
Tensor gather_rows(const Tensor& a, std::vector<int> index);
Tensor scatter_sum_rows(const Tensor& a, std::vector<int> index, std::size_t num_rows);
Tensor repeat_rows(const Tensor& a, std::size_t count);  // a is 1 x d

inline Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add(matmul(x, w), b);
}

/// Reverse pass from a scalar loss; accumulates into .grad of every
/// reachable requires_grad tensor. Throws on a non-scalar loss or when the
/// loss value is NaN.
void backward(const Tensor& loss);

// --- parameters and optimizer --------------------------------------------
struct AdamState {
    std::vector<double> m, v;
};

/// Named parameter tensors plus adaptive-moment optimizer state.
class ParamStore {
public:
    Tensor add_param(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng);
    Tensor add_zeros(const std::string& name, std::size_t rows, std::size_t cols);
    Tensor add_constant(const std::string& name, std::size_t rows, std::size_t cols, double v);
    Tensor get(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) > 0; }
    const std::vector<std::string>& names() const { return order_; }

    void zero_grad();
    /// Standard adaptive-moment update with bias correction.
    void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    long step() const { return step_; }

    void save(const std::string& path, const std::string& config_hash) const;
    void load(const std::string& path, const std::string& expected_config_hash = "");

    void copy_values_from(const ParamStore& other);

private:
    std::vector<std::string> order_;
    std::map<std::string, Tensor> params_;
    std::map<std::string, AdamState> opt_;
    long step_ = 0;
};

/// Self-attention + position-wise feed-forward block with residual
/// connections and layer norm. No positional encoding: permuting the input
/// rows permutes the output identically.
struct TransformerBlock {
    int heads = 0;
    std::vector<Tensor> wq, wk, wv;  // per head: width x head_dim
    Tensor wo, bo;                   // width x width, 1 x width
    Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;

    static TransformerBlock create(ParamStore& store, const std::string& prefix, int width,
                                   int heads, int hidden, Rng& rng);
    static TransformerBlock from_store(const ParamStore& store, const std::string& prefix,
                                       int heads);
    Tensor forward(const Tensor& x) const;
};

/// Multi-head self-attention over a sequence of row vectors; output width
/// equals input width. Requires width divisible by the head count.
Tensor attention_block(const Tensor& x, const TransformerBlock& block);

} // namespace treecut::nn

#endif
