#include "treecut/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "treecut/errors.hpp"

namespace treecut::nn {

using ImplPtr = std::shared_ptr<Tensor::Impl>;

namespace {

ImplPtr make_impl(std::size_t rows, std::size_t cols) {
    auto impl = std::make_shared<Tensor::Impl>();
    impl->rows = rows;
    impl->cols = cols;
    impl->value.assign(rows * cols, 0.0);
    return impl;
}

std::vector<double>& grad_of(Tensor::Impl& impl) {
    if (impl.grad.size() != impl.value.size()) impl.grad.assign(impl.value.size(), 0.0);
    return impl.grad;
}

Tensor make_op(std::size_t rows, std::size_t cols, std::vector<Tensor> parents,
               std::function<void(Tensor::Impl&)> backprop) {
    auto impl = make_impl(rows, cols);
    bool needs = false;
    for (const auto& p : parents) {
        impl->parents.push_back(p.impl());
        if (p.impl()->requires_grad) needs = true;
    }
    impl->requires_grad = needs;
    if (needs) impl->backprop = std::move(backprop);
    return Tensor(impl);
}

void check(bool cond, const char* msg) {
    if (!cond) throw InvalidInput(std::string("tensor: ") + msg);
}

} // namespace

Tensor Tensor::from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                           bool requires_grad) {
    check(values.size() == rows * cols, "value count does not match shape");
    auto impl = make_impl(rows, cols);
    impl->value = std::move(values);
    impl->requires_grad = requires_grad;
    return Tensor(impl);
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    auto impl = make_impl(rows, cols);
    impl->requires_grad = requires_grad;
    return Tensor(impl);
}

Tensor Tensor::scalar(double v) { return from_values(1, 1, {v}); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    check(a.cols() == b.rows(), "matmul shape mismatch");
    std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Tensor out = make_op(n, m, {a, b}, [ai = a.impl(), bi = b.impl(), n, k, m](Tensor::Impl& o) {
        const auto& g = o.grad;
        if (ai->requires_grad) {
            auto& ga = grad_of(*ai);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    double gv = g[i * m + j];
                    if (gv == 0.0) continue;
                    for (std::size_t t = 0; t < k; ++t) ga[i * k + t] += gv * bi->value[t * m + j];
                }
        }
        if (bi->requires_grad) {
            auto& gb = grad_of(*bi);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t t = 0; t < k; ++t) {
                    double av = ai->value[i * k + t];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < m; ++j) gb[t * m + j] += av * g[i * m + j];
                }
        }
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            double av = a.value()[i * k + t];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) v[i * m + j] += av * b.value()[t * m + j];
        }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    bool broadcast = b.rows() == 1 && a.cols() == b.cols() && a.rows() != 1;
    check(broadcast || (a.rows() == b.rows() && a.cols() == b.cols()), "add shape mismatch");
    Tensor out = make_op(a.rows(), a.cols(), {a, b},
                         [ai = a.impl(), bi = b.impl(), broadcast](Tensor::Impl& o) {
                             if (ai->requires_grad) {
                                 auto& ga = grad_of(*ai);
                                 for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
                             }
                             if (bi->requires_grad) {
                                 auto& gb = grad_of(*bi);
                                 if (broadcast) {
                                     for (std::size_t i = 0; i < o.rows; ++i)
                                         for (std::size_t j = 0; j < o.cols; ++j)
                                             gb[j] += o.grad[i * o.cols + j];
                                 } else {
                                     for (std::size_t i = 0; i < o.grad.size(); ++i)
                                         gb[i] += o.grad[i];
                                 }
                             }
                         });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            v[i * a.cols() + j] =
                a.value()[i * a.cols() + j] + b.value()[(broadcast ? 0 : i) * b.cols() + j];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
    bool broadcast = b.rows() == 1 && a.cols() == b.cols() && a.rows() != 1;
    check(broadcast || (a.rows() == b.rows() && a.cols() == b.cols()), "mul shape mismatch");
    Tensor out = make_op(a.rows(), a.cols(), {a, b},
                         [ai = a.impl(), bi = b.impl(), broadcast](Tensor::Impl& o) {
                             for (std::size_t i = 0; i < o.rows; ++i)
                                 for (std::size_t j = 0; j < o.cols; ++j) {
                                     std::size_t idx = i * o.cols + j;
                                     std::size_t bidx = (broadcast ? 0 : i) * o.cols + j;
                                     if (ai->requires_grad)
                                         grad_of(*ai)[idx] += o.grad[idx] * bi->value[bidx];
                                     if (bi->requires_grad)
                                         grad_of(*bi)[bidx] += o.grad[idx] * ai->value[idx];
                                 }
                         });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            v[i * a.cols() + j] =
                a.value()[i * a.cols() + j] * b.value()[(broadcast ? 0 : i) * b.cols() + j];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = make_op(a.rows(), a.cols(), {a}, [ai = a.impl(), s](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += s * o.grad[i];
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = s * a.value()[i];
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out = make_op(a.rows(), a.cols(), {a}, [ai = a.impl()](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < o.grad.size(); ++i)
            if (o.value[i] > 0.0) ga[i] += o.grad[i];
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = std::max(0.0, a.value()[i]);
    return out;
}

Tensor sigmoid(const Tensor& a) {
    Tensor out = make_op(a.rows(), a.cols(), {a}, [ai = a.impl()](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < o.grad.size(); ++i)
            ga[i] += o.grad[i] * o.value[i] * (1.0 - o.value[i]);
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-a.value()[i]));
    return out;
}

Tensor log_t(const Tensor& a) {
    Tensor out = make_op(a.rows(), a.cols(), {a}, [ai = a.impl()](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] / ai->value[i];
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = std::log(a.value()[i]);
    return out;
}

Tensor exp_t(const Tensor& a) {
    Tensor out = make_op(a.rows(), a.cols(), {a}, [ai = a.impl()](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * o.value[i];
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = std::exp(a.value()[i]);
    return out;
}

Tensor sum_all(const Tensor& a) {
    Tensor out = make_op(1, 1, {a}, [ai = a.impl()](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += o.grad[0];
    });
    double s = 0.0;
    for (double v : a.value()) s += v;
    out.mutable_value()[0] = s;
    return out;
}

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.size())); }

Tensor mean_rows(const Tensor& a) {
    std::size_t n = a.rows(), m = a.cols();
    Tensor out = make_op(1, m, {a}, [ai = a.impl(), n, m](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += o.grad[j] / static_cast<double>(n);
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) v[j] += a.value()[i * m + j] / static_cast<double>(n);
    return out;
}

Tensor transpose(const Tensor& a) {
    std::size_t n = a.rows(), m = a.cols();
    Tensor out = make_op(m, n, {a}, [ai = a.impl(), n, m](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += o.grad[j * n + i];
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) v[j * n + i] = a.value()[i * m + j];
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    check(a.rows() == b.rows(), "concat_cols row mismatch");
    std::size_t n = a.rows(), ma = a.cols(), mb = b.cols();
    Tensor out = make_op(n, ma + mb, {a, b}, [ai = a.impl(), bi = b.impl(), n, ma, mb](Tensor::Impl& o) {
        for (std::size_t i = 0; i < n; ++i) {
            if (ai->requires_grad) {
                auto& ga = grad_of(*ai);
                for (std::size_t j = 0; j < ma; ++j) ga[i * ma + j] += o.grad[i * (ma + mb) + j];
            }
            if (bi->requires_grad) {
                auto& gb = grad_of(*bi);
                for (std::size_t j = 0; j < mb; ++j)
                    gb[i * mb + j] += o.grad[i * (ma + mb) + ma + j];
            }
        }
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < ma; ++j) v[i * (ma + mb) + j] = a.value()[i * ma + j];
        for (std::size_t j = 0; j < mb; ++j) v[i * (ma + mb) + ma + j] = b.value()[i * mb + j];
    }
    return out;
}

Tensor softmax_rows(const Tensor& a) {
    std::size_t n = a.rows(), m = a.cols();
    Tensor out = make_op(n, m, {a}, [ai = a.impl(), n, m](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) dot += o.grad[i * m + j] * o.value[i * m + j];
            for (std::size_t j = 0; j < m; ++j)
                ga[i * m + j] += o.value[i * m + j] * (o.grad[i * m + j] - dot);
        }
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < n; ++i) {
        double mx = a.value()[i * m];
        for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, a.value()[i * m + j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            v[i * m + j] = std::exp(a.value()[i * m + j] - mx);
            sum += v[i * m + j];
        }
        for (std::size_t j = 0; j < m; ++j) v[i * m + j] /= sum;
    }
    return out;
}

Tensor layer_norm_rows(const Tensor& a, double eps) {
    std::size_t n = a.rows(), m = a.cols();
    auto sigma = std::make_shared<std::vector<double>>(n);
    Tensor out = make_op(n, m, {a}, [ai = a.impl(), sigma, n, m](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < n; ++i) {
            double gmean = 0.0, gymean = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                gmean += o.grad[i * m + j];
                gymean += o.grad[i * m + j] * o.value[i * m + j];
            }
            gmean /= static_cast<double>(m);
            gymean /= static_cast<double>(m);
            double inv = 1.0 / (*sigma)[i];
            for (std::size_t j = 0; j < m; ++j)
                ga[i * m + j] +=
                    inv * (o.grad[i * m + j] - gmean - o.value[i * m + j] * gymean);
        }
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < m; ++j) mean += a.value()[i * m + j];
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double d = a.value()[i * m + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(m);
        double sd = std::sqrt(var + eps);
        (*sigma)[i] = sd;
        for (std::size_t j = 0; j < m; ++j) v[i * m + j] = (a.value()[i * m + j] - mean) / sd;
    }
    return out;
}

Tensor gather_rows(const Tensor& a, std::vector<int> index) {
    std::size_t m = a.cols(), n = index.size();
    for (int i : index)
        if (i < 0 || static_cast<std::size_t>(i) >= a.rows())
            throw InvalidInput("gather_rows: index " + std::to_string(i) + " out of range");
    auto idx = std::make_shared<std::vector<int>>(std::move(index));
    Tensor out = make_op(n, m, {a}, [ai = a.impl(), idx, n, m](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                ga[static_cast<std::size_t>((*idx)[i]) * m + j] += o.grad[i * m + j];
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            v[i * m + j] = a.value()[static_cast<std::size_t>((*idx)[i]) * m + j];
    return out;
}

Tensor scatter_sum_rows(const Tensor& a, std::vector<int> index, std::size_t num_rows) {
    check(index.size() == a.rows(), "scatter_sum_rows index size mismatch");
    std::size_t m = a.cols(), n = a.rows();
    auto idx = std::make_shared<std::vector<int>>(std::move(index));
    Tensor out = make_op(num_rows, m, {a}, [ai = a.impl(), idx, n, m](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                ga[i * m + j] += o.grad[static_cast<std::size_t>((*idx)[i]) * m + j];
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            v[static_cast<std::size_t>((*idx)[i]) * m + j] += a.value()[i * m + j];
    return out;
}

Tensor repeat_rows(const Tensor& a, std::size_t count) {
    check(a.rows() == 1, "repeat_rows expects a row vector");
    std::size_t m = a.cols();
    Tensor out = make_op(count, m, {a}, [ai = a.impl(), count, m](Tensor::Impl& o) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < m; ++j) ga[j] += o.grad[i * m + j];
    });
    auto& v = out.mutable_value();
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < m; ++j) v[i * m + j] = a.value()[j];
    return out;
}

void backward(const Tensor& loss) {
    if (loss.size() != 1) throw InvalidInput("backward: loss must be scalar");
    if (std::isnan(loss.item())) throw SolveError("backward: loss is NaN");
    // Reverse topological order via iterative DFS.
    std::vector<Tensor::Impl*> order;
    std::unordered_set<Tensor::Impl*> visited;
    std::vector<std::pair<Tensor::Impl*, std::size_t>> stack;
    stack.emplace_back(loss.impl().get(), 0);
    visited.insert(loss.impl().get());
    while (!stack.empty()) {
        auto& [node, child] = stack.back();
        if (child < node->parents.size()) {
            Tensor::Impl* p = node->parents[child++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    auto* root = loss.impl().get();
    grad_of(*root);
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor::Impl* node = *it;
        if (node->backprop) {
            grad_of(*node);
            node->backprop(*node);
        }
    }
}

// --- ParamStore -----------------------------------------------------------

Tensor ParamStore::add_param(const std::string& name, std::size_t rows, std::size_t cols,
                             Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> values(rows * cols);
    for (double& v : values) v = rng.uniform(-limit, limit);
    Tensor t = Tensor::from_values(rows, cols, std::move(values), true);
    order_.push_back(name);
    if (!params_.emplace(name, t).second)
        throw InvalidInput("duplicate parameter name '" + name + "'");
    return t;
}

Tensor ParamStore::add_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
    return add_constant(name, rows, cols, 0.0);
}

Tensor ParamStore::add_constant(const std::string& name, std::size_t rows, std::size_t cols,
                                double v) {
    Tensor t = Tensor::from_values(rows, cols, std::vector<double>(rows * cols, v), true);
    order_.push_back(name);
    if (!params_.emplace(name, t).second)
        throw InvalidInput("duplicate parameter name '" + name + "'");
    return t;
}

Tensor ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw InvalidInput("unknown parameter '" + name + "'");
    return it->second;
}

void ParamStore::zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
    ++step_;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (const std::string& name : order_) {
        Tensor t = params_.at(name);
        auto& state = opt_[name];
        if (state.m.size() != t.size()) {
            state.m.assign(t.size(), 0.0);
            state.v.assign(t.size(), 0.0);
        }
        const auto& g = t.grad();
        if (g.empty()) continue;
        auto& values = t.mutable_value();
        for (std::size_t i = 0; i < values.size(); ++i) {
            state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g[i];
            state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
            double mhat = state.m[i] / bc1;
            double vhat = state.v[i] / bc2;
            values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void ParamStore::save(const std::string& path, const std::string& config_hash) const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config_hash"] = config_hash;
    nlohmann::json params;
    for (const std::string& name : order_) {
        const Tensor& t = params_.at(name);
        params[name] = {{"shape", {t.rows(), t.cols()}}, {"data", t.value()}};
    }
    j["params"] = std::move(params);
    nlohmann::json opt;
    for (const auto& [name, state] : opt_) {
        if (state.m.empty()) continue;
        opt[name] = {{"m", state.m}, {"v", state.v}};
    }
    j["opt_state"] = std::move(opt);
    j["step"] = step_;
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open checkpoint '" + path + "' for writing");
    out << j.dump() << "\n";
}

void ParamStore::load(const std::string& path, const std::string& expected_config_hash) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (j.value("format_version", 0) != 1)
        throw ParseError(path + ": unsupported checkpoint format_version");
    if (!expected_config_hash.empty() && j.value("config_hash", "") != expected_config_hash)
        throw ParseError(path + ": checkpoint config_hash mismatch");
    if (order_.empty()) {
        // Empty store: materialize every parameter from the file.
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
            const auto& pj = it.value();
            auto shape = pj.at("shape").get<std::vector<std::size_t>>();
            auto data = pj.at("data").get<std::vector<double>>();
            if (shape.size() != 2 || shape[0] * shape[1] != data.size())
                throw ParseError(path + ": bad shape for parameter '" + it.key() + "'");
            Tensor t = Tensor::from_values(shape[0], shape[1], std::move(data), true);
            order_.push_back(it.key());
            params_.emplace(it.key(), t);
        }
    } else {
        for (const std::string& name : order_) {
            if (!j["params"].contains(name))
                throw ParseError(path + ": checkpoint missing parameter '" + name + "'");
            const auto& pj = j["params"][name];
            Tensor t = params_.at(name);
            auto data = pj.at("data").get<std::vector<double>>();
            if (data.size() != t.size())
                throw ParseError(path + ": size mismatch for parameter '" + name + "'");
            t.mutable_value() = std::move(data);
        }
    }
    opt_.clear();
    if (j.contains("opt_state")) {
        for (auto it = j["opt_state"].begin(); it != j["opt_state"].end(); ++it) {
            AdamState st;
            st.m = it.value().at("m").get<std::vector<double>>();
            st.v = it.value().at("v").get<std::vector<double>>();
            opt_[it.key()] = std::move(st);
        }
    }
    step_ = j.value("step", 0L);
}

void ParamStore::copy_values_from(const ParamStore& other) {
    for (const std::string& name : order_) {
        Tensor mine = params_.at(name);
        Tensor theirs = other.get(name);
        if (mine.size() != theirs.size())
            throw InvalidInput("copy_values_from: shape mismatch for '" + name + "'");
        mine.mutable_value() = theirs.value();
    }
}

// --- transformer ----------------------------------------------------------

TransformerBlock TransformerBlock::create(ParamStore& store, const std::string& prefix, int width,
                                          int heads, int hidden, Rng& rng) {
    if (width % heads != 0) throw InvalidInput("transformer width not divisible by head count");
    TransformerBlock b;
    b.heads = heads;
    int head_dim = width / heads;
    for (int h = 0; h < heads; ++h) {
        std::string hp = prefix + ".h" + std::to_string(h);
        b.wq.push_back(store.add_param(hp + ".wq", width, head_dim, rng));
        b.wk.push_back(store.add_param(hp + ".wk", width, head_dim, rng));
        b.wv.push_back(store.add_param(hp + ".wv", width, head_dim, rng));
    }
    b.wo = store.add_param(prefix + ".wo", width, width, rng);
    b.bo = store.add_zeros(prefix + ".bo", 1, width);
    b.ffn_w1 = store.add_param(prefix + ".ffn_w1", width, hidden, rng);
    b.ffn_b1 = store.add_zeros(prefix + ".ffn_b1", 1, hidden);
    b.ffn_w2 = store.add_param(prefix + ".ffn_w2", hidden, width, rng);
    b.ffn_b2 = store.add_zeros(prefix + ".ffn_b2", 1, width);
    b.ln1_gain = store.add_constant(prefix + ".ln1_gain", 1, width, 1.0);
    b.ln1_bias = store.add_zeros(prefix + ".ln1_bias", 1, width);
    b.ln2_gain = store.add_constant(prefix + ".ln2_gain", 1, width, 1.0);
    b.ln2_bias = store.add_zeros(prefix + ".ln2_bias", 1, width);
    return b;
}

TransformerBlock TransformerBlock::from_store(const ParamStore& store, const std::string& prefix,
                                              int heads) {
    TransformerBlock b;
    b.heads = heads;
    for (int h = 0; h < heads; ++h) {
        std::string hp = prefix + ".h" + std::to_string(h);
        b.wq.push_back(store.get(hp + ".wq"));
        b.wk.push_back(store.get(hp + ".wk"));
        b.wv.push_back(store.get(hp + ".wv"));
    }
    b.wo = store.get(prefix + ".wo");
    b.bo = store.get(prefix + ".bo");
    b.ffn_w1 = store.get(prefix + ".ffn_w1");
    b.ffn_b1 = store.get(prefix + ".ffn_b1");
    b.ffn_w2 = store.get(prefix + ".ffn_w2");
    b.ffn_b2 = store.get(prefix + ".ffn_b2");
    b.ln1_gain = store.get(prefix + ".ln1_gain");
    b.ln1_bias = store.get(prefix + ".ln1_bias");
    b.ln2_gain = store.get(prefix + ".ln2_gain");
    b.ln2_bias = store.get(prefix + ".ln2_bias");
    return b;
}

Tensor TransformerBlock::forward(const Tensor& x) const { return attention_block(x, *this); }

Tensor attention_block(const Tensor& x, const TransformerBlock& block) {
    std::size_t head_dim = block.wq[0].cols();
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    Tensor heads_out;
    for (int h = 0; h < block.heads; ++h) {
        Tensor q = matmul(x, block.wq[h]);
        Tensor k = matmul(x, block.wk[h]);
        Tensor v = matmul(x, block.wv[h]);
        Tensor scores = scale(matmul(q, transpose(k)), inv_sqrt);
        Tensor attn = softmax_rows(scores);
        Tensor head = matmul(attn, v);
        heads_out = h == 0 ? head : concat_cols(heads_out, head);
    }
    Tensor projected = add(matmul(heads_out, block.wo), block.bo);
    Tensor res1 = add(x, projected);
    Tensor norm1 = add(mul(layer_norm_rows(res1), block.ln1_gain), block.ln1_bias);
    Tensor ffn = add(matmul(relu(add(matmul(norm1, block.ffn_w1), block.ffn_b1)), block.ffn_w2),
                     block.ffn_b2);
    Tensor res2 = add(norm1, ffn);
    return add(mul(layer_norm_rows(res2), block.ln2_gain), block.ln2_bias);
}

} // namespace treecut::nn
