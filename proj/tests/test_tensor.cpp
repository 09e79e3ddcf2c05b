#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "treecut/rng.hpp"
#include "treecut/tensor.hpp"

using namespace treecut;
using namespace treecut::nn;

namespace {

/// Central finite differences against the analytic gradient of a scalar
/// expression of one leaf tensor. Relative error per entry below 1e-4.
void check_gradient(std::size_t rows, std::size_t cols,
                    const std::function<Tensor(const Tensor&)>& f, Rng& rng,
                    const char* label) {
    std::vector<double> x(rows * cols);
    for (double& v : x) v = rng.uniform(-1.5, 1.5);
    Tensor leaf = Tensor::from_values(rows, cols, x, /*requires_grad=*/true);
    Tensor loss = f(leaf);
    REQUIRE(loss.size() == 1);
    backward(loss);
    const double h = 1e-5;
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double fp = f(Tensor::from_values(rows, cols, xp)).item();
        double fm = f(Tensor::from_values(rows, cols, xm)).item();
        double fd = (fp - fm) / (2.0 * h);
        double an = leaf.grad()[i];
        double denom = std::max({std::fabs(fd), std::fabs(an), 1.0});
        CHECK_MESSAGE(std::fabs(fd - an) / denom <= 1e-4,
                      label, " entry ", i, ": fd ", fd, " analytic ", an);
    }
}

} // namespace

TEST_CASE("elementary op gradients match finite differences") {
    Rng rng(42);
    Tensor w = Tensor::from_values(3, 2, {0.3, -0.7, 1.1, 0.2, -0.4, 0.9});
    Tensor b = Tensor::from_values(1, 2, {0.1, -0.2});
    Tensor m = Tensor::from_values(2, 3, {1.0, -0.5, 0.25, 0.75, 0.1, -1.2});

    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(matmul(t, w)); }, rng,
                   "matmul");
    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(mul(add(t, m), m)); }, rng,
                   "add+mul");
    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(sub(m, t)); }, rng, "sub");
    check_gradient(2, 2, [&](const Tensor& t) { return sum_all(mul(t, b)); }, rng,
                   "mul row broadcast");
    check_gradient(2, 3, [&](const Tensor& t) { return mean_all(scale(t, -2.5)); }, rng,
                   "scale+mean");
    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(relu(t)); }, rng, "relu");
    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(sigmoid(t)); }, rng,
                   "sigmoid");
    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(exp_t(t)); }, rng, "exp");
    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(log_t(sigmoid(t))); }, rng,
                   "log(sigmoid)");
    check_gradient(3, 2, [&](const Tensor& t) { return sum_all(mul(mean_rows(t), b)); },
                   rng, "mean_rows");
    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(matmul(transpose(t), m)); },
                   rng, "transpose");
    check_gradient(2, 2, [&](const Tensor& t) {
        return sum_all(mul(concat_cols(t, t), Tensor::from_values(1, 4, {1, 2, 3, 4})));
    }, rng, "concat_cols");
    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(mul(softmax_rows(t), m)); },
                   rng, "softmax_rows");
    check_gradient(2, 3, [&](const Tensor& t) { return sum_all(mul(layer_norm_rows(t), m)); },
                   rng, "layer_norm_rows");
    check_gradient(3, 2, [&](const Tensor& t) {
        return sum_all(gather_rows(t, {2, 0, 0}));
    }, rng, "gather_rows");
    check_gradient(3, 2, [&](const Tensor& t) {
        return sum_all(mul(scatter_sum_rows(t, {1, 0, 1}, 2),
                           Tensor::from_values(1, 2, {0.5, -1.5})));
    }, rng, "scatter_sum_rows");
    check_gradient(1, 3, [&](const Tensor& t) {
        return sum_all(mul(repeat_rows(t, 4), m.defined() ? Tensor::from_values(4, 3, {
            1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}) : m));
    }, rng, "repeat_rows");
}

TEST_CASE("composite network gradient matches finite differences") {
    Rng rng(7);
    Rng wrng(100);
    ParamStore store;
    Tensor w1 = store.add_param("w1", 4, 8, wrng);
    Tensor b1 = store.add_zeros("b1", 1, 8);
    Tensor w2 = store.add_param("w2", 8, 1, wrng);
    Tensor b2 = store.add_zeros("b2", 1, 1);
    auto net = [&](const Tensor& x) {
        Tensor h = relu(affine(x, w1, b1));
        return mean_all(sigmoid(affine(h, w2, b2)));
    };
    check_gradient(5, 4, net, rng, "mlp");
}

TEST_CASE("transformer block gradient matches finite differences") {
    Rng rng(11);
    Rng wrng(3);
    ParamStore store;
    TransformerBlock block = TransformerBlock::create(store, "tf", 8, 2, 16, wrng);
    check_gradient(3, 8, [&](const Tensor& t) {
        return mean_all(block.forward(t));
    }, rng, "transformer");
}

TEST_CASE("transformer block is permutation equivariant") {
    Rng rng(21);
    ParamStore store;
    TransformerBlock block = TransformerBlock::create(store, "tf", 8, 4, 16, rng);
    std::vector<double> vals(4 * 8);
    for (double& v : vals) v = rng.uniform(-1.0, 1.0);
    Tensor x = Tensor::from_values(4, 8, vals);
    Tensor y = block.forward(x);
    std::vector<int> perm = {2, 0, 3, 1};
    Tensor xp = gather_rows(x, perm);
    Tensor yp = block.forward(xp);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 8; ++c)
            CHECK(yp.value()[r * 8 + c] ==
                  doctest::Approx(y.value()[perm[r] * 8 + c]).epsilon(1e-12));
}

TEST_CASE("adam step matches the hand-computed first update") {
    // One parameter, gradient g: after one step with bias correction the
    // update is exactly -lr * g / (|g| + eps * sqrt(1 - beta2)) ~ -lr * sign(g).
    ParamStore store;
    Tensor p = store.add_constant("p", 1, 2, 1.0);
    store.zero_grad();
    p.impl()->grad = {0.5, -2.0};
    store.adam_step(0.1);
    double m0 = 0.1 * 0.5, v0 = 0.001 * 0.25;
    double mhat = m0 / (1 - 0.9), vhat = v0 / (1 - 0.999);
    double expected0 = 1.0 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(p.value()[0] == doctest::Approx(expected0).epsilon(1e-12));
    double m1 = 0.1 * -2.0, v1 = 0.001 * 4.0;
    double mh1 = m1 / (1 - 0.9), vh1 = v1 / (1 - 0.999);
    double expected1 = 1.0 - 0.1 * mh1 / (std::sqrt(vh1) + 1e-8);
    CHECK(p.value()[1] == doctest::Approx(expected1).epsilon(1e-12));
    CHECK(store.step() == 1);
}

TEST_CASE("adam converges on a quadratic") {
    ParamStore store;
    Tensor p = store.add_constant("p", 1, 1, 5.0);
    for (int i = 0; i < 2000; ++i) {
        store.zero_grad();
        Tensor target = Tensor::scalar(2.0);
        Tensor loss = mul(sub(p, target), sub(p, target));
        backward(loss);
        store.adam_step(0.05);
    }
    CHECK(p.value()[0] == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("backward rejects non-scalar and nan losses") {
    Tensor v = Tensor::from_values(1, 2, {1.0, 2.0}, true);
    CHECK_THROWS(backward(v));
    Tensor bad = Tensor::from_values(1, 1, {-1.0}, true);
    CHECK_THROWS(backward(log_t(bad)));  // log of a negative is nan
}

TEST_CASE("gradient accumulates across two backward calls") {
    Tensor x = Tensor::from_values(1, 1, {3.0}, true);
    Tensor l1 = mul(x, x);
    backward(l1);
    CHECK(x.grad()[0] == doctest::Approx(6.0));
    Tensor l2 = scale(x, 4.0);
    backward(l2);
    CHECK(x.grad()[0] == doctest::Approx(10.0));
    x.zero_grad();
    CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("checkpoint save and load round trip") {
    Rng rng(5);
    ParamStore a;
    a.add_param("layer.w", 3, 4, rng);
    a.add_zeros("layer.b", 1, 4);
    // Take an optimizer step so opt state is non-trivial.
    a.zero_grad();
    for (const auto& name : a.names()) {
        Tensor t = a.get(name);
        t.impl()->grad.assign(t.size(), 0.25);
    }
    a.adam_step(1e-3);
    std::string path = "test_tensor_ckpt_tmp.json";
    a.save(path, "cfg123");

    SUBCASE("load into an empty store materializes everything") {
        ParamStore b;
        b.load(path, "cfg123");
        REQUIRE(b.has("layer.w"));
        REQUIRE(b.has("layer.b"));
        CHECK(b.get("layer.w").value() == a.get("layer.w").value());
        CHECK(b.get("layer.b").value() == a.get("layer.b").value());
        CHECK(b.step() == a.step());
    }
    SUBCASE("load into a matching store overwrites values") {
        Rng rng2(99);
        ParamStore b;
        b.add_param("layer.w", 3, 4, rng2);
        b.add_zeros("layer.b", 1, 4);
        b.load(path, "cfg123");
        CHECK(b.get("layer.w").value() == a.get("layer.w").value());
    }
    SUBCASE("config hash mismatch is rejected") {
        ParamStore b;
        CHECK_THROWS(b.load(path, "other"));
    }
    std::remove(path.c_str());
}

TEST_CASE("glorot initialization is seed deterministic and bounded") {
    Rng r1(13), r2(13);
    ParamStore a, b;
    Tensor ta = a.add_param("w", 16, 16, r1);
    Tensor tb = b.add_param("w", 16, 16, r2);
    CHECK(ta.value() == tb.value());
    double limit = std::sqrt(6.0 / 32.0);
    for (double v : ta.value()) {
        CHECK(v >= -limit - 1e-12);
        CHECK(v <= limit + 1e-12);
    }
}

TEST_CASE("shape errors are rejected") {
    Tensor a = Tensor::from_values(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from_values(2, 2, {1, 2, 3, 4});
    CHECK_THROWS(matmul(a, b));
    CHECK_THROWS(add(a, b));
    CHECK_THROWS(gather_rows(a, {5}));
    ParamStore store;
    store.add_zeros("x", 1, 1);
    CHECK_THROWS(store.add_zeros("x", 1, 1));  // duplicate name
    CHECK_THROWS(store.get("missing"));
}
