#include <doctest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "support/reference.hpp"
#include "wavexp/ops.hpp"
#include "wavexp/parallel.hpp"

using namespace wavexp;
using wavexp::testing::gradcheck;

namespace {

double dot(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (int64_t i = 0; i < a.size(); ++i)
        acc += static_cast<double>(a.data()[i]) * b.data()[i];
    return acc;
}

void check_close(const Tensor& got, const std::vector<float>& want, double tol) {
    REQUIRE(got.size() == static_cast<int64_t>(want.size()));
    double worst = 0.0;
    for (int64_t i = 0; i < got.size(); ++i)
        worst = std::max(worst, std::fabs(static_cast<double>(got.data()[i]) - want[i]));
    CHECK(worst < tol);
}

}  // namespace

TEST_CASE("conv2d matches the straight-loop reference") {
    Rng rng(21);
    for (auto [s, p, k] : {std::tuple{1, 1, 3}, std::tuple{2, 1, 4}, std::tuple{1, 3, 7},
                           std::tuple{1, 0, 2}}) {
        Tensor x = rand_uniform({2, 3, 8, 8}, rng, -1.0f, 1.0f);
        Tensor w = rand_uniform({5, 3, k, k}, rng, -0.5f, 0.5f);
        Tensor b = rand_uniform({5}, rng, -0.2f, 0.2f);
        Tensor y = conv2d(x, w, b, s, p);
        auto ref = wavexp::testing::naive_conv2d(x.vec(), 2, 3, 8, 8, w.vec(), 5, k, k,
                                                 b.vec(), s, p);
        check_close(y, ref, 2e-5);
    }
}

TEST_CASE("conv_transpose2d matches the straight-loop reference") {
    Rng rng(22);
    for (auto [s, p, k] : {std::tuple{2, 1, 4}, std::tuple{1, 1, 3}, std::tuple{2, 0, 2}}) {
        Tensor x = rand_uniform({2, 4, 5, 5}, rng, -1.0f, 1.0f);
        Tensor w = rand_uniform({4, 3, k, k}, rng, -0.5f, 0.5f);
        Tensor b = rand_uniform({3}, rng, -0.2f, 0.2f);
        Tensor y = conv_transpose2d(x, w, b, s, p);
        auto ref = wavexp::testing::naive_conv_transpose2d(x.vec(), 2, 4, 5, 5, w.vec(), 3,
                                                           k, k, b.vec(), s, p);
        check_close(y, ref, 2e-5);
    }
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
    // <conv(x), y> == <x, conv_T(y)> for bias-free maps: the defining property
    // used by every gradient in the stack.
    Rng rng(23);
    const int64_t s = 2, p = 1, k = 4;
    Tensor w = rand_uniform({6, 3, k, k}, rng, -0.5f, 0.5f);
    Tensor x = rand_uniform({2, 3, 8, 8}, rng, -1.0f, 1.0f);
    Tensor y = rand_uniform({2, 6, 4, 4}, rng, -1.0f, 1.0f);
    const double lhs = dot(conv2d(x, w, Tensor(), s, p), y);
    const double rhs = dot(x, conv_transpose2d(y, w, Tensor(), s, p));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
}

TEST_CASE("conv gradients match finite differences") {
    Rng rng(24);
    Tensor x = rand_uniform({2, 3, 6, 6}, rng, -1.0f, 1.0f);
    Tensor w = rand_uniform({4, 3, 3, 3}, rng, -0.4f, 0.4f);
    Tensor b = rand_uniform({4}, rng, -0.2f, 0.2f);
    // smooth loss: finite differences across relu/abs kinks would be biased
    auto loss = [&]() { return mean_all(tanh(conv2d(x, w, b, 1, 1))); };
    auto res = gradcheck(loss, {x, w, b}, 1e-3, 48);
    CAPTURE(res.worst_ad);
    CAPTURE(res.worst_fd);
    CHECK(res.max_rel < 1e-3);
    CHECK(res.coords >= 100);
}

TEST_CASE("strided conv gradients match finite differences") {
    Rng rng(25);
    Tensor x = rand_uniform({2, 2, 8, 8}, rng, -1.0f, 1.0f);
    Tensor w = rand_uniform({3, 2, 4, 4}, rng, -0.4f, 0.4f);
    Tensor b = rand_uniform({3}, rng, -0.2f, 0.2f);
    auto loss = [&]() { return mean_all(mul(conv2d(x, w, b, 2, 1), conv2d(x, w, b, 2, 1))); };
    auto res = gradcheck(loss, {x, w, b}, 1e-3, 30);
    CHECK(res.max_rel < 1e-3);
}

TEST_CASE("conv_transpose gradients match finite differences") {
    Rng rng(26);
    Tensor x = rand_uniform({2, 3, 4, 4}, rng, -1.0f, 1.0f);
    Tensor w = rand_uniform({3, 2, 4, 4}, rng, -0.4f, 0.4f);
    Tensor b = rand_uniform({2}, rng, -0.2f, 0.2f);
    auto loss = [&]() { return mean_all(tanh(conv_transpose2d(x, w, b, 2, 1))); };
    auto res = gradcheck(loss, {x, w, b}, 1e-3, 30);
    CHECK(res.max_rel < 1e-3);
}

TEST_CASE("second-order gradients through conv match finite differences") {
    // d/dw of ||d f/dx||^2 — the shape of the gradient-penalty term.
    Rng rng(27);
    Tensor x = rand_uniform({1, 2, 4, 4}, rng, -1.0f, 1.0f);
    Tensor w = rand_uniform({2, 2, 3, 3}, rng, -0.5f, 0.5f);
    x.set_requires_grad(true);

    auto penalty = [&]() {
        Tensor f = sum_all(tanh(conv2d(x, w, Tensor(), 1, 1)));
        Tensor gx = grad_wrt(f, x, true);
        return sum_all(mul(gx, gx));
    };
    auto res = gradcheck(penalty, {w}, 1e-3, 36);
    CAPTURE(res.worst_ad);
    CAPTURE(res.worst_fd);
    CHECK(res.max_rel < 2e-3);
}

TEST_CASE("conv results do not depend on thread count") {
    Rng rng(28);
    Tensor x = rand_uniform({7, 3, 8, 8}, rng, -1.0f, 1.0f);
    Tensor w = rand_uniform({5, 3, 3, 3}, rng, -0.5f, 0.5f);
    Tensor b = rand_uniform({5}, rng, -0.2f, 0.2f);

    const int saved = num_threads();
    set_num_threads(1);
    Tensor y1 = conv2d(x, w, b, 1, 1);
    Tensor g1 = conv2d_weight_grad(x, y1, 3, 3, 1, 1);
    set_num_threads(4);
    Tensor y4 = conv2d(x, w, b, 1, 1);
    Tensor g4 = conv2d_weight_grad(x, y4, 3, 3, 1, 1);
    set_num_threads(saved);

    for (int64_t i = 0; i < y1.size(); ++i) REQUIRE(y1.data()[i] == y4.data()[i]);
    // weight grad reduces per-chunk partials; chunking may legitimately change
    // the rounding, so compare with a tight tolerance instead of bitwise
    for (int64_t i = 0; i < g1.size(); ++i)
        REQUIRE(g1.data()[i] == doctest::Approx(g4.data()[i]).epsilon(1e-5));
}
