#include <doctest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "wavexp/net.hpp"
#include "wavexp/wavelet.hpp"

using namespace wavexp;
using wavexp::testing::gradcheck;
using wavexp::testing::gradcheck_plateau;

namespace {

ArchConfig tiny_arch() {
    ArchConfig c;
    c.image_size = 16;
    c.in_channels = 2;
    c.n_down = 2;
    c.widths = {4, 6, 8};
    c.n_au = 3;
    c.skip_levels = {1, 2};
    c.critic_base_width = 4;
    return c;
}

bool all_finite(const Tensor& t) {
    for (int64_t i = 0; i < t.size(); ++i)
        if (!std::isfinite(t.data()[i])) return false;
    return true;
}

}  // namespace

TEST_CASE("generator maps image+conditioning to same-shape image in (-1,1)") {
    ArchConfig cfg = ArchConfig::desk_preset();
    Rng rng(41);
    Generator gen(cfg, rng);
    Tensor x = rand_uniform({2, 3, 64, 64}, rng, -1.0f, 1.0f);
    Tensor u = rand_uniform({2, 5}, rng, -1.0f, 1.0f);
    Tensor y = gen.forward(x, u);
    CHECK(y.shape() == Shape{2, 3, 64, 64});
    REQUIRE(all_finite(y));
    for (int64_t i = 0; i < y.size(); ++i) {
        CHECK(y.data()[i] > -1.0f);
        CHECK(y.data()[i] < 1.0f);
    }
}

TEST_CASE("full-size preset geometry: 128px image, 17 conditioning channels") {
    ArchConfig cfg = ArchConfig::paper_preset();
    Rng rng(42);
    Generator gen(cfg, rng);
    NoGradGuard ng;
    Tensor x = rand_uniform({1, 3, 128, 128}, rng, -1.0f, 1.0f);
    Tensor u = rand_uniform({1, 17}, rng, -1.0f, 1.0f);
    Tensor y = gen.forward(x, u);
    CHECK(y.shape() == Shape{1, 3, 128, 128});

    DiscriminatorI di(cfg, rng);
    auto [score, au] = di.forward(x);
    CHECK(score.shape() == Shape{1, 1, 2, 2});
    CHECK(au.shape() == Shape{1, 17});

    DiscriminatorH dh(cfg, rng);
    CHECK(dh.forward(x).shape() == Shape{1, 1, 2, 2});
}

TEST_CASE("desk critics emit 1x2x2 score maps") {
    ArchConfig cfg = ArchConfig::desk_preset();
    Rng rng(43);
    DiscriminatorI di(cfg, rng);
    DiscriminatorH dh(cfg, rng);
    NoGradGuard ng;
    Tensor x = rand_uniform({3, 3, 64, 64}, rng, -1.0f, 1.0f);
    auto [score, au] = di.forward(x);
    CHECK(score.shape() == Shape{3, 1, 2, 2});
    CHECK(au.shape() == Shape{3, 5});
    CHECK(dh.forward(x).shape() == Shape{3, 1, 2, 2});
}

TEST_CASE("every generator parameter receives gradient from a forward/backward") {
    ArchConfig cfg = tiny_arch();
    Rng rng(44);
    Generator gen(cfg, rng);
    Tensor x = rand_uniform({2, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor u = rand_uniform({2, 3}, rng, -1.0f, 1.0f);
    backward(mean_all(gen.forward(x, u)));
    for (const Parameter& p : gen.params().params) {
        INFO(p.name);
        Tensor g = p.tensor.grad();
        REQUIRE(g.defined());
        CHECK(all_finite(g));
    }
}

TEST_CASE("fusion block with zero final conv is the identity residual") {
    ArchConfig cfg = ArchConfig::desk_preset();
    Rng rng(45);
    Generator gen(cfg, rng);
    for (const char* name : {"gen.fuse.3.conv.weight", "gen.fuse.3.conv.bias",
                             "gen.fuse.3.norm.beta"}) {
        const Parameter* p = gen.params().find(name);
        REQUIRE(p != nullptr);
        Tensor t = p->tensor;
        std::fill(t.mutable_data(), t.mutable_data() + t.size(), 0.0f);
    }
    NoGradGuard ng;
    Tensor z = rand_uniform({2, 128, 4, 4}, rng, -1.0f, 1.0f);
    Tensor u = rand_uniform({2, 5}, rng, -1.0f, 1.0f);
    Tensor out = gen.au_fusion(z, u);
    // relu(IN(0)) = relu(beta) = 0, so out = z + 0 exactly
    for (int64_t i = 0; i < z.size(); ++i) REQUIRE(out.data()[i] == z.data()[i]);
}

TEST_CASE("fusion output depends on the conditioning vector") {
    ArchConfig cfg = ArchConfig::desk_preset();
    Rng rng(46);
    Generator gen(cfg, rng);
    NoGradGuard ng;
    Tensor z = rand_uniform({1, 128, 4, 4}, rng, -1.0f, 1.0f);
    Tensor u0 = Tensor::zeros({1, 5});
    Tensor u1 = Tensor::from_data({1, 5}, {1.0f, 0.0f, 0.0f, 0.0f, 0.0f});
    Tensor a = gen.au_fusion(z, u0);
    Tensor b = gen.au_fusion(z, u1);
    double diff = 0.0;
    for (int64_t i = 0; i < a.size(); ++i)
        diff = std::max(diff, std::fabs(static_cast<double>(a.data()[i]) - b.data()[i]));
    CHECK(diff > 1e-4);
}

TEST_CASE("zero conditioning is well-defined (self-reconstruction path)") {
    ArchConfig cfg = tiny_arch();
    Rng rng(47);
    Generator gen(cfg, rng);
    NoGradGuard ng;
    Tensor x = rand_uniform({1, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor y = gen.forward(x, Tensor::zeros({1, 3}));
    CHECK(all_finite(y));
}

TEST_CASE("construction is deterministic given the seed") {
    ArchConfig cfg = ArchConfig::desk_preset();
    Rng r1(48), r2(48);
    Generator g1(cfg, r1), g2(cfg, r2);
    REQUIRE(g1.params().params.size() == g2.params().params.size());
    CHECK(g1.params().element_count() == g2.params().element_count());
    for (size_t i = 0; i < g1.params().params.size(); ++i) {
        const Parameter& a = g1.params().params[i];
        const Parameter& b = g2.params().params[i];
        REQUIRE(a.name == b.name);
        for (int64_t j = 0; j < a.tensor.size(); ++j)
            REQUIRE(a.tensor.data()[j] == b.tensor.data()[j]);
    }
}

TEST_CASE("disabling wavelet skips shrinks the decoder and still trains") {
    ArchConfig on = tiny_arch();
    ArchConfig off = tiny_arch();
    off.use_wavelet_skips = false;
    Rng r1(49), r2(49);
    Generator gen_on(on, r1), gen_off(off, r2);
    CHECK(gen_off.params().element_count() < gen_on.params().element_count());

    Rng rx(50);
    Tensor x = rand_uniform({1, 2, 16, 16}, rx, -1.0f, 1.0f);
    Tensor u = rand_uniform({1, 3}, rx, -1.0f, 1.0f);
    for (Generator* g : {&gen_on, &gen_off}) {
        Tensor y = g->forward(x, u);
        CHECK(y.shape() == x.shape());
        backward(mean_all(y));
    }
}

TEST_CASE("disabling the fusion block leaves a single conditioned conv") {
    ArchConfig off = tiny_arch();
    off.use_au_fusion = false;
    Rng rng(51);
    Generator gen(off, rng);
    CHECK(gen.params().find("gen.fuse.1.conv.weight") != nullptr);
    CHECK(gen.params().find("gen.fuse.2.conv.weight") == nullptr);
    CHECK(gen.params().find("gen.fuse.3.conv.weight") == nullptr);
    Tensor x = rand_uniform({1, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor u = rand_uniform({1, 3}, rng, -1.0f, 1.0f);
    backward(mean_all(gen.forward(x, u)));
}

TEST_CASE("zero input through a fresh critic gives exactly zero scores") {
    ArchConfig cfg = ArchConfig::desk_preset();
    Rng rng(52);
    DiscriminatorH dh(cfg, rng);
    NoGradGuard ng;
    Tensor z = Tensor::zeros({1, 3, 64, 64});
    Tensor s = dh.forward(z);
    for (int64_t i = 0; i < s.size(); ++i) CHECK(s.data()[i] == 0.0f);
}

TEST_CASE("critic head bias shifts every score-map entry equally") {
    ArchConfig cfg = ArchConfig::desk_preset();
    Rng rng(53);
    DiscriminatorI di(cfg, rng);
    NoGradGuard ng;
    Tensor x = rand_uniform({2, 3, 64, 64}, rng, -1.0f, 1.0f);
    Tensor before = di.forward(x).first;
    const Parameter* bias = di.params().find("di.critic.bias");
    REQUIRE(bias != nullptr);
    Tensor b = bias->tensor;
    b.mutable_data()[0] += 0.375f;
    Tensor after = di.forward(x).first;
    for (int64_t i = 0; i < before.size(); ++i)
        CHECK(after.data()[i] - before.data()[i] == doctest::Approx(0.375f).epsilon(1e-5));
}

TEST_CASE("end-to-end generator gradients match finite differences") {
    ArchConfig cfg = tiny_arch();
    Rng rng(54);
    Generator gen(cfg, rng);
    Tensor x = rand_uniform({1, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor u = rand_uniform({1, 3}, rng, -0.5f, 0.5f);

    std::vector<Tensor> checked;
    for (const char* name :
         {"gen.enc.0.conv.weight", "gen.enc.1.conv.weight", "gen.enc.2.norm.gamma",
          "gen.fuse.1.conv.weight", "gen.fuse.3.conv.weight", "gen.dec.1.conv.weight",
          "gen.dec.0.conv.bias", "gen.head.conv.weight"}) {
        const Parameter* p = gen.params().find(name);
        REQUIRE(p != nullptr);
        checked.push_back(p->tensor);
    }
    checked.push_back(x);

    auto loss = [&]() {
        Tensor y = gen.forward(x, u);
        return mean_all(mul(y, y));
    };
    // Whole-network float32 graphs sit near the finite-difference noise
    // floor at any single step width, so the ladder checker does the reading.
    auto res = gradcheck_plateau(loss, checked, {1e-3, 2e-3, 4e-3, 8e-3}, 24);
    CAPTURE(res.worst_ad);
    CAPTURE(res.worst_fd);
    CHECK(res.max_rel < 1e-3);
    CHECK(res.coords >= 100);
}

TEST_CASE("end-to-end critic gradients match finite differences") {
    ArchConfig cfg = tiny_arch();
    Rng rng(55);
    DiscriminatorI di(cfg, rng);
    DiscriminatorH dh(cfg, rng);
    Tensor x = rand_uniform({1, 2, 16, 16}, rng, -1.0f, 1.0f);

    std::vector<Tensor> checked;
    for (const char* name : {"di.trunk.0.conv.weight", "di.trunk.1.norm.gamma",
                             "di.critic.weight", "di.au.weight"}) {
        const Parameter* p = di.params().find(name);
        REQUIRE(p != nullptr);
        checked.push_back(p->tensor);
    }
    for (const char* name : {"dh.trunk.0.conv.weight", "dh.critic.weight"}) {
        const Parameter* p = dh.params().find(name);
        REQUIRE(p != nullptr);
        checked.push_back(p->tensor);
    }
    checked.push_back(x);

    auto loss = [&]() {
        auto [score, au] = di.forward(x);
        Tensor hf = dh.forward(high_pass_reconstruct(x));
        return add(add(mean_all(score), mean_all(mul(au, au))), mean_all(hf));
    };
    // Same ladder rationale as the generator check above.
    auto res = gradcheck_plateau(loss, checked, {1e-3, 2e-3, 4e-3, 8e-3}, 24);
    CAPTURE(res.worst_ad);
    CAPTURE(res.worst_fd);
    CHECK(res.max_rel < 1e-3);
    CHECK(res.coords >= 100);
}

TEST_CASE("bad inputs are rejected with diagnostics") {
    ArchConfig cfg = tiny_arch();
    Rng rng(56);
    Generator gen(cfg, rng);
    CHECK_THROWS_AS(gen.forward(Tensor::zeros({1, 2, 8, 8}), Tensor::zeros({1, 3})), Error);
    CHECK_THROWS_AS(gen.forward(Tensor::zeros({1, 2, 16, 16}), Tensor::zeros({1, 4})), Error);

    ArchConfig bad = tiny_arch();
    bad.widths = {4, 6};
    Rng r2(57);
    CHECK_THROWS_AS(Generator(bad, r2), Error);
}
