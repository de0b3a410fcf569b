#include <doctest.h>

#include <cmath>

#include "wavexp/losses.hpp"
#include "wavexp/wavelet.hpp"

using namespace wavexp;

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

void zero_params(ParamStore& store) {
    for (Parameter& p : store.params) {
        float* d = p.tensor.mutable_data();
        std::fill(d, d + p.tensor.size(), 0.0f);
    }
}

bool grads_absent_or_zero(const ParamStore& store) {
    for (const Parameter& p : store.params) {
        Tensor g = p.tensor.grad();
        if (!g.defined()) continue;
        for (int64_t i = 0; i < g.size(); ++i)
            if (g.data()[i] != 0.0f) return false;
    }
    return true;
}

bool grads_all_defined(const ParamStore& store) {
    for (const Parameter& p : store.params)
        if (!p.tensor.grad().defined()) return false;
    return true;
}

}  // namespace

TEST_CASE("penalty for a linear unit-slope critic is (sqrt(D)-1)^2 exactly") {
    Rng rng(71);
    Tensor a = rand_uniform({3, 1, 4, 4}, rng, -1.0f, 1.0f);
    Tensor b = rand_uniform({3, 1, 4, 4}, rng, -1.0f, 1.0f);
    // score map == input: d(sum)/dx = 1 everywhere, per-sample norm = sqrt(16)
    Tensor pen = gradient_penalty([](const Tensor& t) { return t; }, a, b, rng);
    CHECK(pen.item() == doctest::Approx(9.0).epsilon(1e-7));
}

TEST_CASE("penalty for a zero critic is exactly one") {
    Rng rng(72);
    Tensor a = rand_uniform({2, 2, 4, 4}, rng, -1.0f, 1.0f);
    Tensor b = rand_uniform({2, 2, 4, 4}, rng, -1.0f, 1.0f);
    Tensor pen = gradient_penalty([](const Tensor& t) { return scale(t, 0.0f); },
                                  a, b, rng);
    CHECK(pen.item() == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("penalty matches a hand-rolled evaluation of the same draws") {
    const uint64_t seed = 73;
    Rng draws(seed);
    Tensor a, b, eps;
    {
        Rng init(99);
        a = rand_uniform({2, 1, 2, 2}, init, -1.0f, 1.0f);
        b = rand_uniform({2, 1, 2, 2}, init, -1.0f, 1.0f);
        eps = rand_uniform({2, 1, 1, 1}, draws, 0.0f, 1.0f);
    }
    // quadratic critic: score map x*x, d(sum)/dx = 2x
    double expect = 0.0;
    for (int n = 0; n < 2; ++n) {
        const double e = eps.data()[n];
        double sq = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double m = e * a.data()[n * 4 + i] + (1.0 - e) * b.data()[n * 4 + i];
            sq += (2.0 * m) * (2.0 * m);
        }
        const double norm = std::sqrt(sq);
        expect += (norm - 1.0) * (norm - 1.0) / 2.0;
    }
    Rng rng(seed);
    Tensor pen = gradient_penalty([](const Tensor& t) { return mul(t, t); }, a, b, rng);
    CHECK(pen.item() == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("penalty with equal endpoints ignores the interpolation draw") {
    Rng rng(74);
    Tensor a = rand_uniform({2, 1, 3, 3}, rng, -1.0f, 1.0f);
    auto critic = [](const Tensor& t) { return mul(t, t); };
    Rng r1(1), r2(123456);
    Tensor p1 = gradient_penalty(critic, a, a, r1);
    Tensor p2 = gradient_penalty(critic, a, a, r2);
    // e*a + (1-e)*a rounds differently per draw, so exact equality is out
    CHECK(p1.item() == doctest::Approx(p2.item()).epsilon(1e-6));
}

TEST_CASE("penalty backward reaches critic parameters") {
    Rng rng(75);
    Tensor w = rand_uniform({1, 1, 1, 1}, rng, 0.5f, 1.5f);
    w.set_requires_grad(true);
    Tensor a = rand_uniform({2, 1, 2, 2}, rng, -1.0f, 1.0f);
    Tensor b = rand_uniform({2, 1, 2, 2}, rng, -1.0f, 1.0f);
    // critic x -> w*x: norm per sample = 2*|w|, penalty = (2|w|-1)^2,
    // d pen / d w = 2(2w-1)*2 for w>0
    Tensor pen = gradient_penalty(
        [&](const Tensor& t) {
            return mul(broadcast_scalar(reshape(w, {1}), t.shape()), t);
        },
        a, b, rng);
    backward(pen);
    const double wv = w.data()[0];
    REQUIRE(w.grad().defined());
    CHECK(w.grad().data()[0] ==
          doctest::Approx(4.0 * (2.0 * wv - 1.0)).epsilon(1e-4));
}

TEST_CASE("critic losses against zeroed critics have closed-form values") {
    ArchConfig cfg = tiny_arch();
    Rng rng(76);
    Generator gen(cfg, rng);
    DiscriminatorI di(cfg, rng);
    DiscriminatorH dh(cfg, rng);
    zero_params(di.params());
    zero_params(dh.params());

    Tensor x = rand_uniform({2, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor u_x = Tensor::from_data({2, 3}, {0.1f, 0.2f, 0.3f, -0.4f, 0.5f, 0.0f});
    Tensor u_y = rand_uniform({2, 3}, rng, 0.0f, 1.0f);
    LossWeights w;

    CriticLosses cl = critic_losses(gen, di, &dh, x, u_x, u_y, w, rng);
    // zero critic: both expectations vanish, penalty is one (up to the norm's
    // internal epsilon)
    CHECK(cl.adv.item() == doctest::Approx(10.0).epsilon(1e-5));
    CHECK(cl.hf_adv.item() == doctest::Approx(10.0).epsilon(1e-5));
    // au head is zero, so cond = mean_n ||u_x_n||^2
    const double cond = ((0.1 * 0.1 + 0.2 * 0.2 + 0.3 * 0.3) +
                         (0.4 * 0.4 + 0.5 * 0.5)) / 2.0;
    CHECK(cl.cond.item() == doctest::Approx(cond).epsilon(1e-5));
    CHECK(cl.total.item() ==
          doctest::Approx(10.0 + 10.0 + 150.0 * cond).epsilon(1e-4));
    CHECK(!cl.fake.requires_grad());
    CHECK(cl.fake.is_leaf());
}

TEST_CASE("generator losses assemble with the stated weights") {
    ArchConfig cfg = tiny_arch();
    Rng rng(77);
    Generator gen(cfg, rng);
    DiscriminatorI di(cfg, rng);
    DiscriminatorH dh(cfg, rng);
    zero_params(di.params());
    zero_params(dh.params());

    Tensor x = rand_uniform({2, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor u_x = rand_uniform({2, 3}, rng, 0.0f, 1.0f);
    Tensor u_y = Tensor::from_data({2, 3}, {1.0f, 0.0f, 0.5f, 0.0f, 0.25f, 0.0f});
    LossWeights w;

    GeneratorLosses gl = generator_losses(gen, di, &dh, x, u_x, u_y, w);
    CHECK(gl.adv.item() == 0.0f);
    CHECK(gl.hf_adv.item() == 0.0f);
    const double cond = ((1.0 + 0.25) + (0.0625)) / 2.0;
    CHECK(gl.cond.item() == doctest::Approx(cond).epsilon(1e-5));
    const double want = 150.0 * cond +
                        30.0 * (gl.rec_self.item() + gl.rec_cycle.item());
    CHECK(gl.total.item() == doctest::Approx(want).epsilon(1e-5));
    CHECK(gl.rec_self.item() > 0.0);
    CHECK(gl.rec_cycle.item() > 0.0);
}

TEST_CASE("reconstruction weight scales linearly") {
    ArchConfig cfg = tiny_arch();
    Rng rng(78);
    Generator gen(cfg, rng);
    DiscriminatorI di(cfg, rng);
    Tensor x = rand_uniform({1, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor u_x = rand_uniform({1, 3}, rng, 0.0f, 1.0f);
    Tensor u_y = rand_uniform({1, 3}, rng, 0.0f, 1.0f);

    LossWeights w1;
    LossWeights w2 = w1;
    w2.lambda3 = 2.0f * w1.lambda3;
    GeneratorLosses a = generator_losses(gen, di, nullptr, x, u_x, u_y, w1);
    GeneratorLosses b = generator_losses(gen, di, nullptr, x, u_x, u_y, w2);
    const double rec = a.rec_self.item() + a.rec_cycle.item();
    CHECK(b.total.item() - a.total.item() ==
          doctest::Approx(w1.lambda3 * rec).epsilon(1e-6));
}

TEST_CASE("critic update cannot leak gradient into a frozen generator") {
    ArchConfig cfg = tiny_arch();
    Rng rng(79);
    Generator gen(cfg, rng);
    DiscriminatorI di(cfg, rng);
    DiscriminatorH dh(cfg, rng);
    Tensor x = rand_uniform({2, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor u_x = rand_uniform({2, 3}, rng, 0.0f, 1.0f);
    Tensor u_y = rand_uniform({2, 3}, rng, 0.0f, 1.0f);
    LossWeights w;

    gen.params().set_trainable(false);
    CriticLosses cl = critic_losses(gen, di, &dh, x, u_x, u_y, w, rng);
    backward(cl.total);
    CHECK(grads_absent_or_zero(gen.params()));
    CHECK(grads_all_defined(di.params()));
    CHECK(grads_all_defined(dh.params()));
    gen.params().set_trainable(true);
}

TEST_CASE("generator update cannot leak gradient into frozen critics") {
    ArchConfig cfg = tiny_arch();
    Rng rng(80);
    Generator gen(cfg, rng);
    DiscriminatorI di(cfg, rng);
    DiscriminatorH dh(cfg, rng);
    Tensor x = rand_uniform({2, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor u_x = rand_uniform({2, 3}, rng, 0.0f, 1.0f);
    Tensor u_y = rand_uniform({2, 3}, rng, 0.0f, 1.0f);
    LossWeights w;

    di.params().set_trainable(false);
    dh.params().set_trainable(false);
    GeneratorLosses gl = generator_losses(gen, di, &dh, x, u_x, u_y, w);
    backward(gl.total);
    CHECK(grads_absent_or_zero(di.params()));
    CHECK(grads_absent_or_zero(dh.params()));
    CHECK(grads_all_defined(gen.params()));
}

TEST_CASE("ablating the high-frequency critic zeroes its terms") {
    ArchConfig cfg = tiny_arch();
    Rng rng(81);
    Generator gen(cfg, rng);
    DiscriminatorI di(cfg, rng);
    Tensor x = rand_uniform({1, 2, 16, 16}, rng, -1.0f, 1.0f);
    Tensor u_x = rand_uniform({1, 3}, rng, 0.0f, 1.0f);
    Tensor u_y = rand_uniform({1, 3}, rng, 0.0f, 1.0f);
    LossWeights w;

    CriticLosses cl = critic_losses(gen, di, nullptr, x, u_x, u_y, w, rng);
    CHECK(cl.hf_adv.item() == 0.0f);
    CHECK(cl.total.item() ==
          doctest::Approx(cl.adv.item() + 150.0 * cl.cond.item()).epsilon(1e-5));
}

TEST_CASE("loss rows serialize in the documented column order") {
    CHECK(LossReport::csv_header() ==
          "step,epoch,d_adv,d_hf,d_cond,g_adv,g_hf,g_cond,rec_self,rec_cycle,"
          "total_d,total_g");
    LossReport r;
    r.d_adv = 1.5;
    r.total_g = -2.25;
    const std::string row = r.csv_row(7, 2);
    CHECK(row.substr(0, 4) == "7,2,");
    size_t commas = 0;
    for (char c : row) commas += (c == ',');
    CHECK(commas == 11);
    CHECK(row.find("1.5") != std::string::npos);
    CHECK(row.find("-2.25") != std::string::npos);
}

TEST_CASE("high-frequency interpolation commutes with the transform") {
    Rng rng(82);
    Tensor a = rand_uniform({1, 2, 8, 8}, rng, -1.0f, 1.0f);
    Tensor b = rand_uniform({1, 2, 8, 8}, rng, -1.0f, 1.0f);
    NoGradGuard ng;
    const float e = 0.3125f;
    Tensor mixed_then_hp = high_pass_reconstruct(
        add(scale(a, e), scale(b, 1.0f - e)));
    Tensor hp_then_mixed = add(scale(high_pass_reconstruct(a), e),
                               scale(high_pass_reconstruct(b), 1.0f - e));
    for (int64_t i = 0; i < mixed_then_hp.size(); ++i)
        CHECK(mixed_then_hp.data()[i] ==
              doctest::Approx(hp_then_mixed.data()[i]).epsilon(1e-5));
}
