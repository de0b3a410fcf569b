// Rough per-step cost measurement for the training configurations; prints
// milliseconds per phase so budgets in configs and tests stay honest.
#include <chrono>
#include <cstdio>

#include "wavexp/net.hpp"
#include "wavexp/wavelet.hpp"

using namespace wavexp;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace

int main() {
    ArchConfig cfg = ArchConfig::desk_preset();
    Rng rng(1);
    Generator gen(cfg, rng);
    DiscriminatorI di(cfg, rng);
    DiscriminatorH dh(cfg, rng);

    const int64_t batch = 16;
    Tensor x = rand_uniform({batch, 3, cfg.image_size, cfg.image_size}, rng, -1.0f, 1.0f);
    Tensor u = rand_uniform({batch, cfg.n_au}, rng, -1.0f, 1.0f);

    {
        auto t0 = std::chrono::steady_clock::now();
        Tensor y = gen.forward(x, u);
        std::printf("gen fwd (batch %lld): %.1f ms\n", static_cast<long long>(batch),
                    ms_since(t0));
        t0 = std::chrono::steady_clock::now();
        backward(mean_all(y));
        std::printf("gen bwd:              %.1f ms\n", ms_since(t0));
    }
    gen.params().zero_grads();

    {
        auto t0 = std::chrono::steady_clock::now();
        auto [score, au] = di.forward(x);
        backward(add(mean_all(score), mean_all(au)));
        std::printf("critic fwd+bwd:       %.1f ms\n", ms_since(t0));
    }

    {
        auto t0 = std::chrono::steady_clock::now();
        Tensor hx = high_pass_reconstruct(x);
        backward(mean_all(dh.forward(hx)));
        std::printf("hf critic fwd+bwd:    %.1f ms\n", ms_since(t0));
    }

    {
        // gradient-penalty shaped cost: grad of critic wrt input, then backward
        Tensor xi = detach(x);
        xi.set_requires_grad(true);
        auto t0 = std::chrono::steady_clock::now();
        auto [score, au] = di.forward(xi);
        Tensor g = grad_wrt(sum_all(score), xi, true);
        Tensor norm = l2_norm_per_sample(g);
        Tensor gp = mean_all(mul(add_scalar(norm, -1.0f), add_scalar(norm, -1.0f)));
        backward(gp);
        std::printf("penalty fwd+bwd:      %.1f ms\n", ms_since(t0));
    }

    {
        ArchConfig paper = ArchConfig::paper_preset();
        Rng r2(2);
        Generator pg(paper, r2);
        Tensor px = rand_uniform({1, 3, 128, 128}, r2, -1.0f, 1.0f);
        Tensor pu = rand_uniform({1, 17}, r2, -1.0f, 1.0f);
        auto t0 = std::chrono::steady_clock::now();
        Tensor py = pg.forward(px, pu);
        std::printf("full-size gen fwd (batch 1): %.1f ms  out %s\n", ms_since(t0),
                    shape_str(py.shape()).c_str());
    }
    return 0;
}
