#pragma once

#include <functional>
#include <string>

#include "wavexp/net.hpp"

namespace wavexp {

struct LossWeights {
    float lambda_gp = 10.0f;  // gradient penalty
    float lambda1 = 150.0f;   // conditioning term, critic side
    float lambda2 = 150.0f;   // conditioning term, generator side
    float lambda3 = 30.0f;    // reconstruction terms
};

// Scalar snapshot of one training step's losses, in log order.
struct LossReport {
    double d_adv = 0, d_hf = 0, d_cond = 0;
    double g_adv = 0, g_hf = 0, g_cond = 0;
    double rec_self = 0, rec_cycle = 0;
    double total_d = 0, total_g = 0;

    static std::string csv_header();  // includes leading step,epoch columns
    std::string csv_row(int64_t step, int64_t epoch) const;
};

// mean over the batch of (||d(sum of score map)/d(interpolate)||_2 - 1)^2,
// with a fresh per-sample interpolation weight in [0,1]. Differentiable in the
// critic's parameters (the inner gradient is built with create_graph).
Tensor gradient_penalty(const std::function<Tensor(const Tensor&)>& score_map,
                        const Tensor& a, const Tensor& b, Rng& rng);

struct CriticLosses {
    Tensor adv;      // image critic: -E[D(x)] + E[D(x')] + gp
    Tensor hf_adv;   // high-frequency critic, same shape of terms
    Tensor cond;     // E[ ||au(x) - u_x||^2 ]
    Tensor total;    // adv + hf_adv + lambda1 * cond
    Tensor fake;     // detached G(x, u_y - u_x)
};

// hf may be null (critic ablated): hf_adv is then a constant zero.
CriticLosses critic_losses(const Generator& gen, const DiscriminatorI& di,
                           const DiscriminatorH* hf, const Tensor& x,
                           const Tensor& u_x, const Tensor& u_y,
                           const LossWeights& w, Rng& rng);

struct GeneratorLosses {
    Tensor adv;        // -E[D(x')]
    Tensor hf_adv;     // -E[D_hf(W(x'))]
    Tensor cond;       // E[ ||au(x') - u_y||^2 ]
    Tensor rec_self;   // mean |G(x, 0) - x|
    Tensor rec_cycle;  // mean |G(x', -(u_y-u_x)) - x|
    Tensor total;      // adv + hf_adv + lambda2*cond + lambda3*(rec terms)
    Tensor fake, self_recon, cycle;
};

GeneratorLosses generator_losses(const Generator& gen, const DiscriminatorI& di,
                                 const DiscriminatorH* hf, const Tensor& x,
                                 const Tensor& u_x, const Tensor& u_y,
                                 const LossWeights& w);

}  // namespace wavexp
