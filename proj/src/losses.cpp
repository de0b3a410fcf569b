#include "wavexp/losses.hpp"

#include <sstream>

#include "wavexp/wavelet.hpp"

namespace wavexp {

std::string LossReport::csv_header() {
    return "step,epoch,d_adv,d_hf,d_cond,g_adv,g_hf,g_cond,rec_self,rec_cycle,"
           "total_d,total_g";
}

std::string LossReport::csv_row(int64_t step, int64_t epoch) const {
    std::ostringstream os;
    os.precision(9);
    os << step << ',' << epoch << ',' << d_adv << ',' << d_hf << ',' << d_cond
       << ',' << g_adv << ',' << g_hf << ',' << g_cond << ',' << rec_self << ','
       << rec_cycle << ',' << total_d << ',' << total_g;
    return os.str();
}

namespace {

// mean over batch and map positions of a critic score map
Tensor score_mean(const Tensor& s) { return mean_all(s); }

// mean over batch of per-sample squared L2 distance between [N,K] rows
Tensor cond_loss(const Tensor& pred, const Tensor& target) {
    Tensor d = sub(pred, target);
    return mean_all(sum_per_sample(mul(d, d)));
}

Tensor detached_fake(const Generator& gen, const Tensor& x, const Tensor& u_rel) {
    NoGradGuard ng;
    return gen.forward(x, u_rel);
}

}  // namespace

Tensor gradient_penalty(const std::function<Tensor(const Tensor&)>& score_map,
                        const Tensor& a, const Tensor& b, Rng& rng) {
    check(a.defined() && b.defined() && a.shape() == b.shape(),
          "gradient_penalty: endpoint shapes must match");
    Tensor mix;
    {
        NoGradGuard ng;
        Tensor eps = broadcast_per_sample(
            rand_uniform({a.dim(0), 1, 1, 1}, rng, 0.0f, 1.0f), a.shape());
        Tensor one_minus = add_scalar(neg(eps), 1.0f);
        mix = add(mul(eps, a), mul(one_minus, b));
    }
    mix.set_requires_grad(true);
    Tensor s = sum_all(score_map(mix));
    Tensor g = grad_wrt(s, mix, /*create_graph=*/true);
    Tensor norm = l2_norm_per_sample(g);
    Tensor shifted = add_scalar(norm, -1.0f);
    return mean_all(mul(shifted, shifted));
}

CriticLosses critic_losses(const Generator& gen, const DiscriminatorI& di,
                           const DiscriminatorH* hf, const Tensor& x,
                           const Tensor& u_x, const Tensor& u_y,
                           const LossWeights& w, Rng& rng) {
    Tensor u_rel;
    {
        NoGradGuard ng;
        u_rel = sub(u_y, u_x);
    }
    CriticLosses out;
    out.fake = detached_fake(gen, x, u_rel);

    auto [real_score, real_au] = di.forward(x);
    Tensor fake_score = di.forward(out.fake).first;
    Tensor gp = gradient_penalty(
        [&](const Tensor& t) { return di.forward(t).first; }, x, out.fake, rng);
    out.adv = add(sub(score_mean(fake_score), score_mean(real_score)),
                  scale(gp, w.lambda_gp));

    if (hf != nullptr) {
        Tensor hx, hfake;
        {
            NoGradGuard ng;
            hx = high_pass_reconstruct(x);
            hfake = high_pass_reconstruct(out.fake);
        }
        Tensor gp_h = gradient_penalty(
            [&](const Tensor& t) { return hf->forward(t); }, hx, hfake, rng);
        out.hf_adv = add(sub(score_mean(hf->forward(hfake)),
                             score_mean(hf->forward(hx))),
                         scale(gp_h, w.lambda_gp));
    } else {
        out.hf_adv = Tensor::scalar(0.0f);
    }

    out.cond = cond_loss(real_au, u_x);
    out.total = add(add(out.adv, out.hf_adv), scale(out.cond, w.lambda1));
    return out;
}

GeneratorLosses generator_losses(const Generator& gen, const DiscriminatorI& di,
                                 const DiscriminatorH* hf, const Tensor& x,
                                 const Tensor& u_x, const Tensor& u_y,
                                 const LossWeights& w) {
    Tensor u_rel, u_back, u_zero;
    {
        NoGradGuard ng;
        u_rel = sub(u_y, u_x);
        u_back = neg(u_rel);
        u_zero = Tensor::zeros(u_rel.shape());
    }
    GeneratorLosses out;
    out.fake = gen.forward(x, u_rel);
    out.self_recon = gen.forward(x, u_zero);
    out.cycle = gen.forward(out.fake, u_back);  // backprop reaches both passes

    auto [fake_score, fake_au] = di.forward(out.fake);
    out.adv = neg(score_mean(fake_score));
    if (hf != nullptr) {
        out.hf_adv = neg(score_mean(hf->forward(high_pass_reconstruct(out.fake))));
    } else {
        out.hf_adv = Tensor::scalar(0.0f);
    }
    out.cond = cond_loss(fake_au, u_y);
    out.rec_self = l1_mean(out.self_recon, x);
    out.rec_cycle = l1_mean(out.cycle, x);

    out.total = add(add(add(out.adv, out.hf_adv), scale(out.cond, w.lambda2)),
                    scale(add(out.rec_self, out.rec_cycle), w.lambda3));
    return out;
}

}  // namespace wavexp
