#include "wavexp/net.hpp"

#include <algorithm>

#include "wavexp/wavelet.hpp"

namespace wavexp {

namespace {
constexpr float kLeakySlope = 0.2f;
}

Tensor ParamStore::add(const std::string& name, Tensor t) {
    check(find(name) == nullptr, "duplicate parameter name ", name);
    t.set_requires_grad(true);
    params.push_back({name, t});
    return t;
}

const Parameter* ParamStore::find(const std::string& name) const {
    for (const Parameter& p : params)
        if (p.name == name) return &p;
    return nullptr;
}

void ParamStore::set_trainable(bool on) {
    for (Parameter& p : params) p.tensor.set_requires_grad(on);
}

void ParamStore::zero_grads() {
    for (Parameter& p : params) p.tensor.zero_grad();
}

int64_t ParamStore::element_count() const {
    int64_t n = 0;
    for (const Parameter& p : params) n += p.tensor.size();
    return n;
}

ArchConfig ArchConfig::paper_preset() { return ArchConfig{}; }

ArchConfig ArchConfig::desk_preset() {
    ArchConfig c;
    c.image_size = 64;
    c.in_channels = 3;
    c.n_down = 4;
    c.widths = {16, 32, 64, 128, 128};
    c.n_au = 5;
    c.skip_levels = {1, 2, 3};
    c.critic_base_width = 16;
    return c;
}

bool ArchConfig::has_skip(int64_t level) const {
    return use_wavelet_skips &&
           std::find(skip_levels.begin(), skip_levels.end(), level) != skip_levels.end();
}

void ArchConfig::validate() const {
    check(static_cast<int64_t>(widths.size()) == n_down + 1, "arch: widths must list stem + ",
          n_down, " levels, got ", widths.size());
    check(n_down >= 1 && image_size >= 1 && in_channels >= 1 && n_au >= 1,
          "arch: counts must be positive");
    check(image_size % (1 << n_down) == 0, "arch: image size ", image_size,
          " not divisible by 2^", n_down);
    check(bottleneck_size() >= 4, "arch: bottleneck ", bottleneck_size(), " below 4x4");
    check(image_size >> (n_down + 1) >= 1, "arch: critic trunk underflows");
    for (int64_t w : widths) check(w >= 1, "arch: nonpositive width");
    for (int64_t l : skip_levels)
        check(l >= 1 && l <= n_down, "arch: skip level ", l, " outside [1,", n_down, "]");
}

ConvLayer make_conv(ParamStore& ps, const std::string& prefix, int64_t ci, int64_t co,
                    int64_t k, int64_t stride, int64_t pad, Rng& rng) {
    ConvLayer l;
    l.w = ps.add(prefix + ".weight", randn({co, ci, k, k}, rng, 0.0f, 0.02f));
    l.b = ps.add(prefix + ".bias", Tensor::zeros({co}));
    l.stride = stride;
    l.pad = pad;
    return l;
}

ConvTLayer make_convt(ParamStore& ps, const std::string& prefix, int64_t ci, int64_t co,
                      int64_t k, int64_t stride, int64_t pad, Rng& rng) {
    ConvTLayer l;
    l.w = ps.add(prefix + ".weight", randn({ci, co, k, k}, rng, 0.0f, 0.02f));
    l.b = ps.add(prefix + ".bias", Tensor::zeros({co}));
    l.stride = stride;
    l.pad = pad;
    return l;
}

NormLayer make_norm(ParamStore& ps, const std::string& prefix, int64_t c) {
    NormLayer l;
    l.gamma = ps.add(prefix + ".gamma", Tensor::full({c}, 1.0f));
    l.beta = ps.add(prefix + ".beta", Tensor::zeros({c}));
    return l;
}

// ---------------------------------------------------------------------------

Generator::Generator(const ArchConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    const auto& w = cfg_.widths;

    stem_ = {make_conv(store_, "gen.enc.0.conv", cfg_.in_channels, w[0], 7, 1, 3, rng),
             make_norm(store_, "gen.enc.0.norm", w[0])};
    for (int64_t l = 1; l <= cfg_.n_down; ++l) {
        enc_.push_back({make_conv(store_, "gen.enc." + std::to_string(l) + ".conv", w[l - 1],
                                  w[l], 4, 2, 1, rng),
                        make_norm(store_, "gen.enc." + std::to_string(l) + ".norm", w[l])});
    }

    const int64_t zc = w[cfg_.n_down];
    if (cfg_.use_au_fusion) {
        fuse1_c_ = make_conv(store_, "gen.fuse.1.conv", zc + cfg_.n_au, zc, 3, 1, 1, rng);
        fuse1_n_ = make_norm(store_, "gen.fuse.1.norm", zc);
        fuse2_c_ = make_conv(store_, "gen.fuse.2.conv", zc + cfg_.n_au, zc, 3, 1, 1, rng);
        fuse2_n_ = make_norm(store_, "gen.fuse.2.norm", zc);
        fuse3_c_ =
            make_conv(store_, "gen.fuse.3.conv", 2 * (zc + cfg_.n_au), zc, 3, 1, 1, rng);
        fuse3_n_ = make_norm(store_, "gen.fuse.3.norm", zc);
    } else {
        fuse1_c_ = make_conv(store_, "gen.fuse.1.conv", zc + cfg_.n_au, zc, 3, 1, 1, rng);
        fuse1_n_ = make_norm(store_, "gen.fuse.1.norm", zc);
    }

    for (int64_t l = cfg_.n_down - 1; l >= 0; --l) {
        int64_t ci = w[l + 1];
        if (cfg_.has_skip(l + 1)) ci *= 2;  // decoder feature + high-pass skip
        dec_.push_back({make_convt(store_, "gen.dec." + std::to_string(l) + ".conv", ci,
                                   w[l], 4, 2, 1, rng),
                        make_norm(store_, "gen.dec." + std::to_string(l) + ".norm", w[l])});
    }
    head_ = make_conv(store_, "gen.head.conv", w[0], cfg_.in_channels, 7, 1, 3, rng);
}

Tensor Generator::au_fusion(const Tensor& z, const Tensor& u_rel) const {
    check(z.defined() && z.rank() == 4, "au_fusion: z must be NCHW");
    check(u_rel.defined() && u_rel.rank() == 2 && u_rel.dim(1) == cfg_.n_au,
          "au_fusion: conditioning must be [N,", cfg_.n_au, "], got ",
          u_rel.defined() ? shape_str(u_rel.shape()) : "<undef>");
    check(z.dim(0) == u_rel.dim(0), "au_fusion: batch mismatch");
    const int64_t n = z.dim(0), h = z.dim(2), wd = z.dim(3);
    Tensor a = broadcast_hw(reshape(u_rel, {n, cfg_.n_au, 1, 1}), h, wd);
    if (!cfg_.use_au_fusion) {
        return relu(fuse1_n_(fuse1_c_(concat_channels({z, a}))));
    }
    Tensor h1 = relu(fuse1_n_(fuse1_c_(concat_channels({z, a}))));
    Tensor h2 = fuse2_n_(fuse2_c_(concat_channels({h1, a})));
    Tensor h3 = relu(fuse3_n_(fuse3_c_(concat_channels({z, a, h2, a}))));
    return add(z, h3);
}

Tensor Generator::forward(const Tensor& x, const Tensor& u_rel) const {
    check(x.defined() && x.rank() == 4 && x.dim(1) == cfg_.in_channels &&
              x.dim(2) == cfg_.image_size && x.dim(3) == cfg_.image_size,
          "generator: input must be [N,", cfg_.in_channels, ",", cfg_.image_size, ",",
          cfg_.image_size, "], got ", x.defined() ? shape_str(x.shape()) : "<undef>");

    std::vector<Tensor> feats;  // feats[l] = encoder output at level l
    Tensor cur = leaky_relu(stem_.norm(stem_.conv(x)), kLeakySlope);
    feats.push_back(cur);
    for (const DownBlock& blk : enc_) {
        cur = leaky_relu(blk.norm(blk.conv(cur)), kLeakySlope);
        feats.push_back(cur);
    }

    cur = au_fusion(cur, u_rel);

    for (size_t i = 0; i < dec_.size(); ++i) {
        const int64_t level = cfg_.n_down - static_cast<int64_t>(i);  // level being consumed
        if (cfg_.has_skip(level))
            cur = concat_channels({cur, high_pass_reconstruct(feats[level])});
        cur = relu(dec_[i].norm(dec_[i].conv(cur)));
    }
    return tanh(head_(cur));
}

// ---------------------------------------------------------------------------

namespace {

template <typename Block>
std::vector<Block> make_trunk(ParamStore& ps, const std::string& model, const ArchConfig& cfg,
                              Rng& rng, int64_t* final_width) {
    std::vector<Block> trunk;
    int64_t ci = cfg.in_channels;
    int64_t co = cfg.critic_base_width;
    for (int64_t l = 0; l <= cfg.n_down; ++l) {
        const std::string prefix = model + ".trunk." + std::to_string(l);
        trunk.push_back({make_conv(ps, prefix + ".conv", ci, co, 4, 2, 1, rng),
                         make_norm(ps, prefix + ".norm", co)});
        ci = co;
        co *= 2;
    }
    *final_width = ci;
    return trunk;
}

}  // namespace

DiscriminatorI::DiscriminatorI(const ArchConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    int64_t tw = 0;
    trunk_ = make_trunk<TrunkBlock>(store_, "di", cfg_, rng, &tw);
    critic_head_ = make_conv(store_, "di.critic", tw, 1, 3, 1, 1, rng);
    const int64_t s = cfg_.image_size >> (cfg_.n_down + 1);
    au_head_ = make_conv(store_, "di.au", tw, cfg_.n_au, s, 1, 0, rng);
}

std::pair<Tensor, Tensor> DiscriminatorI::forward(const Tensor& x) const {
    check(x.defined() && x.rank() == 4 && x.dim(1) == cfg_.in_channels &&
              x.dim(2) == cfg_.image_size && x.dim(3) == cfg_.image_size,
          "critic: input must be [N,", cfg_.in_channels, ",", cfg_.image_size, ",",
          cfg_.image_size, "], got ", x.defined() ? shape_str(x.shape()) : "<undef>");
    Tensor cur = x;
    for (const TrunkBlock& blk : trunk_) cur = leaky_relu(blk.norm(blk.conv(cur)), kLeakySlope);
    Tensor score = critic_head_(cur);
    Tensor au = reshape(au_head_(cur), {x.dim(0), cfg_.n_au});
    return {score, au};
}

DiscriminatorH::DiscriminatorH(const ArchConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    int64_t tw = 0;
    trunk_ = make_trunk<TrunkBlock>(store_, "dh", cfg_, rng, &tw);
    head_ = make_conv(store_, "dh.critic", tw, 1, 3, 1, 1, rng);
}

Tensor DiscriminatorH::forward(const Tensor& x) const {
    check(x.defined() && x.rank() == 4 && x.dim(1) == cfg_.in_channels &&
              x.dim(2) == cfg_.image_size && x.dim(3) == cfg_.image_size,
          "hf critic: input must be [N,", cfg_.in_channels, ",", cfg_.image_size, ",",
          cfg_.image_size, "], got ", x.defined() ? shape_str(x.shape()) : "<undef>");
    Tensor cur = x;
    for (const TrunkBlock& blk : trunk_) cur = leaky_relu(blk.norm(blk.conv(cur)), kLeakySlope);
    return head_(cur);
}

}  // namespace wavexp
