#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wavexp/ops.hpp"

namespace wavexp {

/// Ordered, uniquely named trainable tensors of one model.
struct ParamStore {
    std::vector<Parameter> params;

    Tensor add(const std::string& name, Tensor t);
    const Parameter* find(const std::string& name) const;
    /// Toggle requires_grad on every parameter. Freezing a model before
    /// building the other model's loss keeps its gradients exactly zero —
    /// frozen branches are pruned from backward, not merely multiplied by 0.
    void set_trainable(bool on);
    void zero_grads();
    int64_t element_count() const;
};

struct ArchConfig {
    int64_t image_size = 128;
    int64_t in_channels = 3;
    int64_t n_down = 5;                                  // stride-2 encoder stages
    std::vector<int64_t> widths{64, 128, 256, 512, 512, 512};  // stem + per level
    int64_t n_au = 17;
    std::vector<int64_t> skip_levels{1, 2, 3};  // encoder levels with high-pass skips
    int64_t critic_base_width = 64;             // doubles per critic trunk layer

    // ablation switches
    bool use_au_fusion = true;      // full fusion block vs single conditioned conv
    bool use_wavelet_skips = true;  // high-frequency encoder->decoder skips
    bool use_hf_critic = true;      // second critic on high-frequency content

    static ArchConfig paper_preset();
    static ArchConfig desk_preset();

    int64_t bottleneck_size() const { return image_size >> n_down; }
    bool has_skip(int64_t level) const;
    void validate() const;
};

struct ConvLayer {
    Tensor w, b;
    int64_t stride = 1, pad = 0;
    Tensor operator()(const Tensor& x) const { return conv2d(x, w, b, stride, pad); }
};

struct ConvTLayer {
    Tensor w, b;
    int64_t stride = 1, pad = 0;
    Tensor operator()(const Tensor& x) const { return conv_transpose2d(x, w, b, stride, pad); }
};

struct NormLayer {
    Tensor gamma, beta;
    Tensor operator()(const Tensor& x) const { return instance_norm(x, gamma, beta); }
};

ConvLayer make_conv(ParamStore& ps, const std::string& prefix, int64_t ci, int64_t co,
                    int64_t k, int64_t stride, int64_t pad, Rng& rng);
ConvTLayer make_convt(ParamStore& ps, const std::string& prefix, int64_t ci, int64_t co,
                      int64_t k, int64_t stride, int64_t pad, Rng& rng);
NormLayer make_norm(ParamStore& ps, const std::string& prefix, int64_t c);

/// U-shaped conditional generator: strided conv encoder, AU-conditioned
/// residual bottleneck, transposed-conv decoder that receives the
/// high-frequency reconstruction of selected encoder maps as skip concats,
/// Tanh head. Output shape equals input shape.
class Generator {
  public:
    Generator(const ArchConfig& cfg, Rng& rng);

    /// x: [N,C,S,S]; u_rel: [N,n_au] with entries in [-1,1].
    Tensor forward(const Tensor& x, const Tensor& u_rel) const;
    /// Conditioned residual bottleneck (exposed for direct inspection).
    Tensor au_fusion(const Tensor& z, const Tensor& u_rel) const;

    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    const ArchConfig& config() const { return cfg_; }

  private:
    struct DownBlock {
        ConvLayer conv;
        NormLayer norm;
    };
    struct UpBlock {
        ConvTLayer conv;
        NormLayer norm;
    };

    ArchConfig cfg_;
    ParamStore store_;
    DownBlock stem_;
    std::vector<DownBlock> enc_;
    ConvLayer fuse1_c_, fuse2_c_, fuse3_c_;
    NormLayer fuse1_n_, fuse2_n_, fuse3_n_;
    std::vector<UpBlock> dec_;
    ConvLayer head_;
};

/// Patch critic trunk shared by both discriminators: n_down+1 k4 s2 p1
/// convolutions with doubling widths, instance norm, LeakyReLU(0.2),
/// finishing at a small spatial map (2x2 for both presets).
class DiscriminatorI {
  public:
    DiscriminatorI(const ArchConfig& cfg, Rng& rng);

    /// Returns (critic score map [N,1,s,s], au prediction [N,n_au]).
    std::pair<Tensor, Tensor> forward(const Tensor& x) const;

    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

  private:
    struct TrunkBlock {
        ConvLayer conv;
        NormLayer norm;
    };
    ArchConfig cfg_;
    ParamStore store_;
    std::vector<TrunkBlock> trunk_;
    ConvLayer critic_head_;
    ConvLayer au_head_;
};

/// Critic over high-frequency content; same trunk shape, single score head.
class DiscriminatorH {
  public:
    DiscriminatorH(const ArchConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& x) const;  // [N,1,s,s]

    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

  private:
    struct TrunkBlock {
        ConvLayer conv;
        NormLayer norm;
    };
    ArchConfig cfg_;
    ParamStore store_;
    std::vector<TrunkBlock> trunk_;
    ConvLayer head_;
};

}  // namespace wavexp
