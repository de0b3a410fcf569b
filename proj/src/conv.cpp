#include <Eigen/Core>

#include "wavexp/ops.hpp"
#include "wavexp/parallel.hpp"

// im2col + GEMM convolution. Batch samples are partitioned into static
// contiguous chunks (parallel_chunks); forward/input-grad writes are disjoint
// per sample and the weight-grad reduces per-chunk partials in chunk order,
// so results are reproducible for a fixed thread count.

namespace wavexp {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

struct ConvGeom {
    int64_t ci, h, w;    // input plane
    int64_t kh, kw;      // kernel
    int64_t stride, pad;
    int64_t ho, wo;      // conv output plane
    int64_t k() const { return ci * kh * kw; }
    int64_t p() const { return ho * wo; }
};

ConvGeom conv_geom(int64_t ci, int64_t h, int64_t w, int64_t kh, int64_t kw, int64_t stride,
                   int64_t pad, const char* op) {
    check(stride >= 1 && pad >= 0, op, ": bad stride/pad ", stride, "/", pad);
    check(kh >= 1 && kw >= 1 && kh <= h + 2 * pad && kw <= w + 2 * pad, op,
          ": kernel ", kh, "x", kw, " too large for ", h, "x", w, " pad ", pad);
    check((h + 2 * pad - kh) % stride == 0 && (w + 2 * pad - kw) % stride == 0, op,
          ": geometry h=", h, " w=", w, " k=", kh, "x", kw, " s=", stride, " p=", pad,
          " does not tile exactly");
    ConvGeom g{ci, h, w, kh, kw, stride, pad, 0, 0};
    g.ho = (h + 2 * pad - kh) / stride + 1;
    g.wo = (w + 2 * pad - kw) / stride + 1;
    return g;
}

// cols is row-major [Ci*kh*kw, Ho*Wo]; row r = (ci*kh + ki)*kw + kj.
void im2col(const float* src, const ConvGeom& g, float* cols) {
    const int64_t P = g.p();
    for (int64_t ci = 0; ci < g.ci; ++ci) {
        const float* plane = src + ci * g.h * g.w;
        for (int64_t ki = 0; ki < g.kh; ++ki)
            for (int64_t kj = 0; kj < g.kw; ++kj) {
                float* row = cols + ((ci * g.kh + ki) * g.kw + kj) * P;
                for (int64_t ho = 0; ho < g.ho; ++ho) {
                    const int64_t hi = ho * g.stride - g.pad + ki;
                    float* dst = row + ho * g.wo;
                    if (hi < 0 || hi >= g.h) {
                        std::fill_n(dst, g.wo, 0.0f);
                        continue;
                    }
                    const float* srow = plane + hi * g.w;
                    for (int64_t wo = 0; wo < g.wo; ++wo) {
                        const int64_t wi = wo * g.stride - g.pad + kj;
                        dst[wo] = (wi >= 0 && wi < g.w) ? srow[wi] : 0.0f;
                    }
                }
            }
    }
}

// Adjoint scatter of im2col: dst (a full [Ci,H,W] plane, pre-zeroed) += cols.
void col2im_add(const float* cols, const ConvGeom& g, float* dst) {
    const int64_t P = g.p();
    for (int64_t ci = 0; ci < g.ci; ++ci) {
        float* plane = dst + ci * g.h * g.w;
        for (int64_t ki = 0; ki < g.kh; ++ki)
            for (int64_t kj = 0; kj < g.kw; ++kj) {
                const float* row = cols + ((ci * g.kh + ki) * g.kw + kj) * P;
                for (int64_t ho = 0; ho < g.ho; ++ho) {
                    const int64_t hi = ho * g.stride - g.pad + ki;
                    if (hi < 0 || hi >= g.h) continue;
                    float* drow = plane + hi * g.w;
                    const float* srow = row + ho * g.wo;
                    for (int64_t wo = 0; wo < g.wo; ++wo) {
                        const int64_t wi = wo * g.stride - g.pad + kj;
                        if (wi >= 0 && wi < g.w) drow[wi] += srow[wo];
                    }
                }
            }
    }
}

void add_bias(float* out, const float* bias, int64_t co, int64_t plane) {
    for (int64_t c = 0; c < co; ++c) {
        const float b = bias[c];
        float* p = out + c * plane;
        for (int64_t i = 0; i < plane; ++i) p[i] += b;
    }
}

void check_bias(const Tensor& bias, int64_t co, const char* op) {
    if (!bias.defined()) return;
    check(bias.rank() == 1 && bias.dim(0) == co, op, ": bias must be {", co, "}, got ",
          shape_str(bias.shape()));
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride,
              int64_t pad) {
    check(x.defined() && x.rank() == 4, "conv2d: input must be NCHW");
    check(w.defined() && w.rank() == 4, "conv2d: weight must be [Co,Ci,kh,kw]");
    const int64_t n = x.dim(0), ci = x.dim(1), co = w.dim(0);
    check(w.dim(1) == ci, "conv2d: weight expects Ci=", w.dim(1), ", input has ", ci);
    ConvGeom g = conv_geom(ci, x.dim(2), x.dim(3), w.dim(2), w.dim(3), stride, pad, "conv2d");
    check_bias(bias, co, "conv2d");

    const int64_t K = g.k(), P = g.p();
    Shape out_shape{n, co, g.ho, g.wo};
    std::vector<float> out(static_cast<size_t>(numel(out_shape)));
    MapConst w_m(w.data(), co, K);
    parallel_chunks(n, [&](int, int64_t begin, int64_t end) {
        std::vector<float> cols(static_cast<size_t>(K * P));
        for (int64_t b = begin; b < end; ++b) {
            im2col(x.data() + b * ci * g.h * g.w, g, cols.data());
            MapConst cols_m(cols.data(), K, P);
            MapMat out_m(out.data() + b * co * P, co, P);
            out_m.noalias() = w_m * cols_m;
            if (bias.defined()) add_bias(out.data() + b * co * P, bias.data(), co, P);
        }
    });

    const int64_t kh = g.kh, kw = g.kw;
    return Tensor::op_result(
        std::move(out_shape), std::move(out), "conv2d", {x, w, bias},
        [x, w, kh, kw, stride, pad](const Tensor& gout, const std::vector<char>& needs) {
            std::vector<Tensor> gs(3);
            if (needs[0]) gs[0] = conv_transpose2d(gout, w, Tensor(), stride, pad);
            if (needs[1]) gs[1] = conv2d_weight_grad(x, gout, kh, kw, stride, pad);
            if (needs[2]) gs[2] = sum_nhw(gout);
            return gs;
        });
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride,
                        int64_t pad) {
    check(x.defined() && x.rank() == 4, "conv_transpose2d: input must be NCHW");
    check(w.defined() && w.rank() == 4, "conv_transpose2d: weight must be [Ci,Co,kh,kw]");
    const int64_t n = x.dim(0), ci = x.dim(1), co = w.dim(1);
    check(w.dim(0) == ci, "conv_transpose2d: weight expects Ci=", w.dim(0), ", input has ",
          ci);
    const int64_t kh = w.dim(2), kw = w.dim(3);
    const int64_t ho = (x.dim(2) - 1) * stride - 2 * pad + kh;
    const int64_t wo = (x.dim(3) - 1) * stride - 2 * pad + kw;
    check(ho >= 1 && wo >= 1, "conv_transpose2d: output ", ho, "x", wo, " is empty");
    // The output plays the role of the conv input in the scatter.
    ConvGeom g = conv_geom(co, ho, wo, kh, kw, stride, pad, "conv_transpose2d");
    check(g.ho == x.dim(2) && g.wo == x.dim(3), "conv_transpose2d: inconsistent geometry");
    check_bias(bias, co, "conv_transpose2d");

    const int64_t K = co * kh * kw, P = x.dim(2) * x.dim(3);
    Shape out_shape{n, co, ho, wo};
    std::vector<float> out(static_cast<size_t>(numel(out_shape)), 0.0f);
    MapConst w_m(w.data(), ci, K);
    parallel_chunks(n, [&](int, int64_t begin, int64_t end) {
        std::vector<float> cols(static_cast<size_t>(K * P));
        for (int64_t b = begin; b < end; ++b) {
            MapConst x_m(x.data() + b * ci * P, ci, P);
            MapMat cols_m(cols.data(), K, P);
            cols_m.noalias() = w_m.transpose() * x_m;
            col2im_add(cols.data(), g, out.data() + b * co * ho * wo);
            if (bias.defined()) add_bias(out.data() + b * co * ho * wo, bias.data(), co, ho * wo);
        }
    });

    return Tensor::op_result(
        std::move(out_shape), std::move(out), "conv_transpose2d", {x, w, bias},
        [x, w, kh, kw, stride, pad](const Tensor& gout, const std::vector<char>& needs) {
            std::vector<Tensor> gs(3);
            if (needs[0]) gs[0] = conv2d(gout, w, Tensor(), stride, pad);
            if (needs[1]) gs[1] = conv2d_weight_grad(gout, x, kh, kw, stride, pad);
            if (needs[2]) gs[2] = sum_nhw(gout);
            return gs;
        });
}

Tensor conv2d_weight_grad(const Tensor& x, const Tensor& gout, int64_t kh, int64_t kw,
                          int64_t stride, int64_t pad) {
    check(x.defined() && x.rank() == 4 && gout.defined() && gout.rank() == 4,
          "conv2d_weight_grad: operands must be NCHW");
    const int64_t n = x.dim(0), ci = x.dim(1), co = gout.dim(1);
    check(gout.dim(0) == n, "conv2d_weight_grad: batch mismatch");
    ConvGeom g =
        conv_geom(ci, x.dim(2), x.dim(3), kh, kw, stride, pad, "conv2d_weight_grad");
    check(gout.dim(2) == g.ho && gout.dim(3) == g.wo,
          "conv2d_weight_grad: grad spatial ", gout.dim(2), "x", gout.dim(3),
          " does not match conv output ", g.ho, "x", g.wo);

    const int64_t K = g.k(), P = g.p();
    const int chunks = std::max(parallel_chunk_count(n), 1);
    std::vector<std::vector<float>> partial(
        static_cast<size_t>(chunks), std::vector<float>(static_cast<size_t>(co * K), 0.0f));
    parallel_chunks(n, [&](int chunk, int64_t begin, int64_t end) {
        std::vector<float> cols(static_cast<size_t>(K * P));
        MapMat dw_m(partial[static_cast<size_t>(chunk)].data(), co, K);
        for (int64_t b = begin; b < end; ++b) {
            im2col(x.data() + b * ci * g.h * g.w, g, cols.data());
            MapConst cols_m(cols.data(), K, P);
            MapConst g_m(gout.data() + b * co * P, co, P);
            dw_m.noalias() += g_m * cols_m.transpose();
        }
    });
    std::vector<float> dw = std::move(partial[0]);
    for (int c = 1; c < chunks; ++c) {
        const float* src = partial[static_cast<size_t>(c)].data();
        for (int64_t i = 0; i < co * K; ++i) dw[static_cast<size_t>(i)] += src[i];
    }

    return Tensor::op_result(
        {co, ci, kh, kw}, std::move(dw), "conv2d_weight_grad", {x, gout},
        [](const Tensor&, const std::vector<char>&) -> std::vector<Tensor> {
            fail("conv2d_weight_grad has no vjp; it only terminates backward passes");
        });
}

}  // namespace wavexp
