#include "wavexp/ops.hpp"

#include <algorithm>
#include <cmath>

namespace wavexp {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    check(a.defined() && b.defined(), op, ": undefined operand");
    check(a.shape() == b.shape(), op, ": shape mismatch ", shape_str(a.shape()), " vs ",
          shape_str(b.shape()));
}

void check_nchw(const Tensor& x, const char* op) {
    check(x.defined() && x.rank() == 4, op, ": expected NCHW tensor, got ",
          x.defined() ? shape_str(x.shape()) : "<undef>");
}

std::vector<float> map1(const Tensor& x, float (*f)(float)) {
    std::vector<float> out(x.vec().size());
    const float* src = x.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(src[i]);
    return out;
}

}  // namespace

// -- creation -----------------------------------------------------------------

Tensor randn(const Shape& shape, Rng& rng, float mean, float stddev) {
    std::vector<float> d(static_cast<size_t>(numel(shape)));
    for (float& v : d) v = rng.normal(mean, stddev);
    return Tensor::from_data(shape, std::move(d));
}

Tensor rand_uniform(const Shape& shape, Rng& rng, float lo, float hi) {
    std::vector<float> d(static_cast<size_t>(numel(shape)));
    for (float& v : d) v = rng.uniform(lo, hi);
    return Tensor::from_data(shape, std::move(d));
}

// -- structure ----------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape) {
    check(x.defined(), "reshape: undefined operand");
    check(numel(shape) == x.size(), "reshape: ", shape_str(x.shape()), " -> ",
          shape_str(shape), " changes element count");
    Shape old = x.shape();
    return Tensor::op_result(std::move(shape), x.vec(), "reshape", {x},
                             [x, old](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{reshape(gout, old)};
                             });
}

Tensor detach(const Tensor& x) {
    check(x.defined(), "detach: undefined operand");
    return Tensor::from_data(x.shape(), x.vec());
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
    check(!xs.empty(), "concat_channels: no inputs");
    for (const Tensor& x : xs) check_nchw(x, "concat_channels");
    const int64_t n = xs[0].dim(0), h = xs[0].dim(2), w = xs[0].dim(3);
    int64_t c_total = 0;
    for (const Tensor& x : xs) {
        check(x.dim(0) == n && x.dim(2) == h && x.dim(3) == w,
              "concat_channels: incompatible shape ", shape_str(x.shape()));
        c_total += x.dim(1);
    }
    Shape out_shape{n, c_total, h, w};
    std::vector<float> out(static_cast<size_t>(numel(out_shape)));
    const int64_t plane = h * w;
    for (int64_t b = 0; b < n; ++b) {
        int64_t c_off = 0;
        for (const Tensor& x : xs) {
            const int64_t cx = x.dim(1);
            std::copy_n(x.data() + b * cx * plane, cx * plane,
                        out.data() + (b * c_total + c_off) * plane);
            c_off += cx;
        }
    }
    std::vector<int64_t> widths;
    for (const Tensor& x : xs) widths.push_back(x.dim(1));
    return Tensor::op_result(
        std::move(out_shape), std::move(out), "concat_channels", xs,
        [widths](const Tensor& gout, const std::vector<char>& needs) {
            std::vector<Tensor> gs(widths.size());
            int64_t c_off = 0;
            for (size_t i = 0; i < widths.size(); ++i) {
                if (needs[i]) gs[i] = slice_channels(gout, c_off, c_off + widths[i]);
                c_off += widths[i];
            }
            return gs;
        });
}

Tensor slice_channels(const Tensor& x, int64_t c_begin, int64_t c_end) {
    check_nchw(x, "slice_channels");
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(0 <= c_begin && c_begin < c_end && c_end <= c, "slice_channels: range [", c_begin,
          ", ", c_end, ") invalid for C=", c);
    const int64_t cs = c_end - c_begin, plane = h * w;
    Shape out_shape{n, cs, h, w};
    std::vector<float> out(static_cast<size_t>(numel(out_shape)));
    for (int64_t b = 0; b < n; ++b)
        std::copy_n(x.data() + (b * c + c_begin) * plane, cs * plane,
                    out.data() + b * cs * plane);
    Shape in_shape = x.shape();
    return Tensor::op_result(
        std::move(out_shape), std::move(out), "slice_channels", {x},
        [in_shape, c_begin, c_end](const Tensor& gout, const std::vector<char>&) {
            const int64_t c = in_shape[1];
            std::vector<Tensor> parts;
            if (c_begin > 0)
                parts.push_back(Tensor::zeros({in_shape[0], c_begin, in_shape[2], in_shape[3]}));
            parts.push_back(gout);
            if (c_end < c)
                parts.push_back(Tensor::zeros({in_shape[0], c - c_end, in_shape[2], in_shape[3]}));
            return std::vector<Tensor>{parts.size() == 1 ? gout : concat_channels(parts)};
        });
}

// -- elementwise ----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<float> out(a.vec().size());
    const float *pa = a.data(), *pb = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
    return Tensor::op_result(a.shape(), std::move(out), "add", {a, b},
                             [](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{gout, gout};
                             });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<float> out(a.vec().size());
    const float *pa = a.data(), *pb = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] - pb[i];
    return Tensor::op_result(a.shape(), std::move(out), "sub", {a, b},
                             [](const Tensor& gout, const std::vector<char>& needs) {
                                 std::vector<Tensor> gs(2);
                                 gs[0] = gout;
                                 if (needs[1]) gs[1] = neg(gout);
                                 return gs;
                             });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<float> out(a.vec().size());
    const float *pa = a.data(), *pb = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * pb[i];
    return Tensor::op_result(a.shape(), std::move(out), "mul", {a, b},
                             [a, b](const Tensor& gout, const std::vector<char>& needs) {
                                 std::vector<Tensor> gs(2);
                                 if (needs[0]) gs[0] = mul(gout, b);
                                 if (needs[1]) gs[1] = mul(gout, a);
                                 return gs;
                             });
}

Tensor neg(const Tensor& x) {
    check(x.defined(), "neg: undefined operand");
    std::vector<float> out(x.vec().size());
    const float* src = x.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = -src[i];
    return Tensor::op_result(x.shape(), std::move(out), "neg", {x},
                             [](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{neg(gout)};
                             });
}

Tensor scale(const Tensor& x, float s) {
    check(x.defined(), "scale: undefined operand");
    std::vector<float> out(x.vec().size());
    const float* src = x.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = src[i] * s;
    return Tensor::op_result(x.shape(), std::move(out), "scale", {x},
                             [s](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{scale(gout, s)};
                             });
}

Tensor add_scalar(const Tensor& x, float s) {
    check(x.defined(), "add_scalar: undefined operand");
    std::vector<float> out(x.vec().size());
    const float* src = x.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = src[i] + s;
    return Tensor::op_result(x.shape(), std::move(out), "add_scalar", {x},
                             [](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{gout};
                             });
}

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0f); }

Tensor leaky_relu(const Tensor& x, float negative_slope) {
    check(x.defined(), "leaky_relu: undefined operand");
    std::vector<float> out(x.vec().size());
    std::vector<float> slope(x.vec().size());
    const float* src = x.data();
    for (size_t i = 0; i < out.size(); ++i) {
        const bool pos = src[i] > 0.0f;
        out[i] = pos ? src[i] : src[i] * negative_slope;
        slope[i] = pos ? 1.0f : negative_slope;
    }
    Tensor slope_c = Tensor::from_data(x.shape(), std::move(slope));
    return Tensor::op_result(x.shape(), std::move(out), "leaky_relu", {x},
                             [slope_c](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{mul(gout, slope_c)};
                             });
}

Tensor tanh(const Tensor& x) {
    check(x.defined(), "tanh: undefined operand");
    return Tensor::op_result(x.shape(), map1(x, [](float v) { return std::tanh(v); }), "tanh",
                             {x}, [x](const Tensor& gout, const std::vector<char>&) {
                                 // recompute tanh(x) from the parent rather than capturing the
                                 // output node (that would be a reference cycle)
                                 Tensor y = tanh(x);
                                 Tensor one_minus_y2 = add_scalar(neg(mul(y, y)), 1.0f);
                                 return std::vector<Tensor>{mul(gout, one_minus_y2)};
                             });
}

Tensor abs(const Tensor& x) {
    check(x.defined(), "abs: undefined operand");
    std::vector<float> out(x.vec().size());
    std::vector<float> sign(x.vec().size());
    const float* src = x.data();
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = std::fabs(src[i]);
        sign[i] = src[i] > 0.0f ? 1.0f : (src[i] < 0.0f ? -1.0f : 0.0f);
    }
    Tensor sign_c = Tensor::from_data(x.shape(), std::move(sign));
    return Tensor::op_result(x.shape(), std::move(out), "abs", {x},
                             [sign_c](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{mul(gout, sign_c)};
                             });
}

Tensor exp(const Tensor& x) {
    check(x.defined(), "exp: undefined operand");
    return Tensor::op_result(x.shape(), map1(x, [](float v) { return std::exp(v); }), "exp",
                             {x}, [x](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{mul(gout, exp(x))};
                             });
}

Tensor log(const Tensor& x) {
    check(x.defined(), "log: undefined operand");
    return Tensor::op_result(x.shape(), map1(x, [](float v) { return std::log(v); }), "log",
                             {x}, [x](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{mul(gout, reciprocal(x))};
                             });
}

Tensor sqrt(const Tensor& x) {
    check(x.defined(), "sqrt: undefined operand");
    return Tensor::op_result(x.shape(), map1(x, [](float v) { return std::sqrt(v); }), "sqrt",
                             {x}, [x](const Tensor& gout, const std::vector<char>&) {
                                 Tensor half_inv = scale(reciprocal(sqrt(x)), 0.5f);
                                 return std::vector<Tensor>{mul(gout, half_inv)};
                             });
}

Tensor reciprocal(const Tensor& x) {
    check(x.defined(), "reciprocal: undefined operand");
    return Tensor::op_result(x.shape(), map1(x, [](float v) { return 1.0f / v; }),
                             "reciprocal", {x},
                             [x](const Tensor& gout, const std::vector<char>&) {
                                 Tensor r = reciprocal(x);
                                 return std::vector<Tensor>{neg(mul(gout, mul(r, r)))};
                             });
}

// -- reductions / broadcasts -----------------------------------------------------
// Reduction forwards accumulate in double and round once; each reduction's vjp
// is its partner broadcast (scaled for means), and vice versa, so arbitrarily
// deep differentiation stays closed under this op set.

Tensor sum_all(const Tensor& x) {
    check(x.defined(), "sum_all: undefined operand");
    double acc = 0.0;
    const float* src = x.data();
    for (int64_t i = 0; i < x.size(); ++i) acc += src[i];
    Shape in_shape = x.shape();
    return Tensor::op_result({1}, {static_cast<float>(acc)}, "sum_all", {x},
                             [in_shape](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{broadcast_scalar(gout, in_shape)};
                             });
}

Tensor mean_all(const Tensor& x) {
    check(x.defined() && x.size() > 0, "mean_all: undefined or empty operand");
    double acc = 0.0;
    const float* src = x.data();
    for (int64_t i = 0; i < x.size(); ++i) acc += src[i];
    const float inv_n = 1.0f / static_cast<float>(x.size());
    Shape in_shape = x.shape();
    return Tensor::op_result(
        {1}, {static_cast<float>(acc / static_cast<double>(x.size()))}, "mean_all", {x},
        [in_shape, inv_n](const Tensor& gout, const std::vector<char>&) {
            return std::vector<Tensor>{broadcast_scalar(scale(gout, inv_n), in_shape)};
        });
}

Tensor broadcast_scalar(const Tensor& s, Shape shape) {
    check(s.defined() && s.size() == 1, "broadcast_scalar: source must be a scalar");
    std::vector<float> out(static_cast<size_t>(numel(shape)), s.data()[0]);
    Shape s_shape = s.shape();
    return Tensor::op_result(std::move(shape), std::move(out), "broadcast_scalar", {s},
                             [s_shape](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{reshape(sum_all(gout), s_shape)};
                             });
}

Tensor sum_hw(const Tensor& x) {
    check_nchw(x, "sum_hw");
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), plane = h * w;
    std::vector<float> out(static_cast<size_t>(n * c));
    const float* src = x.data();
    for (int64_t nc = 0; nc < n * c; ++nc) {
        double acc = 0.0;
        const float* p = src + nc * plane;
        for (int64_t i = 0; i < plane; ++i) acc += p[i];
        out[static_cast<size_t>(nc)] = static_cast<float>(acc);
    }
    return Tensor::op_result({n, c, 1, 1}, std::move(out), "sum_hw", {x},
                             [h, w](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{broadcast_hw(gout, h, w)};
                             });
}

Tensor mean_hw(const Tensor& x) {
    check_nchw(x, "mean_hw");
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), plane = h * w;
    std::vector<float> out(static_cast<size_t>(n * c));
    const float* src = x.data();
    for (int64_t nc = 0; nc < n * c; ++nc) {
        double acc = 0.0;
        const float* p = src + nc * plane;
        for (int64_t i = 0; i < plane; ++i) acc += p[i];
        out[static_cast<size_t>(nc)] = static_cast<float>(acc / static_cast<double>(plane));
    }
    const float inv = 1.0f / static_cast<float>(plane);
    return Tensor::op_result(
        {n, c, 1, 1}, std::move(out), "mean_hw", {x},
        [h, w, inv](const Tensor& gout, const std::vector<char>&) {
            return std::vector<Tensor>{broadcast_hw(scale(gout, inv), h, w)};
        });
}

Tensor broadcast_hw(const Tensor& x, int64_t h, int64_t w) {
    check_nchw(x, "broadcast_hw");
    check(x.dim(2) == 1 && x.dim(3) == 1, "broadcast_hw: source must be [N,C,1,1], got ",
          shape_str(x.shape()));
    const int64_t n = x.dim(0), c = x.dim(1), plane = h * w;
    std::vector<float> out(static_cast<size_t>(n * c * plane));
    const float* src = x.data();
    for (int64_t nc = 0; nc < n * c; ++nc)
        std::fill_n(out.data() + nc * plane, plane, src[nc]);
    return Tensor::op_result({n, c, h, w}, std::move(out), "broadcast_hw", {x},
                             [](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{sum_hw(gout)};
                             });
}

Tensor sum_nhw(const Tensor& x) {
    check_nchw(x, "sum_nhw");
    const int64_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    std::vector<double> acc(static_cast<size_t>(c), 0.0);
    const float* src = x.data();
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            const float* p = src + (b * c + ch) * plane;
            double a = 0.0;
            for (int64_t i = 0; i < plane; ++i) a += p[i];
            acc[static_cast<size_t>(ch)] += a;
        }
    std::vector<float> out(static_cast<size_t>(c));
    for (int64_t ch = 0; ch < c; ++ch) out[ch] = static_cast<float>(acc[ch]);
    Shape in_shape = x.shape();
    return Tensor::op_result({c}, std::move(out), "sum_nhw", {x},
                             [in_shape](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{broadcast_c(gout, in_shape)};
                             });
}

Tensor broadcast_c(const Tensor& x, Shape shape) {
    check(x.defined() && x.rank() == 1, "broadcast_c: source must be 1-D, got ",
          x.defined() ? shape_str(x.shape()) : "<undef>");
    check(shape.size() == 4 && shape[1] == x.dim(0), "broadcast_c: {", x.dim(0),
          "} does not match target ", shape_str(shape));
    const int64_t n = shape[0], c = shape[1], plane = shape[2] * shape[3];
    std::vector<float> out(static_cast<size_t>(numel(shape)));
    const float* src = x.data();
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch)
            std::fill_n(out.data() + (b * c + ch) * plane, plane, src[ch]);
    return Tensor::op_result(std::move(shape), std::move(out), "broadcast_c", {x},
                             [](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{sum_nhw(gout)};
                             });
}

Tensor sum_c(const Tensor& x) {
    check_nchw(x, "sum_c");
    const int64_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    std::vector<float> out(static_cast<size_t>(n * plane));
    const float* src = x.data();
    for (int64_t b = 0; b < n; ++b)
        for (int64_t i = 0; i < plane; ++i) {
            double acc = 0.0;
            for (int64_t ch = 0; ch < c; ++ch) acc += src[(b * c + ch) * plane + i];
            out[static_cast<size_t>(b * plane + i)] = static_cast<float>(acc);
        }
    return Tensor::op_result({n, 1, x.dim(2), x.dim(3)}, std::move(out), "sum_c", {x},
                             [c](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{broadcast_cmap(gout, c)};
                             });
}

Tensor broadcast_cmap(const Tensor& x, int64_t c) {
    check_nchw(x, "broadcast_cmap");
    check(x.dim(1) == 1, "broadcast_cmap: source must be [N,1,H,W], got ",
          shape_str(x.shape()));
    const int64_t n = x.dim(0), plane = x.dim(2) * x.dim(3);
    std::vector<float> out(static_cast<size_t>(n * c * plane));
    const float* src = x.data();
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch)
            std::copy_n(src + b * plane, plane, out.data() + (b * c + ch) * plane);
    return Tensor::op_result({n, c, x.dim(2), x.dim(3)}, std::move(out), "broadcast_cmap",
                             {x}, [](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{sum_c(gout)};
                             });
}

Tensor sum_per_sample(const Tensor& x) {
    check(x.defined() && x.rank() >= 1, "sum_per_sample: undefined operand");
    const int64_t n = x.dim(0);
    const int64_t rest = x.size() / std::max<int64_t>(n, 1);
    check(n > 0, "sum_per_sample: empty batch");
    std::vector<float> out(static_cast<size_t>(n));
    const float* src = x.data();
    for (int64_t b = 0; b < n; ++b) {
        double acc = 0.0;
        const float* p = src + b * rest;
        for (int64_t i = 0; i < rest; ++i) acc += p[i];
        out[static_cast<size_t>(b)] = static_cast<float>(acc);
    }
    Shape in_shape = x.shape();
    return Tensor::op_result({n, 1, 1, 1}, std::move(out), "sum_per_sample", {x},
                             [in_shape](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{
                                     broadcast_per_sample(gout, in_shape)};
                             });
}

Tensor broadcast_per_sample(const Tensor& x, Shape shape) {
    check(x.defined() && x.rank() == 4 && x.dim(1) == 1 && x.dim(2) == 1 && x.dim(3) == 1,
          "broadcast_per_sample: source must be [N,1,1,1]");
    check(!shape.empty() && shape[0] == x.dim(0), "broadcast_per_sample: batch mismatch");
    const int64_t n = shape[0], rest = numel(shape) / n;
    std::vector<float> out(static_cast<size_t>(numel(shape)));
    const float* src = x.data();
    for (int64_t b = 0; b < n; ++b) std::fill_n(out.data() + b * rest, rest, src[b]);
    return Tensor::op_result(std::move(shape), std::move(out), "broadcast_per_sample", {x},
                             [](const Tensor& gout, const std::vector<char>&) {
                                 return std::vector<Tensor>{sum_per_sample(gout)};
                             });
}

// -- composites -----------------------------------------------------------------

Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
    check_nchw(x, "instance_norm");
    check(gamma.defined() && gamma.rank() == 1 && gamma.dim(0) == x.dim(1),
          "instance_norm: gamma must be {C}");
    check(beta.defined() && beta.shape() == gamma.shape(), "instance_norm: beta must be {C}");
    const int64_t h = x.dim(2), w = x.dim(3);
    Tensor xc = sub(x, broadcast_hw(mean_hw(x), h, w));
    Tensor var = mean_hw(mul(xc, xc));
    Tensor inv = reciprocal(sqrt(add_scalar(var, eps)));
    Tensor y = mul(xc, broadcast_hw(inv, h, w));
    return add(mul(y, broadcast_c(gamma, x.shape())), broadcast_c(beta, x.shape()));
}

Tensor l1_mean(const Tensor& a, const Tensor& b) { return mean_all(abs(sub(a, b))); }

Tensor mse_mean(const Tensor& a, const Tensor& b) {
    Tensor d = sub(a, b);
    return mean_all(mul(d, d));
}

Tensor l2_norm_per_sample(const Tensor& x, float eps) {
    return sqrt(add_scalar(sum_per_sample(mul(x, x)), eps));
}

Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& labels) {
    check(logits.defined() && (logits.rank() == 2 || logits.rank() == 4),
          "cross_entropy_logits: logits must be [N,K] or [N,K,1,1]");
    if (logits.rank() == 4)
        check(logits.dim(2) == 1 && logits.dim(3) == 1,
              "cross_entropy_logits: logits must be [N,K,1,1]");
    const int64_t n = logits.dim(0), k = logits.dim(1);
    check(static_cast<int64_t>(labels.size()) == n, "cross_entropy_logits: ", labels.size(),
          " labels for batch ", n);
    const float* src = logits.data();
    std::vector<float> dlogits(logits.vec().size());
    double total = 0.0;
    for (int64_t b = 0; b < n; ++b) {
        check(labels[b] >= 0 && labels[b] < k, "cross_entropy_logits: label ", labels[b],
              " out of range [0,", k, ")");
        const float* row = src + b * k;
        double m = row[0];
        for (int64_t j = 1; j < k; ++j) m = std::max<double>(m, row[j]);
        double z = 0.0;
        for (int64_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j]) - m);
        const double lse = m + std::log(z);
        total += lse - static_cast<double>(row[labels[b]]);
        for (int64_t j = 0; j < k; ++j) {
            double p = std::exp(static_cast<double>(row[j]) - lse);
            if (j == labels[b]) p -= 1.0;
            dlogits[static_cast<size_t>(b * k + j)] =
                static_cast<float>(p / static_cast<double>(n));
        }
    }
    Tensor dlogits_c = Tensor::from_data(logits.shape(), std::move(dlogits));
    Shape lshape = logits.shape();
    return Tensor::op_result(
        {1}, {static_cast<float>(total / static_cast<double>(n))}, "cross_entropy_logits",
        {logits}, [dlogits_c, lshape](const Tensor& gout, const std::vector<char>&) {
            return std::vector<Tensor>{mul(broadcast_scalar(gout, lshape), dlogits_c)};
        });
}

}  // namespace wavexp
