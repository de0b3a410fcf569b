#pragma once

#include <vector>

#include "wavexp/rng.hpp"
#include "wavexp/tensor.hpp"

// Differentiable ops over float32 tensors. Dense 4-D activations use NCHW;
// 1-D tensors hold biases / per-channel affine params. Every vjp is itself
// built from these ops, so gradients can be differentiated again (needed for
// the gradient-penalty term). Reduction/broadcast ops come in adjoint pairs.

namespace wavexp {

// -- creation ---------------------------------------------------------------
Tensor randn(const Shape& shape, Rng& rng, float mean = 0.0f, float stddev = 1.0f);
Tensor rand_uniform(const Shape& shape, Rng& rng, float lo, float hi);

// -- structure --------------------------------------------------------------
Tensor reshape(const Tensor& x, Shape shape);
Tensor detach(const Tensor& x);
Tensor concat_channels(const std::vector<Tensor>& xs);
Tensor slice_channels(const Tensor& x, int64_t c_begin, int64_t c_end);

// -- elementwise ------------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, float s);
Tensor add_scalar(const Tensor& x, float s);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, float negative_slope);
Tensor tanh(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor reciprocal(const Tensor& x);

// -- reductions and their adjoint broadcasts ---------------------------------
Tensor sum_all(const Tensor& x);                          // -> {1}
Tensor mean_all(const Tensor& x);                         // -> {1}
Tensor broadcast_scalar(const Tensor& s, Shape shape);    // {1} -> shape
Tensor sum_hw(const Tensor& x);                           // [N,C,H,W] -> [N,C,1,1]
Tensor mean_hw(const Tensor& x);                          // [N,C,H,W] -> [N,C,1,1]
Tensor broadcast_hw(const Tensor& x, int64_t h, int64_t w);
Tensor sum_nhw(const Tensor& x);                          // [N,C,H,W] -> {C}
Tensor broadcast_c(const Tensor& x, Shape shape);         // {C} -> [N,C,H,W]
Tensor sum_c(const Tensor& x);                            // [N,C,H,W] -> [N,1,H,W]
Tensor broadcast_cmap(const Tensor& x, int64_t c);        // [N,1,H,W] -> [N,C,H,W]
Tensor sum_per_sample(const Tensor& x);                   // [N,...] -> [N,1,1,1]
Tensor broadcast_per_sample(const Tensor& x, Shape shape);

// -- convolution ------------------------------------------------------------
// conv2d:            x [N,Ci,H,W], w [Co,Ci,kh,kw], bias {Co} or undefined.
// conv_transpose2d:  x [N,Ci,H,W], w [Ci,Co,kh,kw], bias {Co} or undefined;
//                    output H = (H-1)*stride - 2*pad + kh.
// conv2d_weight_grad: gradient of conv2d w.r.t. its weight; appears only as
//                    the terminal step of a backward pass, so it has no vjp.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride,
              int64_t pad);
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride,
                        int64_t pad);
Tensor conv2d_weight_grad(const Tensor& x, const Tensor& gout, int64_t kh, int64_t kw,
                          int64_t stride, int64_t pad);

// -- composites ---------------------------------------------------------------
// Per-sample, per-channel normalization over H*W with learned affine
// (gamma/beta are {C}). A spatially constant channel normalizes to exactly
// beta: the centered values are exact zeros regardless of eps.
Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                     float eps = 1e-5f);
Tensor l1_mean(const Tensor& a, const Tensor& b);
Tensor mse_mean(const Tensor& a, const Tensor& b);
// sqrt(sum over non-batch dims of x^2 + eps), shape [N,1,1,1].
Tensor l2_norm_per_sample(const Tensor& x, float eps = 1e-12f);
// Mean cross entropy of softmax(logits) vs integer labels; logits [N,K] (or
// [N,K,1,1]). Stable log-sum-exp forward; closed-form first-order vjp.
Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& labels);

}  // namespace wavexp
