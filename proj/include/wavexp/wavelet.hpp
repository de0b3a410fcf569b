#pragma once

#include "wavexp/tensor.hpp"

namespace wavexp {

/// Single-level 2-D Haar decomposition of an NCHW tensor (even H and W).
/// Subband layout: ll is the 2x2 block average scaled by 2 (orthonormal
/// filters 1/sqrt(2) applied along each axis); hl carries horizontal detail
/// (differences along x), lh vertical detail, hh diagonal.
struct Subbands {
    Tensor ll, hl, lh, hh;  // each [N,C,H/2,W/2]
};

Subbands dwt2(const Tensor& x);

/// Exact inverse of dwt2 (orthonormal transform, so the adjoint is the
/// inverse up to float rounding).
Tensor idwt2(const Subbands& s);

/// idwt2 of the detail subbands only (ll replaced by zeros): the
/// high-frequency component of x at full resolution. x minus this is the
/// low-frequency component.
Tensor high_pass_reconstruct(const Tensor& x);

}  // namespace wavexp
