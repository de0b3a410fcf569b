#include "wavexp/wavelet.hpp"

#include "wavexp/ops.hpp"

namespace wavexp {

namespace {

// Orthonormal Haar analysis filters as one conv weight [4,1,2,2] over a
// single channel; synthesis uses the same coefficients as [Ci=4,Co=1,2,2].
// Row order: ll, hl, lh, hh.
Tensor haar_weight() {
    return Tensor::from_data({4, 1, 2, 2}, {
                                               0.5f, 0.5f, 0.5f, 0.5f,    // ll
                                               -0.5f, 0.5f, -0.5f, 0.5f,  // hl
                                               -0.5f, -0.5f, 0.5f, 0.5f,  // lh
                                               0.5f, -0.5f, -0.5f, 0.5f,  // hh
                                           });
}

void check_even(const Tensor& x, const char* op) {
    check(x.defined() && x.rank() == 4, op, ": expected NCHW tensor");
    check(x.dim(2) % 2 == 0 && x.dim(3) % 2 == 0, op, ": spatial dims must be even, got ",
          shape_str(x.shape()));
}

}  // namespace

Subbands dwt2(const Tensor& x) {
    check_even(x, "dwt2");
    const int64_t n = x.dim(0), c = x.dim(1), h2 = x.dim(2) / 2, w2 = x.dim(3) / 2;
    Tensor flat = reshape(x, {n * c, 1, x.dim(2), x.dim(3)});
    Tensor bands = conv2d(flat, haar_weight(), Tensor(), 2, 0);  // [N*C,4,H/2,W/2]
    auto band = [&](int64_t k) {
        return reshape(slice_channels(bands, k, k + 1), {n, c, h2, w2});
    };
    return Subbands{band(0), band(1), band(2), band(3)};
}

Tensor idwt2(const Subbands& s) {
    check(s.ll.defined() && s.hl.defined() && s.lh.defined() && s.hh.defined(),
          "idwt2: undefined subband");
    check(s.ll.shape() == s.hl.shape() && s.ll.shape() == s.lh.shape() &&
              s.ll.shape() == s.hh.shape(),
          "idwt2: subband shapes differ");
    check(s.ll.rank() == 4, "idwt2: subbands must be NCHW");
    const int64_t n = s.ll.dim(0), c = s.ll.dim(1), h2 = s.ll.dim(2), w2 = s.ll.dim(3);
    auto flat = [&](const Tensor& t) { return reshape(t, {n * c, 1, h2, w2}); };
    Tensor bands = concat_channels({flat(s.ll), flat(s.hl), flat(s.lh), flat(s.hh)});
    Tensor x = conv_transpose2d(bands, haar_weight(), Tensor(), 2, 0);  // [N*C,1,H,W]
    return reshape(x, {n, c, 2 * h2, 2 * w2});
}

Tensor high_pass_reconstruct(const Tensor& x) {
    Subbands s = dwt2(x);
    s.ll = Tensor::zeros(s.ll.shape());
    return idwt2(s);
}

}  // namespace wavexp
