#pragma once

#include <cstdint>
#include <vector>

// Straight-loop convolution references, evaluated in double. Deliberately
// share no code with the GEMM path so they can serve as oracles for it.

namespace wavexp::testing {

inline std::vector<float> naive_conv2d(const std::vector<float>& x, int64_t n, int64_t ci,
                                       int64_t h, int64_t w, const std::vector<float>& wt,
                                       int64_t co, int64_t kh, int64_t kw,
                                       const std::vector<float>& bias, int64_t s, int64_t p) {
    const int64_t ho = (h + 2 * p - kh) / s + 1;
    const int64_t wo = (w + 2 * p - kw) / s + 1;
    std::vector<float> out(static_cast<size_t>(n * co * ho * wo));
    for (int64_t b = 0; b < n; ++b)
        for (int64_t oc = 0; oc < co; ++oc)
            for (int64_t i = 0; i < ho; ++i)
                for (int64_t j = 0; j < wo; ++j) {
                    double acc = bias.empty() ? 0.0 : bias[oc];
                    for (int64_t ic = 0; ic < ci; ++ic)
                        for (int64_t ki = 0; ki < kh; ++ki)
                            for (int64_t kj = 0; kj < kw; ++kj) {
                                const int64_t hi = i * s - p + ki;
                                const int64_t wi = j * s - p + kj;
                                if (hi < 0 || hi >= h || wi < 0 || wi >= w) continue;
                                acc += static_cast<double>(
                                           x[((b * ci + ic) * h + hi) * w + wi]) *
                                       wt[((oc * ci + ic) * kh + ki) * kw + kj];
                            }
                    out[((b * co + oc) * ho + i) * wo + j] = static_cast<float>(acc);
                }
    return out;
}

inline std::vector<float> naive_conv_transpose2d(const std::vector<float>& x, int64_t n,
                                                 int64_t ci, int64_t h, int64_t w,
                                                 const std::vector<float>& wt, int64_t co,
                                                 int64_t kh, int64_t kw,
                                                 const std::vector<float>& bias, int64_t s,
                                                 int64_t p) {
    const int64_t ho = (h - 1) * s - 2 * p + kh;
    const int64_t wo = (w - 1) * s - 2 * p + kw;
    std::vector<double> acc(static_cast<size_t>(n * co * ho * wo), 0.0);
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ic = 0; ic < ci; ++ic)
            for (int64_t i = 0; i < h; ++i)
                for (int64_t j = 0; j < w; ++j) {
                    const double v = x[((b * ci + ic) * h + i) * w + j];
                    for (int64_t oc = 0; oc < co; ++oc)
                        for (int64_t ki = 0; ki < kh; ++ki)
                            for (int64_t kj = 0; kj < kw; ++kj) {
                                const int64_t hi = i * s - p + ki;
                                const int64_t wi = j * s - p + kj;
                                if (hi < 0 || hi >= ho || wi < 0 || wi >= wo) continue;
                                acc[((b * co + oc) * ho + hi) * wo + wi] +=
                                    v * wt[((ic * co + oc) * kh + ki) * kw + kj];
                            }
                }
    std::vector<float> out(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) {
        const int64_t oc = (static_cast<int64_t>(i) / (ho * wo)) % co;
        out[i] = static_cast<float>(acc[i] + (bias.empty() ? 0.0 : bias[oc]));
    }
    return out;
}

}  // namespace wavexp::testing
