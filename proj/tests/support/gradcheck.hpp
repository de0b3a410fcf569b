#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "wavexp/ops.hpp"

// Central-difference gradient checking against backward(). The loss builder
// must rebuild its graph from the same leaf tensors on every call; leaves are
// perturbed in place between evaluations. The step is re-read from the float
// storage so quantization of x +/- h does not bias the quotient.
//
// Central differences are only valid where the loss is smooth on [x-h, x+h].
// Relu-style kinks inside a network break that locally: a coordinate whose
// perturbation crosses a kink measures the average of two slopes, not the
// derivative at x. Such coordinates are detected by the second difference
// |f(x+h)+f(x-h)-2f(x)|, which is O(h^2) on smooth stretches but O(h) across
// a kink, and are resampled. Skips are capped: a genuine vjp bug perturbs the
// quotient at generic coordinates, not just on the measure-zero kink set, so
// it cannot hide behind the cap.

namespace wavexp::testing {

struct GradCheckResult {
    double max_rel = 0.0;
    double worst_ad = 0.0;
    double worst_fd = 0.0;
    int64_t coords = 0;
    int64_t skipped_kinks = 0;
};

inline double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

inline GradCheckResult gradcheck(const std::function<Tensor()>& loss_fn,
                                 std::vector<Tensor> inputs, double h = 1e-3,
                                 int64_t max_coords_per_input = 40,
                                 uint64_t coord_seed = 0x5eed1e55u) {
    for (Tensor& t : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    Tensor loss0 = loss_fn();
    const double l0 = loss0.item();
    backward(loss0);
    GradCheckResult res;
    Rng rng(coord_seed);
    // No NoGradGuard here: losses may legitimately build second-order graphs
    // (grad_wrt with create_graph) during the finite-difference evaluations.
    for (Tensor& t : inputs) {
        Tensor g = t.grad();
        const int64_t want =
            std::min<int64_t>(t.size(), max_coords_per_input);
        const int64_t max_tries = want + std::max<int64_t>(8, want / 2);
        int64_t done = 0, tries = 0;
        float* d = t.mutable_data();
        while (done < want && tries < max_tries) {
            const int64_t c = t.size() <= max_coords_per_input
                                  ? tries % t.size()
                                  : static_cast<int64_t>(rng.next_index(t.size()));
            ++tries;
            const float saved = d[c];
            d[c] = static_cast<float>(saved + h);
            const double vp = d[c];
            const double lp = loss_fn().item();
            d[c] = static_cast<float>(saved - h);
            const double vm = d[c];
            const double lm = loss_fn().item();
            d[c] = saved;
            const double diff = lp - lm;
            // Central differences cancel even-order terms, so on a smooth
            // stretch |curv| ~ f''h^2 stays tiny; across a kink it jumps to
            // O(h). The floor keeps float32 evaluation noise from triggering
            // skips; the |diff| term scales with the local slope so only
            // crossings that would actually bias the quotient are rejected.
            const double curv = lp + lm - 2.0 * l0;
            if (std::fabs(curv) >
                1e-6 * std::max(1.0, std::fabs(l0)) + 5e-4 * std::fabs(diff)) {
                ++res.skipped_kinks;
                continue;
            }
            const double fd = diff / (vp - vm);
            const double ad = g.defined() ? g.data()[c] : 0.0;
            const double re = rel_err(ad, fd);
            if (re > res.max_rel) {
                res.max_rel = re;
                res.worst_ad = ad;
                res.worst_fd = fd;
            }
            ++res.coords;
            ++done;
        }
    }
    return res;
}

/// Plateau variant for deep float32 graphs, where no single step width works:
/// small steps drown the central quotient in forward rounding noise, large
/// ones cross activation kinks or pick up truncation. Each coordinate is
/// measured on a ladder of step widths and counts only when two adjacent
/// widths agree — an AD-independent signal that the quotient is a clean
/// reading of the true derivative (noise and truncation both move with h, so
/// they cannot agree across a doubling; a wrong VJP is constant in h, so an
/// agreeing pair can never hide one). The exception is a kink at distance
/// d < h from x: it biases every quotient by nearly the same amount,
/// (1 - d/h) * slope-jump / 2, and the bias crawls so slowly in h that two
/// adjacent widths can agree while still carrying it. Two gates close that
/// hole. The second difference — O(h) across a kink versus O(h^2) on a
/// smooth stretch — screens every ladder level. And agreement is demanded
/// across a window of three widths (a 4x span), which doubles the drift a
/// crawl must hide relative to a single doubling. Coordinates failing either
/// gate are skipped and resampled.
inline GradCheckResult gradcheck_plateau(
    const std::function<Tensor()>& loss_fn, std::vector<Tensor> inputs,
    const std::vector<double>& ladder = {1e-3, 2e-3, 4e-3, 8e-3},
    int64_t max_coords_per_input = 40, uint64_t coord_seed = 0x5eed1e55u) {
    for (Tensor& t : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    Tensor loss0 = loss_fn();
    const double l0 = loss0.item();
    backward(loss0);
    GradCheckResult res;
    Rng rng(coord_seed);
    for (Tensor& t : inputs) {
        Tensor g = t.grad();
        const int64_t want =
            std::min<int64_t>(t.size(), max_coords_per_input);
        const int64_t max_tries = want + std::max<int64_t>(16, 5 * want);
        int64_t done = 0, tries = 0;
        float* d = t.mutable_data();
        while (done < want && tries < max_tries) {
            const int64_t c = t.size() <= max_coords_per_input
                                  ? tries % t.size()
                                  : static_cast<int64_t>(rng.next_index(t.size()));
            ++tries;
            const float saved = d[c];
            std::vector<double> q;
            std::vector<bool> kinked;
            for (size_t k = 0; k < ladder.size(); ++k) {
                const double h = ladder[k];
                d[c] = static_cast<float>(saved + h);
                const double vp = d[c];
                const double lp = loss_fn().item();
                d[c] = static_cast<float>(saved - h);
                const double vm = d[c];
                const double lm = loss_fn().item();
                q.push_back((lp - lm) / (vp - vm));
                const double curv = lp + lm - 2.0 * l0;
                kinked.push_back(std::fabs(curv) >
                                 1e-6 * std::max(1.0, std::fabs(l0)) +
                                     5e-4 * std::fabs(lp - lm));
            }
            d[c] = saved;
            double fd = 0.0;
            bool stable = false;
            // widest window first: noise shrinks with h, so agreement high
            // on the ladder is trustworthy while small-h quotients can agree
            // by chance inside their own noise
            for (size_t i = q.size() - 1; i >= 2; --i) {
                if (kinked[i] || kinked[i - 1] || kinked[i - 2]) continue;
                const double lo = std::min({q[i], q[i - 1], q[i - 2]});
                const double hi = std::max({q[i], q[i - 1], q[i - 2]});
                if ((hi - lo) / std::max({1.0, std::fabs(lo), std::fabs(hi)}) <
                    1.25e-4) {
                    fd = (q[i] + q[i - 1] + q[i - 2]) / 3.0;
                    stable = true;
                    break;
                }
            }
            if (!stable) {
                ++res.skipped_kinks;
                continue;
            }
            const double ad = g.defined() ? g.data()[c] : 0.0;
            const double re = rel_err(ad, fd);
            if (re > res.max_rel) {
                res.max_rel = re;
                res.worst_ad = ad;
                res.worst_fd = fd;
            }
            ++res.coords;
            ++done;
        }
    }
    return res;
}

}  // namespace wavexp::testing
