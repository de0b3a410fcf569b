#pragma once

#include <cstdint>
#include <vector>

#include "wavexp/net.hpp"

namespace wavexp {

/// Bias-corrected Adam over one ParamStore. Moment buffers are keyed by
/// parameter order and allocated on first use, so one instance must stay
/// with one store for its whole life.
class Adam {
  public:
    explicit Adam(double beta1 = 0.5, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// One update at learning rate lr_t. A parameter whose grad was never
    /// touched by the last backward counts as zero gradient. If any gradient
    /// entry is non-finite the whole step is rejected: nothing mutates, the
    /// rejection counter advances, and one line goes to stderr.
    bool step(ParamStore& ps, double lr_t);

    int64_t steps_taken() const { return steps_; }
    int64_t steps_rejected() const { return rejected_; }

  private:
    struct Moments {
        std::vector<float> m, v;
    };

    double beta1_, beta2_, eps_;
    int64_t steps_ = 0;
    int64_t rejected_ = 0;
    std::vector<Moments> slots_;
};

}  // namespace wavexp
