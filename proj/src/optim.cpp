#include "wavexp/optim.hpp"

#include <cmath>
#include <cstdio>

namespace wavexp {

bool Adam::step(ParamStore& ps, double lr_t) {
    const size_t n = ps.params.size();
    if (slots_.empty()) {
        slots_.resize(n);
        for (size_t i = 0; i < n; ++i) {
            const size_t sz = static_cast<size_t>(ps.params[i].tensor.size());
            slots_[i].m.assign(sz, 0.0f);
            slots_[i].v.assign(sz, 0.0f);
        }
    }
    check(slots_.size() == n, "Adam::step: store has ", n,
          " params, optimizer was initialized with ", slots_.size());

    // validate every gradient before touching anything
    for (size_t i = 0; i < n; ++i) {
        Tensor g = ps.params[i].tensor.grad();
        if (!g.defined()) continue;
        const float* gd = g.data();
        for (int64_t k = 0; k < g.size(); ++k)
            if (!std::isfinite(gd[k])) {
                ++rejected_;
                std::fprintf(stderr,
                             "adam: rejected step %lld, non-finite gradient "
                             "in %s[%lld]\n",
                             static_cast<long long>(steps_ + 1),
                             ps.params[i].name.c_str(),
                             static_cast<long long>(k));
                return false;
            }
    }

    ++steps_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (size_t i = 0; i < n; ++i) {
        Tensor& p = ps.params[i].tensor;
        Tensor g = p.grad();
        const float* gd = g.defined() ? g.data() : nullptr;
        float* pd = p.mutable_data();
        Moments& mo = slots_[i];
        check(static_cast<int64_t>(mo.m.size()) == p.size(),
              "Adam::step: parameter ", ps.params[i].name,
              " changed size under the optimizer");
        for (int64_t k = 0; k < p.size(); ++k) {
            const double gk = gd ? static_cast<double>(gd[k]) : 0.0;
            const double m = beta1_ * mo.m[static_cast<size_t>(k)] +
                             (1.0 - beta1_) * gk;
            const double v = beta2_ * mo.v[static_cast<size_t>(k)] +
                             (1.0 - beta2_) * gk * gk;
            mo.m[static_cast<size_t>(k)] = static_cast<float>(m);
            mo.v[static_cast<size_t>(k)] = static_cast<float>(v);
            pd[k] -= static_cast<float>(lr_t * (m / bc1) /
                                        (std::sqrt(v / bc2) + eps_));
        }
    }
    return true;
}

}  // namespace wavexp
