// Calibration probe for the procedural face renderer: prints per-coordinate
// extraction error statistics so geometry constants can be tuned.
#include <cmath>
#include <cstdio>

#include "wavexp/synthfaces.hpp"

using namespace wavexp;

int main() {
    const std::array<IdentityVec, 3> ids = {{{0.05f, 0.82f, 0.38f, 0.32f},
                                             {0.5f, 1.0f, 0.3f, 0.6f},
                                             {0.95f, 1.18f, 0.21f, 0.88f}}};
    const float levels[5] = {0.0f, 0.25f, 0.5f, 0.75f, 1.0f};
    double worst[kNumAu] = {};
    float worst_case[kNumAu][kNumAu] = {};
    int worst_idn[kNumAu] = {};
    for (size_t idn = 0; idn < ids.size(); ++idn)
        for (float a0 : levels)
            for (float a1 : levels)
                for (float a2 : levels)
                    for (float a3 : levels)
                        for (float a4 : levels) {
                            AuVec au{a0, a1, a2, a3, a4};
                            AuVec got = extract_au(render_face(ids[idn], au, 64));
                            for (int k = 0; k < kNumAu; ++k) {
                                double e = std::fabs(
                                    static_cast<double>(got[(size_t)k]) - au[(size_t)k]);
                                if (e > worst[k]) {
                                    worst[k] = e;
                                    for (int j = 0; j < kNumAu; ++j)
                                        worst_case[k][j] = au[(size_t)j];
                                    worst_idn[k] = static_cast<int>(idn);
                                }
                            }
                        }
    for (int k = 0; k < kNumAu; ++k) {
        std::printf("au%d worst %.5f at id=%d au=[", k, worst[k], worst_idn[k]);
        for (int j = 0; j < kNumAu; ++j)
            std::printf("%s%.2f", j ? "," : "", worst_case[k][j]);
        std::printf("]\n");
    }

    // identity sweep at a fixed expression
    Rng rng(311);
    double leak[kNumAu] = {};
    AuVec au{0.5f, 0.5f, 0.5f, 0.5f, 0.5f};
    for (int t = 0; t < 50; ++t) {
        IdentityVec id = sample_identity(rng);
        AuVec got = extract_au(render_face(id, au, 64));
        for (int k = 0; k < kNumAu; ++k)
            leak[k] = std::max(leak[k],
                               std::fabs(static_cast<double>(got[(size_t)k]) - 0.5));
    }
    std::printf("leak:");
    for (int k = 0; k < kNumAu; ++k) std::printf(" au%d=%.5f", k, leak[k]);
    std::printf("\n");

    // identity round-trip
    double idw[kNumIdentity] = {};
    for (int t = 0; t < 50; ++t) {
        IdentityVec id = sample_identity(rng);
        AuVec a = sample_au(rng);
        IdentityVec got = extract_identity(render_face(id, a, 64));
        for (int k = 0; k < kNumIdentity; ++k)
            idw[k] = std::max(idw[k], std::fabs(static_cast<double>(got[(size_t)k]) -
                                                id[(size_t)k]));
    }
    std::printf("identity:");
    for (int k = 0; k < kNumIdentity; ++k) std::printf(" p%d=%.5f", k, idw[k]);
    std::printf("\n");
    return 0;
}
