#pragma once

#include <array>
#include <string>
#include <vector>

#include "wavexp/image.hpp"
#include "wavexp/rng.hpp"

namespace wavexp {

// Procedural face benchmark data. Every action-unit coordinate is rendered as
// a geometric quantity with a closed-form inverse, so the extractors below
// recover the generating parameters from pixels alone (no learned parts).
//
// identity = {hue in [0,1], aspect in [0.8,1.2],
//             eye_spacing in [0.2,0.4], tone in [0.3,0.9]}
// au       = {eye openness, lip-corner pull, mouth opening,
//             brow raise, cheek shading}, each in [0,1]

constexpr int kNumAu = 5;
constexpr int kNumIdentity = 4;

using AuVec = std::array<float, kNumAu>;
using IdentityVec = std::array<float, kNumIdentity>;

struct IdentityRange {
    float lo, hi;
};
constexpr std::array<IdentityRange, kNumIdentity> kIdentityRanges = {
    {{0.0f, 1.0f}, {0.8f, 1.2f}, {0.2f, 0.4f}, {0.3f, 0.9f}}};

Image render_face(const IdentityVec& identity, const AuVec& au, int size);

AuVec extract_au(const Image& img);
IdentityVec extract_identity(const Image& img);

IdentityVec sample_identity(Rng& rng);
AuVec sample_au(Rng& rng);

struct DatasetSpec {
    std::string dir;
    int n_identities = 100;
    int per_identity = 20;
    int image_size = 64;
    uint64_t seed = 7;
};

struct DatasetSample {
    std::string file;  // relative to the dataset dir
    AuVec au;
    IdentityVec identity;
    int id = 0;
};

// Writes dir/images/NNNNNN.png, dir/labels.jsonl and dir/dataset_manifest.json
// (counts, seed, and an fnv1a-64 digest over all emitted bytes).
std::vector<DatasetSample> generate_dataset(const DatasetSpec& spec);

std::vector<DatasetSample> load_labels(const std::string& dir);

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace wavexp
