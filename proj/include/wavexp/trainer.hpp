#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavexp/image.hpp"
#include "wavexp/losses.hpp"
#include "wavexp/optim.hpp"
#include "wavexp/synthfaces.hpp"

namespace wavexp {

struct TrainConfig {
    int64_t batch_size = 16;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    int64_t epochs = 20;
    int64_t decay_start_epoch = 11;  // full lr before this epoch, then linear
    int64_t critic_iters = 4;        // generator updates every n-th step
    LossWeights weights;
    ArchConfig arch;
    uint64_t seed = 7;

    void validate() const;
    static TrainConfig desk_preset();
    static TrainConfig paper_preset();
};

void to_json(nlohmann::json& j, const ArchConfig& a);
void from_json(const nlohmann::json& j, ArchConfig& a);
void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Learning rate for a 1-based epoch: cfg.lr through decay_start_epoch - 1,
/// then linear toward zero at epochs + 1 (the last epoch keeps one nonzero
/// fraction of lr).
double lr_at(int64_t epoch, const TrainConfig& cfg);

/// In-memory training corpus; rows stay aligned with the generator's
/// label order.
struct TrainSet {
    std::vector<Image> images;
    std::vector<AuVec> aus;
    std::vector<int> ids;

    int64_t size() const { return static_cast<int64_t>(images.size()); }
    /// Reads labels.jsonl and every referenced image under dir.
    static TrainSet load(const std::string& dir);
};

/// Batch assembly in label order: images to [N,C,S,S] in [-1,1], labels to
/// [N,n_au].
Tensor batch_images(const TrainSet& data, const std::vector<int64_t>& idx);
Tensor batch_aus(const TrainSet& data, const std::vector<int64_t>& idx);

struct TrainState {
    TrainConfig cfg;
    Generator gen;
    DiscriminatorI di;
    std::unique_ptr<DiscriminatorH> dh;  // null when the hf critic is ablated
    Adam g_opt, di_opt, dh_opt;
    int64_t step = 0;         // batches seen, persists across epochs
    int64_t epochs_done = 0;  // last completed epoch, for resuming

    explicit TrainState(const TrainConfig& cfg);
};

/// One pass over data: every step draws a batch and an independent batch of
/// target expressions, updates both critics, and every cfg.critic_iters-th
/// step also updates the generator. Returns one report per step; generator
/// columns are zero on critic-only steps. A non-finite loss aborts the epoch
/// with a diagnostic naming the step, seed and batch indices.
std::vector<LossReport> train_epoch(TrainState& st, const TrainSet& data,
                                    int64_t epoch);

/// Checkpoint directory: manifest.json (arch, config, step, tensor index)
/// plus params.bin (all parameters as little-endian 32-bit floats in index
/// order). Round-trips are byte-exact.
void save_checkpoint(const TrainState& st, const std::string& dir);

/// Rebuilds a state from dir. The stored arch must equal expected.arch field
/// for field (ablation switches included); any mismatch, unknown tensor name,
/// wrong shape or short blob is rejected with a diagnostic naming the first
/// offender.
TrainState load_checkpoint(const std::string& dir, const TrainConfig& expected);

/// Training configuration stored in a checkpoint's manifest, without
/// rebuilding the model — lets callers load a checkpoint they know nothing
/// about: load_checkpoint(dir, peek_checkpoint_config(dir)).
TrainConfig peek_checkpoint_config(const std::string& dir);

}  // namespace wavexp
