#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "uf/degrade.hpp"
#include "uf/net.hpp"
#include "uf/rng.hpp"

namespace uf {

struct TrainConfig {
    float learning_rate = 1e-3f;
    float momentum = 0.9f;
    int64_t batch_size = 8;
    int64_t iterations = 0;
    uint64_t seed = 0;
    int64_t patch_size = 200;
    int64_t checkpoint_every = 0;  // 0: no intermediate checkpoints
    int64_t log_every = 100;       // stderr progress cadence; the CSV gets every iteration
};

// One velocity buffer per learnable parameter; running stats are not
// optimizer state.
struct OptimizerState {
    std::vector<std::vector<float>> velocity;
};

OptimizerState make_optimizer_state(const Model& m);

// v <- momentum*v + g; p <- p - lr*v. Throws StateError when a learnable
// gradient is missing or non-finite.
void sgd_step(Model& m, OptimizerState& state, float lr, float momentum);

struct PairedDataset {
    std::vector<GrayImage> clean;
    std::vector<GrayImage> degraded;

    int64_t size() const { return static_cast<int64_t>(clean.size()); }

    // Reads clean_*/degraded_* pairs produced by build_dataset, sorted by
    // index; an optional [first, last) range selects a split.
    static PairedDataset load_dir(const std::filesystem::path& dir, int64_t first = 0,
                                  int64_t last = -1);
};

struct Batch {
    Tensor<float> input;   // degraded patches
    Tensor<float> target;  // clean patches, center-cropped to the output extents
};

// Samples pair indices and patch corners uniformly. The target patch is
// co-centered with the input patch and cropped to the network output size.
Batch make_batch(const PairedDataset& data, Rng& rng, int64_t patch_size, int64_t batch_size,
                 const NetworkConfig& config);

struct LossRecord {
    int64_t iteration;  // 1-based
    float loss;
};

struct TrainResult {
    std::vector<LossRecord> log;
};

using BatchProvider = std::function<Batch(int64_t iteration)>;

// Core loop: batch -> forward(train) -> MSE -> backward -> SGD step.
// Deterministic given the seed. Writes loss.csv and periodic checkpoints
// into out_dir when given. Aborts with StateError if the loss goes
// non-finite.
TrainResult train(Model& m, const BatchProvider& next_batch, const TrainConfig& cfg,
                  const std::filesystem::path* out_dir = nullptr);

TrainResult train(Model& m, const PairedDataset& data, const TrainConfig& cfg,
                  const std::filesystem::path* out_dir = nullptr);

void write_loss_csv(const std::vector<LossRecord>& log, const std::filesystem::path& path);

}  // namespace uf
