#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uf/ops.hpp"
#include "uf/tensor.hpp"

namespace uf {

enum class Fusion { concat, sum };

// The three ablation axes plus the fixed channel/kernel plan. The presets
// map onto the comparison rows: base = (same, d=1), nopad = (valid, d=1),
// ufinger = (valid, d=3).
struct NetworkConfig {
    int64_t scales = 3;
    int64_t dilation = 3;
    PadMode padding = PadMode::valid;
    Fusion fusion = Fusion::concat;
    std::array<int64_t, 4> enc_channels{128, 32, 32, 128};
    std::array<int64_t, 4> dec_channels{256, 64, 64, 256};
    std::array<int64_t, 4> kernel_plan{3, 1, 3, 1};

    void validate() const;

    static NetworkConfig preset(std::string_view name);  // base | nopad | ufinger
    std::string table_label() const;  // comparison-table row name for a preset
};

template <typename T>
struct Conv2dLayer {
    ConvSpec spec;
    Tensor<T> weight;  // [outC, inC, k, k]
    Tensor<T> bias;    // [outC]
};

template <typename T>
struct BatchNormLayer {
    Tensor<T> gamma, beta;                  // learned, per channel
    Tensor<T> running_mean, running_var;    // updated in train mode
    bool stats_ready = false;
};

// conv -> BN (+ ReLU applied by the caller where the block plan says so)
template <typename T>
struct ConvBN {
    Conv2dLayer<T> conv;
    BatchNormLayer<T> bn;
};

// One encoding/decoding module: a 3x3 conv followed by a 1x1/3x3/1x1
// bottleneck residual block.
template <typename T>
struct FeatureModule {
    ConvBN<T> c1;
    ConvBN<T> r1, r2, r3;
};

template <typename T>
struct ParamEntry {
    std::string name;
    Tensor<T> tensor;     // aliases the layer storage
    int serial_rank;      // 4 for conv weights, 1 for vectors
    bool learnable;       // false for running stats
};

template <typename T>
struct ModelT {
    NetworkConfig config;
    std::vector<FeatureModule<T>> enc;   // index = scale, 0 finest
    std::vector<FeatureModule<T>> dec;
    std::vector<Conv2dLayer<T>> proj;    // sum fusion only; proj[i] feeds dec[i], i < scales-1
    Conv2dLayer<T> head;                 // 1x1 linear output projection

    std::vector<ParamEntry<T>> params;   // deterministic enumeration order

    int64_t parameter_count() const;     // scalars, running stats included
    int64_t learnable_count() const;
    void zero_grads();
};

using Model = ModelT<float>;

// He-initialized model; the same seed reproduces every parameter byte.
template <typename T>
ModelT<T> build(const NetworkConfig& config, uint64_t seed);

template <typename T>
Tensor<T> encoding_forward(ModelT<T>& m, int64_t scale, Tape<T>* tape, const Tensor<T>& x,
                           BNMode mode);

// Fuses deep features with the same-scale skip (absent at the deepest
// scale), then runs the 4-conv pattern at decoder widths.
template <typename T>
Tensor<T> decoding_forward(ModelT<T>& m, int64_t scale, Tape<T>* tape, const Tensor<T>& deep,
                           const Tensor<T>* skip, BNMode mode);

template <typename T>
Tensor<T> forward(ModelT<T>& m, Tape<T>* tape, const Tensor<T>& image, BNMode mode);

// Pure shape walk mirroring forward stage by stage.
struct TraceStage {
    std::string name;
    int64_t channels;
    int64_t h, w;
};

struct ShapeTrace {
    std::vector<TraceStage> stages;
    bool ok = false;
    std::string fail_stage;
    std::string fail_reason;
    const TraceStage& output() const { return stages.back(); }
};

ShapeTrace trace_shapes(const NetworkConfig& config, int64_t h, int64_t w);

// Smallest square input the config accepts end to end.
int64_t min_input_size(const NetworkConfig& config);

// Output extent for a square input; throws ShapeError when the trace fails.
int64_t output_extent(const NetworkConfig& config, int64_t input_extent);

}  // namespace uf
