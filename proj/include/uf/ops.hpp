#pragma once

#include "uf/conv.hpp"
#include "uf/tensor.hpp"

// Forward operations with reverse-mode rules. Passing a null tape skips
// recording (inference); gradients are only tracked when a tape is given and
// at least one input requires them.
namespace uf {

enum class BNMode { train, eval };

template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const ConvSpec& spec);

// Spatial batch normalization. Train mode normalizes by the biased batch
// statistics over N*H*W and folds them into the running estimates with
// momentum 0.1; eval mode applies the running estimates, which must have
// been initialized (stats_ready).
template <typename T>
Tensor<T> batchnorm2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                      bool stats_ready, BNMode mode, T momentum = T(0.1), T eps = T(1e-5));

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x);

// Non-overlapping 2x2 windows, stride 2; odd trailing row/column dropped.
// Gradient routes to the first max position in row-major order.
template <typename T>
Tensor<T> maxpool2x2(Tape<T>* tape, const Tensor<T>& x);

template <typename T>
Tensor<T> upsample_nearest2x(Tape<T>* tape, const Tensor<T>& x);

template <typename T>
Tensor<T> concat_channels(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

// Removes floor(diff/2) rows/cols at the top/left and the remainder at the
// bottom/right.
template <typename T>
Tensor<T> center_crop(Tape<T>* tape, const Tensor<T>& x, int64_t target_h, int64_t target_w);

template <typename T>
Tensor<T> mse_loss(Tape<T>* tape, const Tensor<T>& pred, const Tensor<T>& target);

template <typename T>
Tensor<T> sum_all(Tape<T>* tape, const Tensor<T>& x);

}  // namespace uf
