#pragma once

#include <cstdint>

#include "uf/errors.hpp"
#include "uf/tensor.hpp"

namespace uf {

enum class PadMode { valid, same };

// Geometry of a stride-1 square convolution. Dilation widens the sampled
// window to d*(k-1)+1 pixels without adding taps.
struct ConvSpec {
    int64_t in_channels = 1;
    int64_t out_channels = 1;
    int64_t kernel = 3;
    int64_t dilation = 1;
    PadMode pad = PadMode::valid;

    int64_t extent() const { return dilation * (kernel - 1) + 1; }

    // Per-side zero padding. Same mode needs d*(k-1) even, which holds for
    // the k in {1,3} used here.
    int64_t pad_amount() const {
        if (pad == PadMode::valid) return 0;
        if ((dilation * (kernel - 1)) % 2 != 0)
            throw ShapeError("same padding requires even d*(k-1)");
        return dilation * (kernel - 1) / 2;
    }
};

// Resolved loop bounds for one convolution call.
struct ConvDims {
    int64_t n, in_c, in_h, in_w;
    int64_t out_c, out_h, out_w;
    int64_t k, d, p;
};

inline ConvDims conv_dims(const Shape& x, const ConvSpec& spec) {
    if (x.c != spec.in_channels)
        throw ShapeError("conv2d channel mismatch: input has " + std::to_string(x.c) +
                         ", spec expects " + std::to_string(spec.in_channels));
    const int64_t p = spec.pad_amount();
    const int64_t shrink = spec.dilation * (spec.kernel - 1);
    const int64_t oh = x.h + 2 * p - shrink;
    const int64_t ow = x.w + 2 * p - shrink;
    if (oh < 1 || ow < 1)
        throw ShapeError("conv2d output would be " + std::to_string(oh) + "x" +
                         std::to_string(ow) + " for input " + x.str() + " (kernel extent " +
                         std::to_string(spec.extent()) + ")");
    return ConvDims{x.n, x.c, x.h, x.w, spec.out_channels, oh, ow, spec.kernel, spec.dilation, p};
}

}  // namespace uf
