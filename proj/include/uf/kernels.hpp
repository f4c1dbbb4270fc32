#pragma once

#include "uf/conv.hpp"

// OpenMP-parallel convolution kernels. Work is split over independent output
// (or gradient) elements and every element is accumulated by exactly one
// thread in a fixed order, so results are identical for any thread count.
// The inner dot products in the reduction kernels use a fixed SIMD lane
// decomposition (omp simd reduction), which is deterministic per build.
namespace uf::kern {

// y = conv(x, w) + b. Overwrites y.
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, T* y, const ConvDims& dm);

// gx += w (*) gy, the transposed convolution of the output gradient.
template <typename T>
void conv2d_grad_input(T* gx, const T* w, const T* gy, const ConvDims& dm);

// gw[oc][ic][ky][kx] += sum over batch and output plane of gy * shifted x.
template <typename T>
void conv2d_grad_weight(const T* x, T* gw, const T* gy, const ConvDims& dm);

// gb[oc] += sum over batch and output plane of gy.
template <typename T>
void conv2d_grad_bias(T* gb, const T* gy, const ConvDims& dm);

}  // namespace uf::kern
