#pragma once

#include "uf/conv.hpp"

// Naive single-threaded convolution, the reference the parallel kernels are
// tested and benchmarked against. Kept deliberately close to the textbook
// loop nest; do not optimize.
namespace uf::ref {

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, T* y, const ConvDims& dm);

template <typename T>
void conv2d_grad_input(T* gx, const T* w, const T* gy, const ConvDims& dm);

template <typename T>
void conv2d_grad_weight(const T* x, T* gw, const T* gy, const ConvDims& dm);

template <typename T>
void conv2d_grad_bias(T* gb, const T* gy, const ConvDims& dm);

}  // namespace uf::ref
