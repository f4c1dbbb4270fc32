#include "uf/ref_kernels.hpp"

namespace uf::ref {

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, T* y, const ConvDims& dm) {
    const int64_t ksq = dm.k * dm.k;
    for (int64_t n = 0; n < dm.n; ++n)
        for (int64_t oc = 0; oc < dm.out_c; ++oc)
            for (int64_t oy = 0; oy < dm.out_h; ++oy)
                for (int64_t ox = 0; ox < dm.out_w; ++ox) {
                    T acc = b[oc];
                    for (int64_t ic = 0; ic < dm.in_c; ++ic)
                        for (int64_t ky = 0; ky < dm.k; ++ky)
                            for (int64_t kx = 0; kx < dm.k; ++kx) {
                                const int64_t iy = oy + ky * dm.d - dm.p;
                                const int64_t ix = ox + kx * dm.d - dm.p;
                                if (iy < 0 || iy >= dm.in_h || ix < 0 || ix >= dm.in_w) continue;
                                acc += w[(oc * dm.in_c + ic) * ksq + ky * dm.k + kx] *
                                       x[((n * dm.in_c + ic) * dm.in_h + iy) * dm.in_w + ix];
                            }
                    y[((n * dm.out_c + oc) * dm.out_h + oy) * dm.out_w + ox] = acc;
                }
}

template <typename T>
void conv2d_grad_input(T* gx, const T* w, const T* gy, const ConvDims& dm) {
    const int64_t ksq = dm.k * dm.k;
    for (int64_t n = 0; n < dm.n; ++n)
        for (int64_t ic = 0; ic < dm.in_c; ++ic)
            for (int64_t iy = 0; iy < dm.in_h; ++iy)
                for (int64_t ix = 0; ix < dm.in_w; ++ix) {
                    T acc = 0;
                    for (int64_t oc = 0; oc < dm.out_c; ++oc)
                        for (int64_t ky = 0; ky < dm.k; ++ky)
                            for (int64_t kx = 0; kx < dm.k; ++kx) {
                                const int64_t oy = iy - ky * dm.d + dm.p;
                                const int64_t ox = ix - kx * dm.d + dm.p;
                                if (oy < 0 || oy >= dm.out_h || ox < 0 || ox >= dm.out_w)
                                    continue;
                                acc += w[(oc * dm.in_c + ic) * ksq + ky * dm.k + kx] *
                                       gy[((n * dm.out_c + oc) * dm.out_h + oy) * dm.out_w + ox];
                            }
                    gx[((n * dm.in_c + ic) * dm.in_h + iy) * dm.in_w + ix] += acc;
                }
}

template <typename T>
void conv2d_grad_weight(const T* x, T* gw, const T* gy, const ConvDims& dm) {
    const int64_t ksq = dm.k * dm.k;
    for (int64_t oc = 0; oc < dm.out_c; ++oc)
        for (int64_t ic = 0; ic < dm.in_c; ++ic)
            for (int64_t ky = 0; ky < dm.k; ++ky)
                for (int64_t kx = 0; kx < dm.k; ++kx) {
                    T acc = 0;
                    for (int64_t n = 0; n < dm.n; ++n)
                        for (int64_t oy = 0; oy < dm.out_h; ++oy)
                            for (int64_t ox = 0; ox < dm.out_w; ++ox) {
                                const int64_t iy = oy + ky * dm.d - dm.p;
                                const int64_t ix = ox + kx * dm.d - dm.p;
                                if (iy < 0 || iy >= dm.in_h || ix < 0 || ix >= dm.in_w) continue;
                                acc += gy[((n * dm.out_c + oc) * dm.out_h + oy) * dm.out_w + ox] *
                                       x[((n * dm.in_c + ic) * dm.in_h + iy) * dm.in_w + ix];
                            }
                    gw[(oc * dm.in_c + ic) * ksq + ky * dm.k + kx] += acc;
                }
}

template <typename T>
void conv2d_grad_bias(T* gb, const T* gy, const ConvDims& dm) {
    for (int64_t oc = 0; oc < dm.out_c; ++oc) {
        T acc = 0;
        for (int64_t n = 0; n < dm.n; ++n)
            for (int64_t oy = 0; oy < dm.out_h; ++oy)
                for (int64_t ox = 0; ox < dm.out_w; ++ox)
                    acc += gy[((n * dm.out_c + oc) * dm.out_h + oy) * dm.out_w + ox];
        gb[oc] += acc;
    }
}

template void conv2d_forward<float>(const float*, const float*, const float*, float*,
                                    const ConvDims&);
template void conv2d_forward<double>(const double*, const double*, const double*, double*,
                                     const ConvDims&);
template void conv2d_grad_input<float>(float*, const float*, const float*, const ConvDims&);
template void conv2d_grad_input<double>(double*, const double*, const double*, const ConvDims&);
template void conv2d_grad_weight<float>(const float*, float*, const float*, const ConvDims&);
template void conv2d_grad_weight<double>(const double*, double*, const double*, const ConvDims&);
template void conv2d_grad_bias<float>(float*, const float*, const ConvDims&);
template void conv2d_grad_bias<double>(double*, const double*, const ConvDims&);

}  // namespace uf::ref
