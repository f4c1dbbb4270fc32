#include "uf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "uf/kernels.hpp"

namespace uf {

namespace {

template <typename T>
bool wants_grad(Tape<T>* tape, std::initializer_list<const Tensor<T>*> inputs) {
    if (!tape) return false;
    for (const Tensor<T>* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

template <typename T>
const T* out_grad(const Tensor<T>& y) {
    return y.grad_allocated() ? y.storage()->grad.data() : nullptr;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const ConvSpec& spec) {
    const Shape& ws = w.shape();
    if (ws.n != spec.out_channels || ws.c != spec.in_channels || ws.h != spec.kernel ||
        ws.w != spec.kernel)
        throw ShapeError("conv2d weight shape " + ws.str() + " does not match spec [" +
                         std::to_string(spec.out_channels) + "," + std::to_string(spec.in_channels) +
                         "," + std::to_string(spec.kernel) + "," + std::to_string(spec.kernel) + "]");
    if (b.numel() != spec.out_channels)
        throw ShapeError("conv2d bias has " + std::to_string(b.numel()) + " entries, expected " +
                         std::to_string(spec.out_channels));
    const ConvDims dm = conv_dims(x.shape(), spec);
    Tensor<T> y{Shape{dm.n, dm.out_c, dm.out_h, dm.out_w}};
    kern::conv2d_forward(x.data(), w.data(), b.data(), y.data(), dm);
    if (wants_grad(tape, {&x, &w, &b})) {
        y.set_requires_grad(true);
        tape->record(y, [x, w, b, y, dm]() mutable {
            const T* gy = out_grad(y);
            if (!gy) return;
            if (x.requires_grad()) kern::conv2d_grad_input(x.grad_data(), w.data(), gy, dm);
            if (w.requires_grad()) kern::conv2d_grad_weight(x.data(), w.grad_data(), gy, dm);
            if (b.requires_grad()) kern::conv2d_grad_bias(b.grad_data(), gy, dm);
        });
    }
    return y;
}

template <typename T>
Tensor<T> batchnorm2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                      bool stats_ready, BNMode mode, T momentum, T eps) {
    const Shape s = x.shape();
    const int64_t C = s.c;
    const int64_t plane = s.plane();
    const int64_t m = s.n * plane;
    if (gamma.numel() != C || beta.numel() != C || running_mean.numel() != C ||
        running_var.numel() != C)
        throw ShapeError("batchnorm parameter length does not match " + std::to_string(C) +
                         " channels");

    std::vector<T> mean(static_cast<size_t>(C)), invstd(static_cast<size_t>(C));
    if (mode == BNMode::train) {
        if (m < 2)
            throw ShapeError("batchnorm train mode needs N*H*W >= 2 per channel, got " +
                             std::to_string(m));
        std::vector<T> var(static_cast<size_t>(C));
        const T* xd = x.data();
#pragma omp parallel for schedule(static)
        for (int64_t c = 0; c < C; ++c) {
            T sum = 0;
            for (int64_t n = 0; n < s.n; ++n) {
                const T* xp = xd + (n * C + c) * plane;
                T rs = 0;
#pragma omp simd reduction(+ : rs)
                for (int64_t i = 0; i < plane; ++i) rs += xp[i];
                sum += rs;
            }
            const T mu = sum / static_cast<T>(m);
            T vsum = 0;
            for (int64_t n = 0; n < s.n; ++n) {
                const T* xp = xd + (n * C + c) * plane;
                T rs = 0;
#pragma omp simd reduction(+ : rs)
                for (int64_t i = 0; i < plane; ++i) rs += (xp[i] - mu) * (xp[i] - mu);
                vsum += rs;
            }
            mean[c] = mu;
            var[c] = std::max(vsum / static_cast<T>(m), T(0));
            invstd[c] = T(1) / std::sqrt(var[c] + eps);
        }
        T* rm = running_mean.data();
        T* rv = running_var.data();
        for (int64_t c = 0; c < C; ++c) {
            rm[c] = (T(1) - momentum) * rm[c] + momentum * mean[c];
            rv[c] = (T(1) - momentum) * rv[c] + momentum * var[c];
        }
    } else {
        if (!stats_ready)
            throw StateError("batchnorm eval mode invoked before any running-stat update");
        for (int64_t c = 0; c < C; ++c) {
            mean[c] = running_mean.data()[c];
            invstd[c] = T(1) / std::sqrt(running_var.data()[c] + eps);
        }
    }

    Tensor<T> y{s};
    {
        const T* xd = x.data();
        T* yd = y.data();
        const T* g = gamma.data();
        const T* be = beta.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t n = 0; n < s.n; ++n)
            for (int64_t c = 0; c < C; ++c) {
                const T a = g[c] * invstd[c];
                const T off = be[c] - mean[c] * a;
                const T* xp = xd + (n * C + c) * plane;
                T* yp = yd + (n * C + c) * plane;
#pragma omp simd
                for (int64_t i = 0; i < plane; ++i) yp[i] = a * xp[i] + off;
            }
    }

    if (wants_grad(tape, {&x, &gamma, &beta})) {
        y.set_requires_grad(true);
        const bool train = mode == BNMode::train;
        tape->record(y, [x, gamma, beta, y, s, C, plane, m, mean, invstd, train]() mutable {
            const T* gy = out_grad(y);
            if (!gy) return;
            const T* xd = x.data();
            const T* g = gamma.data();
            T* gx = x.requires_grad() ? x.grad_data() : nullptr;
            T* gg = gamma.requires_grad() ? gamma.grad_data() : nullptr;
            T* gb = beta.requires_grad() ? beta.grad_data() : nullptr;
#pragma omp parallel for schedule(static)
            for (int64_t c = 0; c < C; ++c) {
                const T mu = mean[c];
                const T is = invstd[c];
                T s1 = 0, s2 = 0;
                for (int64_t n = 0; n < s.n; ++n) {
                    const T* gp = gy + (n * C + c) * plane;
                    const T* xp = xd + (n * C + c) * plane;
                    T r1 = 0, r2 = 0;
#pragma omp simd reduction(+ : r1, r2)
                    for (int64_t i = 0; i < plane; ++i) {
                        r1 += gp[i];
                        r2 += gp[i] * (xp[i] - mu) * is;
                    }
                    s1 += r1;
                    s2 += r2;
                }
                if (gg) gg[c] += s2;
                if (gb) gb[c] += s1;
                if (gx) {
                    const T a = g[c] * is;
                    if (train) {
                        const T c1 = s1 / static_cast<T>(m);
                        const T c2 = s2 / static_cast<T>(m);
                        for (int64_t n = 0; n < s.n; ++n) {
                            const T* gp = gy + (n * C + c) * plane;
                            const T* xp = xd + (n * C + c) * plane;
                            T* gxp = gx + (n * C + c) * plane;
#pragma omp simd
                            for (int64_t i = 0; i < plane; ++i)
                                gxp[i] += a * (gp[i] - c1 - (xp[i] - mu) * is * c2);
                        }
                    } else {
                        for (int64_t n = 0; n < s.n; ++n) {
                            const T* gp = gy + (n * C + c) * plane;
                            T* gxp = gx + (n * C + c) * plane;
#pragma omp simd
                            for (int64_t i = 0; i < plane; ++i) gxp[i] += a * gp[i];
                        }
                    }
                }
            }
        });
    }
    return y;
}

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x) {
    Tensor<T> y{x.shape()};
    const T* xd = x.data();
    T* yd = y.data();
    const int64_t n = x.numel();
#pragma omp parallel for simd schedule(static)
    for (int64_t i = 0; i < n; ++i) yd[i] = xd[i] > T(0) ? xd[i] : T(0);
    if (wants_grad(tape, {&x})) {
        y.set_requires_grad(true);
        tape->record(y, [x, y, n]() mutable {
            const T* gy = out_grad(y);
            if (!gy || !x.requires_grad()) return;
            const T* yd = y.data();
            T* gx = x.grad_data();
#pragma omp parallel for simd schedule(static)
            for (int64_t i = 0; i < n; ++i) gx[i] += yd[i] > T(0) ? gy[i] : T(0);
        });
    }
    return y;
}

template <typename T>
Tensor<T> maxpool2x2(Tape<T>* tape, const Tensor<T>& x) {
    const Shape s = x.shape();
    if (s.h < 2 || s.w < 2)
        throw ShapeError("maxpool2x2 needs spatial extents >= 2, got " + s.str());
    const int64_t oh = s.h / 2;
    const int64_t ow = s.w / 2;
    Tensor<T> y{Shape{s.n, s.c, oh, ow}};
    auto idx = std::make_shared<std::vector<int32_t>>(static_cast<size_t>(y.numel()));
    const T* xd = x.data();
    T* yd = y.data();
    int32_t* id = idx->data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < s.c; ++c) {
            const T* xp = xd + (n * s.c + c) * s.plane();
            T* yp = yd + (n * s.c + c) * oh * ow;
            int32_t* ip = id + (n * s.c + c) * oh * ow;
            for (int64_t oy = 0; oy < oh; ++oy)
                for (int64_t ox = 0; ox < ow; ++ox) {
                    T best = xp[(2 * oy) * s.w + 2 * ox];
                    int32_t bi = static_cast<int32_t>((2 * oy) * s.w + 2 * ox);
                    // first occurrence in row-major order wins ties
                    for (int64_t dy = 0; dy < 2; ++dy)
                        for (int64_t dx = 0; dx < 2; ++dx) {
                            const int64_t fi = (2 * oy + dy) * s.w + 2 * ox + dx;
                            if (xp[fi] > best) {
                                best = xp[fi];
                                bi = static_cast<int32_t>(fi);
                            }
                        }
                    yp[oy * ow + ox] = best;
                    ip[oy * ow + ox] = bi;
                }
        }
    if (wants_grad(tape, {&x})) {
        y.set_requires_grad(true);
        tape->record(y, [x, y, idx, s, oh, ow]() mutable {
            const T* gy = out_grad(y);
            if (!gy || !x.requires_grad()) return;
            T* gx = x.grad_data();
            const int32_t* id = idx->data();
#pragma omp parallel for collapse(2) schedule(static)
            for (int64_t n = 0; n < s.n; ++n)
                for (int64_t c = 0; c < s.c; ++c) {
                    T* gxp = gx + (n * s.c + c) * s.plane();
                    const T* gyp = gy + (n * s.c + c) * oh * ow;
                    const int32_t* ip = id + (n * s.c + c) * oh * ow;
                    for (int64_t i = 0; i < oh * ow; ++i) gxp[ip[i]] += gyp[i];
                }
        });
    }
    return y;
}

template <typename T>
Tensor<T> upsample_nearest2x(Tape<T>* tape, const Tensor<T>& x) {
    const Shape s = x.shape();
    const int64_t oh = 2 * s.h;
    const int64_t ow = 2 * s.w;
    Tensor<T> y{Shape{s.n, s.c, oh, ow}};
    const T* xd = x.data();
    T* yd = y.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < s.c; ++c) {
            const T* xp = xd + (n * s.c + c) * s.plane();
            T* yp = yd + (n * s.c + c) * oh * ow;
            for (int64_t iy = 0; iy < s.h; ++iy)
                for (int64_t ix = 0; ix < s.w; ++ix) {
                    const T v = xp[iy * s.w + ix];
                    T* q = yp + (2 * iy) * ow + 2 * ix;
                    q[0] = v;
                    q[1] = v;
                    q[ow] = v;
                    q[ow + 1] = v;
                }
        }
    if (wants_grad(tape, {&x})) {
        y.set_requires_grad(true);
        tape->record(y, [x, y, s, oh, ow]() mutable {
            const T* gy = out_grad(y);
            if (!gy || !x.requires_grad()) return;
            T* gx = x.grad_data();
#pragma omp parallel for collapse(2) schedule(static)
            for (int64_t n = 0; n < s.n; ++n)
                for (int64_t c = 0; c < s.c; ++c) {
                    T* gxp = gx + (n * s.c + c) * s.plane();
                    const T* gyp = gy + (n * s.c + c) * oh * ow;
                    for (int64_t iy = 0; iy < s.h; ++iy)
                        for (int64_t ix = 0; ix < s.w; ++ix) {
                            const T* q = gyp + (2 * iy) * ow + 2 * ix;
                            gxp[iy * s.w + ix] += q[0] + q[1] + q[ow] + q[ow + 1];
                        }
                }
        });
    }
    return y;
}

template <typename T>
Tensor<T> concat_channels(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    const Shape sa = a.shape(), sb = b.shape();
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
        throw ShapeError("concat_channels needs matching batch and spatial extents, got " +
                         sa.str() + " vs " + sb.str());
    Tensor<T> y{Shape{sa.n, sa.c + sb.c, sa.h, sa.w}};
    const int64_t plane = sa.plane();
    T* yd = y.data();
    for (int64_t n = 0; n < sa.n; ++n) {
        std::copy_n(a.data() + n * sa.c * plane, sa.c * plane,
                    yd + n * (sa.c + sb.c) * plane);
        std::copy_n(b.data() + n * sb.c * plane, sb.c * plane,
                    yd + (n * (sa.c + sb.c) + sa.c) * plane);
    }
    if (wants_grad(tape, {&a, &b})) {
        y.set_requires_grad(true);
        tape->record(y, [a, b, y, sa, sb, plane]() mutable {
            const T* gy = out_grad(y);
            if (!gy) return;
            for (int64_t n = 0; n < sa.n; ++n) {
                const T* gn = gy + n * (sa.c + sb.c) * plane;
                if (a.requires_grad()) {
                    T* ga = a.grad_data() + n * sa.c * plane;
                    for (int64_t i = 0; i < sa.c * plane; ++i) ga[i] += gn[i];
                }
                if (b.requires_grad()) {
                    T* gb = b.grad_data() + n * sb.c * plane;
                    const T* gs = gn + sa.c * plane;
                    for (int64_t i = 0; i < sb.c * plane; ++i) gb[i] += gs[i];
                }
            }
        });
    }
    return y;
}

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    if (!(a.shape() == b.shape()))
        throw ShapeError("add needs identical shapes, got " + a.shape().str() + " vs " +
                         b.shape().str());
    Tensor<T> y{a.shape()};
    const T* ad = a.data();
    const T* bd = b.data();
    T* yd = y.data();
    const int64_t n = y.numel();
#pragma omp parallel for simd schedule(static)
    for (int64_t i = 0; i < n; ++i) yd[i] = ad[i] + bd[i];
    if (wants_grad(tape, {&a, &b})) {
        y.set_requires_grad(true);
        tape->record(y, [a, b, y, n]() mutable {
            const T* gy = out_grad(y);
            if (!gy) return;
            if (a.requires_grad()) {
                T* ga = a.grad_data();
#pragma omp parallel for simd schedule(static)
                for (int64_t i = 0; i < n; ++i) ga[i] += gy[i];
            }
            if (b.requires_grad()) {
                T* gb = b.grad_data();
#pragma omp parallel for simd schedule(static)
                for (int64_t i = 0; i < n; ++i) gb[i] += gy[i];
            }
        });
    }
    return y;
}

template <typename T>
Tensor<T> center_crop(Tape<T>* tape, const Tensor<T>& x, int64_t target_h, int64_t target_w) {
    const Shape s = x.shape();
    if (target_h < 1 || target_w < 1 || target_h > s.h || target_w > s.w)
        throw ShapeError("center_crop target " + std::to_string(target_h) + "x" +
                         std::to_string(target_w) + " exceeds source " + s.str());
    const int64_t top = (s.h - target_h) / 2;
    const int64_t left = (s.w - target_w) / 2;
    Tensor<T> y{Shape{s.n, s.c, target_h, target_w}};
    const T* xd = x.data();
    T* yd = y.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < s.c; ++c) {
            const T* xp = xd + (n * s.c + c) * s.plane();
            T* yp = yd + (n * s.c + c) * target_h * target_w;
            for (int64_t ty = 0; ty < target_h; ++ty)
                std::copy_n(xp + (top + ty) * s.w + left, target_w, yp + ty * target_w);
        }
    if (wants_grad(tape, {&x})) {
        y.set_requires_grad(true);
        tape->record(y, [x, y, s, target_h, target_w, top, left]() mutable {
            const T* gy = out_grad(y);
            if (!gy || !x.requires_grad()) return;
            T* gx = x.grad_data();
#pragma omp parallel for collapse(2) schedule(static)
            for (int64_t n = 0; n < s.n; ++n)
                for (int64_t c = 0; c < s.c; ++c) {
                    T* gxp = gx + (n * s.c + c) * s.plane();
                    const T* gyp = gy + (n * s.c + c) * target_h * target_w;
                    for (int64_t ty = 0; ty < target_h; ++ty) {
                        T* dst = gxp + (top + ty) * s.w + left;
                        const T* src = gyp + ty * target_w;
                        for (int64_t tx = 0; tx < target_w; ++tx) dst[tx] += src[tx];
                    }
                }
        });
    }
    return y;
}

template <typename T>
Tensor<T> mse_loss(Tape<T>* tape, const Tensor<T>& pred, const Tensor<T>& target) {
    if (!(pred.shape() == target.shape()))
        throw ShapeError("mse_loss needs identical shapes, got " + pred.shape().str() + " vs " +
                         target.shape().str());
    const int64_t n = pred.numel();
    const T* pd = pred.data();
    const T* td = target.data();
    T acc = 0;
#pragma omp simd reduction(+ : acc)
    for (int64_t i = 0; i < n; ++i) acc += (pd[i] - td[i]) * (pd[i] - td[i]);
    Tensor<T> loss = Tensor<T>::scalar(acc / static_cast<T>(n));
    if (wants_grad(tape, {&pred, &target})) {
        loss.set_requires_grad(true);
        tape->record(loss, [pred, target, loss, n]() mutable {
            const T* gl = out_grad(loss);
            if (!gl) return;
            const T coef = T(2) * gl[0] / static_cast<T>(n);
            const T* pd = pred.data();
            const T* td = target.data();
            if (pred.requires_grad()) {
                T* gp = pred.grad_data();
#pragma omp parallel for simd schedule(static)
                for (int64_t i = 0; i < n; ++i) gp[i] += coef * (pd[i] - td[i]);
            }
            if (target.requires_grad()) {
                T* gt = target.grad_data();
#pragma omp parallel for simd schedule(static)
                for (int64_t i = 0; i < n; ++i) gt[i] -= coef * (pd[i] - td[i]);
            }
        });
    }
    return loss;
}

template <typename T>
Tensor<T> sum_all(Tape<T>* tape, const Tensor<T>& x) {
    const int64_t n = x.numel();
    const T* xd = x.data();
    T acc = 0;
#pragma omp simd reduction(+ : acc)
    for (int64_t i = 0; i < n; ++i) acc += xd[i];
    Tensor<T> out = Tensor<T>::scalar(acc);
    if (wants_grad(tape, {&x})) {
        out.set_requires_grad(true);
        tape->record(out, [x, out, n]() mutable {
            const T* gl = out_grad(out);
            if (!gl || !x.requires_grad()) return;
            T* gx = x.grad_data();
            const T g = gl[0];
#pragma omp parallel for simd schedule(static)
            for (int64_t i = 0; i < n; ++i) gx[i] += g;
        });
    }
    return out;
}

#define UF_INSTANTIATE_OPS(T)                                                                     \
    template Tensor<T> conv2d<T>(Tape<T>*, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                 const ConvSpec&);                                                \
    template Tensor<T> batchnorm2d<T>(Tape<T>*, const Tensor<T>&, const Tensor<T>&,              \
                                      const Tensor<T>&, Tensor<T>&, Tensor<T>&, bool, BNMode, T, \
                                      T);                                                         \
    template Tensor<T> relu<T>(Tape<T>*, const Tensor<T>&);                                      \
    template Tensor<T> maxpool2x2<T>(Tape<T>*, const Tensor<T>&);                                \
    template Tensor<T> upsample_nearest2x<T>(Tape<T>*, const Tensor<T>&);                        \
    template Tensor<T> concat_channels<T>(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
    template Tensor<T> add<T>(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                     \
    template Tensor<T> center_crop<T>(Tape<T>*, const Tensor<T>&, int64_t, int64_t);             \
    template Tensor<T> mse_loss<T>(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                \
    template Tensor<T> sum_all<T>(Tape<T>*, const Tensor<T>&);

UF_INSTANTIATE_OPS(float)
UF_INSTANTIATE_OPS(double)

#undef UF_INSTANTIATE_OPS

}  // namespace uf
