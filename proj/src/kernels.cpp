#include "uf/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>
#include <type_traits>
#include <memory>
#include <vector>

namespace uf::kern {

namespace {

constexpr int64_t kChanBlock = 4;  // output rows accumulated per pass

// ---------------------------------------------------------------------------
// Generic kernels (any scalar type; the double-precision path). Row-at-a-time
// accumulation into an L1-resident buffer; for each output element the taps
// are summed in ic -> ky -> kx order, matching the serial reference, so the
// result does not depend on the thread count.

template <typename T>
void generic_forward(const T* x, const T* w, const T* b, T* y, const ConvDims& dm) {
    const int64_t nblk = (dm.out_c + kChanBlock - 1) / kChanBlock;
    const int64_t ksq = dm.k * dm.k;
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < dm.n; ++n) {
        for (int64_t blk = 0; blk < nblk; ++blk) {
            const int64_t oc0 = blk * kChanBlock;
            const int64_t bs = std::min(kChanBlock, dm.out_c - oc0);
            std::vector<T> buf(static_cast<size_t>(bs * dm.out_w));
            const T* xn = x + n * dm.in_c * dm.in_h * dm.in_w;
            for (int64_t oy = 0; oy < dm.out_h; ++oy) {
                for (int64_t j = 0; j < bs; ++j)
                    std::fill_n(buf.data() + j * dm.out_w, dm.out_w, b[oc0 + j]);
                for (int64_t ic = 0; ic < dm.in_c; ++ic) {
                    const T* xc = xn + ic * dm.in_h * dm.in_w;
                    for (int64_t ky = 0; ky < dm.k; ++ky) {
                        const int64_t iy = oy + ky * dm.d - dm.p;
                        if (iy < 0 || iy >= dm.in_h) continue;
                        const T* xrow = xc + iy * dm.in_w;
                        for (int64_t kx = 0; kx < dm.k; ++kx) {
                            const int64_t shift = kx * dm.d - dm.p;
                            const int64_t x0 = std::max<int64_t>(0, -shift);
                            const int64_t x1 = std::min(dm.out_w, dm.in_w - shift);
                            if (x0 >= x1) continue;
                            const T* xs = xrow + shift;
                            for (int64_t j = 0; j < bs; ++j) {
                                const T wj = w[((oc0 + j) * dm.in_c + ic) * ksq + ky * dm.k + kx];
                                T* br = buf.data() + j * dm.out_w;
#pragma omp simd
                                for (int64_t ox = x0; ox < x1; ++ox) br[ox] += wj * xs[ox];
                            }
                        }
                    }
                }
                for (int64_t j = 0; j < bs; ++j) {
                    T* yrow = y + ((n * dm.out_c + oc0 + j) * dm.out_h + oy) * dm.out_w;
                    std::copy_n(buf.data() + j * dm.out_w, dm.out_w, yrow);
                }
            }
        }
    }
}

template <typename T>
void generic_grad_input(T* gx, const T* w, const T* gy, const ConvDims& dm) {
    const int64_t nblk = (dm.in_c + kChanBlock - 1) / kChanBlock;
    const int64_t ksq = dm.k * dm.k;
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < dm.n; ++n) {
        for (int64_t blk = 0; blk < nblk; ++blk) {
            const int64_t ic0 = blk * kChanBlock;
            const int64_t bs = std::min(kChanBlock, dm.in_c - ic0);
            std::vector<T> buf(static_cast<size_t>(bs * dm.in_w));
            const T* gyn = gy + n * dm.out_c * dm.out_h * dm.out_w;
            for (int64_t iy = 0; iy < dm.in_h; ++iy) {
                std::fill(buf.begin(), buf.end(), T(0));
                for (int64_t oc = 0; oc < dm.out_c; ++oc) {
                    const T* gyc = gyn + oc * dm.out_h * dm.out_w;
                    for (int64_t ky = 0; ky < dm.k; ++ky) {
                        const int64_t oy = iy - ky * dm.d + dm.p;
                        if (oy < 0 || oy >= dm.out_h) continue;
                        const T* gyrow = gyc + oy * dm.out_w;
                        for (int64_t kx = 0; kx < dm.k; ++kx) {
                            const int64_t shift = kx * dm.d - dm.p;  // ox = ix - shift
                            const int64_t x0 = std::max<int64_t>(0, shift);
                            const int64_t x1 = std::min(dm.in_w, dm.out_w + shift);
                            if (x0 >= x1) continue;
                            const T* gs = gyrow - shift;
                            for (int64_t j = 0; j < bs; ++j) {
                                const T wj = w[(oc * dm.in_c + ic0 + j) * ksq + ky * dm.k + kx];
                                T* br = buf.data() + j * dm.in_w;
#pragma omp simd
                                for (int64_t ix = x0; ix < x1; ++ix) br[ix] += wj * gs[ix];
                            }
                        }
                    }
                }
                for (int64_t j = 0; j < bs; ++j) {
                    T* gxrow = gx + ((n * dm.in_c + ic0 + j) * dm.in_h + iy) * dm.in_w;
                    const T* br = buf.data() + j * dm.in_w;
                    for (int64_t ix = 0; ix < dm.in_w; ++ix) gxrow[ix] += br[ix];
                }
            }
        }
    }
}

template <typename T>
void generic_grad_weight(const T* x, T* gw, const T* gy, const ConvDims& dm) {
    assert(dm.k <= 3);
    const int64_t ksq = dm.k * dm.k;
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t oc = 0; oc < dm.out_c; ++oc) {
        for (int64_t ic = 0; ic < dm.in_c; ++ic) {
            T acc[9] = {};
            for (int64_t n = 0; n < dm.n; ++n) {
                const T* xn = x + (n * dm.in_c + ic) * dm.in_h * dm.in_w;
                const T* gyn = gy + (n * dm.out_c + oc) * dm.out_h * dm.out_w;
                for (int64_t oy = 0; oy < dm.out_h; ++oy) {
                    const T* gyrow = gyn + oy * dm.out_w;
                    for (int64_t ky = 0; ky < dm.k; ++ky) {
                        const int64_t iy = oy + ky * dm.d - dm.p;
                        if (iy < 0 || iy >= dm.in_h) continue;
                        const T* xrow = xn + iy * dm.in_w;
                        for (int64_t kx = 0; kx < dm.k; ++kx) {
                            const int64_t shift = kx * dm.d - dm.p;
                            const int64_t x0 = std::max<int64_t>(0, -shift);
                            const int64_t x1 = std::min(dm.out_w, dm.in_w - shift);
                            if (x0 >= x1) continue;
                            const T* xs = xrow + shift;
                            T s = 0;
#pragma omp simd reduction(+ : s)
                            for (int64_t ox = x0; ox < x1; ++ox) s += gyrow[ox] * xs[ox];
                            acc[ky * dm.k + kx] += s;
                        }
                    }
                }
            }
            T* wt = gw + (oc * dm.in_c + ic) * ksq;
            for (int64_t t = 0; t < ksq; ++t) wt[t] += acc[t];
        }
    }
}

// ---------------------------------------------------------------------------
// Fast float kernels: output-stationary register tiles built on GCC vector
// extensions. Out-of-range lanes are zero-filled on load, which keeps one
// uniform code path for row edges, short rows and zero padding; a zero lane
// contributes exactly nothing to an FMA chain. Per output element the tap
// order is still ic -> ky -> kx with one SIMD lane per element, so results
// are thread-count invariant. The weight gradient folds its lane
// accumulators with a fixed-order horizontal sum (deterministic reduction).

constexpr int kVL = 16;  // floats per vector (one zmm or two ymm ops)
typedef float vf __attribute__((vector_size(kVL * sizeof(float))));

inline vf vload(const float* p) {
    vf v;
    __builtin_memcpy(&v, p, sizeof v);
    return v;
}
inline void vstore(float* p, vf v) { __builtin_memcpy(p, &v, sizeof v); }
inline vf vsplat(float s) {
    vf v;
    for (int i = 0; i < kVL; ++i) v[i] = s;
    return v;
}
inline float hsum(vf v) {
    float s = 0;
    for (int i = 0; i < kVL; ++i) s += v[i];
    return s;
}

__attribute__((noinline)) vf load_win_slow(const float* p, int64_t x0, int64_t limit) {
    alignas(64) float buf[kVL] = {};
    const int64_t a = std::max<int64_t>(0, x0);
    const int64_t b = std::min<int64_t>(limit, x0 + kVL);
    if (b > a) std::memcpy(buf + (a - x0), p + a, static_cast<size_t>(b - a) * sizeof(float));
    return vload(buf);
}

// Lanes [x0, x0 + kVL) of row p, zero where the index leaves [0, limit).
inline vf load_win(const float* p, int64_t x0, int64_t limit) {
    if (__builtin_expect(x0 >= 0 && x0 + kVL <= limit, 1)) return vload(p + x0);
    return load_win_slow(p, x0, limit);
}

// Tile of 2*kVL output columns starting at x0 for BS output channels.
// IN marks tiles whose every tap load is in bounds (no lane padding).
template <int BS, bool IN>
inline void fwd_tile(const float* xn, const float* w, const float* b, float* const yrow[BS],
                     const ConvDims& dm, int64_t oc0, const int64_t roff[3], int64_t x0) {
    const int64_t ksq = dm.k * dm.k;
    const int64_t plane = dm.in_h * dm.in_w;
    vf acc[BS][2];
    for (int j = 0; j < BS; ++j) acc[j][0] = acc[j][1] = vsplat(b[oc0 + j]);
    for (int64_t ic = 0; ic < dm.in_c; ++ic) {
        const float* xc = xn + ic * plane;
        for (int64_t ky = 0; ky < dm.k; ++ky) {
            if (roff[ky] < 0) continue;
            const float* xr = xc + roff[ky];
            for (int64_t kx = 0; kx < dm.k; ++kx) {
                const int64_t base = x0 + kx * dm.d - dm.p;
                const vf x0v = IN ? vload(xr + base) : load_win(xr, base, dm.in_w);
                const vf x1v = IN ? vload(xr + base + kVL) : load_win(xr, base + kVL, dm.in_w);
                for (int j = 0; j < BS; ++j) {
                    const float wj = w[((oc0 + j) * dm.in_c + ic) * ksq + ky * dm.k + kx];
                    acc[j][0] += wj * x0v;
                    acc[j][1] += wj * x1v;
                }
            }
        }
    }
    if (x0 + 2 * kVL <= dm.out_w) {
        for (int j = 0; j < BS; ++j) {
            vstore(yrow[j] + x0, acc[j][0]);
            vstore(yrow[j] + x0 + kVL, acc[j][1]);
        }
        return;
    }
    const int64_t n0 = std::min<int64_t>(kVL, dm.out_w - x0);
    const int64_t n1 = std::min<int64_t>(kVL, dm.out_w - x0 - kVL);
    for (int j = 0; j < BS; ++j) {
        std::memcpy(yrow[j] + x0, &acc[j][0], static_cast<size_t>(n0) * sizeof(float));
        if (n1 > 0)
            std::memcpy(yrow[j] + x0 + kVL, &acc[j][1], static_cast<size_t>(n1) * sizeof(float));
    }
}

void fast_forward(const float* x, const float* w, const float* b, float* y, const ConvDims& dm) {
    const int64_t nblk = (dm.out_c + kChanBlock - 1) / kChanBlock;
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < dm.n; ++n) {
        for (int64_t blk = 0; blk < nblk; ++blk) {
            const int64_t oc0 = blk * kChanBlock;
            const int64_t bs = std::min(kChanBlock, dm.out_c - oc0);
            const float* xn = x + n * dm.in_c * dm.in_h * dm.in_w;
            for (int64_t oy = 0; oy < dm.out_h; ++oy) {
                int64_t roff[3] = {-1, -1, -1};
                for (int64_t ky = 0; ky < dm.k; ++ky) {
                    const int64_t iy = oy + ky * dm.d - dm.p;
                    if (iy >= 0 && iy < dm.in_h) roff[ky] = iy * dm.in_w;
                }
                float* yr[4];
                for (int64_t j = 0; j < bs; ++j)
                    yr[j] = y + ((n * dm.out_c + oc0 + j) * dm.out_h + oy) * dm.out_w;
                auto tile = [&](int64_t x0) {
                    const bool in = x0 - dm.p >= 0 &&
                                    x0 + 2 * kVL + (dm.k - 1) * dm.d - dm.p <= dm.in_w;
                    if (in) {
                        switch (bs) {
                            case 4: fwd_tile<4, true>(xn, w, b, yr, dm, oc0, roff, x0); break;
                            case 3: fwd_tile<3, true>(xn, w, b, yr, dm, oc0, roff, x0); break;
                            case 2: fwd_tile<2, true>(xn, w, b, yr, dm, oc0, roff, x0); break;
                            default: fwd_tile<1, true>(xn, w, b, yr, dm, oc0, roff, x0); break;
                        }
                    } else {
                        switch (bs) {
                            case 4: fwd_tile<4, false>(xn, w, b, yr, dm, oc0, roff, x0); break;
                            case 3: fwd_tile<3, false>(xn, w, b, yr, dm, oc0, roff, x0); break;
                            case 2: fwd_tile<2, false>(xn, w, b, yr, dm, oc0, roff, x0); break;
                            default: fwd_tile<1, false>(xn, w, b, yr, dm, oc0, roff, x0); break;
                        }
                    }
                };
                // full tiles, then one overlapped full tile for the tail
                // (stores recompute values, they never accumulate)
                int64_t x0 = 0;
                for (; x0 + 2 * kVL <= dm.out_w; x0 += 2 * kVL) tile(x0);
                if (x0 < dm.out_w) tile(dm.out_w >= 2 * kVL ? dm.out_w - 2 * kVL : x0);
            }
        }
    }
}

// Input-gradient tile: read-modify-write over 2*kVL input columns. Reads
// come from a zero-padded copy of the output gradient, so every tap load is
// unconditional.
template <int BS>
inline void dgrad_tile(float* const gxr[BS], const float* w, const float* pg, const ConvDims& dm,
                       int64_t ic0, const int64_t roff[3], int64_t pw, int64_t hp, int64_t x0) {
    const int64_t ksq = dm.k * dm.k;
    const int64_t oplane = dm.out_h * pw;
    const bool full = x0 + 2 * kVL <= dm.in_w;
    vf acc[BS][2];
    for (int j = 0; j < BS; ++j) {
        acc[j][0] = full ? vload(gxr[j] + x0) : load_win(gxr[j], x0, dm.in_w);
        acc[j][1] = full ? vload(gxr[j] + x0 + kVL) : load_win(gxr[j], x0 + kVL, dm.in_w);
    }
    for (int64_t oc = 0; oc < dm.out_c; ++oc) {
        const float* gyc = pg + oc * oplane;
        for (int64_t ky = 0; ky < dm.k; ++ky) {
            if (roff[ky] < 0) continue;
            const float* gr = gyc + roff[ky] + hp + dm.p;
            for (int64_t kx = 0; kx < dm.k; ++kx) {
                const float* base = gr + x0 - kx * dm.d;
                const vf g0 = vload(base);
                const vf g1 = vload(base + kVL);
                for (int j = 0; j < BS; ++j) {
                    const float wj = w[(oc * dm.in_c + ic0 + j) * ksq + ky * dm.k + kx];
                    acc[j][0] += wj * g0;
                    acc[j][1] += wj * g1;
                }
            }
        }
    }
    if (full) {
        for (int j = 0; j < BS; ++j) {
            vstore(gxr[j] + x0, acc[j][0]);
            vstore(gxr[j] + x0 + kVL, acc[j][1]);
        }
        return;
    }
    const int64_t n0 = std::min<int64_t>(kVL, dm.in_w - x0);
    const int64_t n1 = std::min<int64_t>(kVL, dm.in_w - x0 - kVL);
    for (int j = 0; j < BS; ++j) {
        std::memcpy(gxr[j] + x0, &acc[j][0], static_cast<size_t>(n0) * sizeof(float));
        if (n1 > 0)
            std::memcpy(gxr[j] + x0 + kVL, &acc[j][1], static_cast<size_t>(n1) * sizeof(float));
    }
}

void fast_grad_input(float* gx, const float* w, const float* gy, const ConvDims& dm) {
    // zero-padded output gradient: hp columns of margin on the left, and
    // enough on the right that a full tile can always load
    const int64_t hp = std::max<int64_t>(0, (dm.k - 1) * dm.d - dm.p);
    const int64_t pw = hp + dm.out_w + hp + 2 * kVL;
    auto pg = std::make_unique_for_overwrite<float[]>(
        static_cast<size_t>(dm.n * dm.out_c * dm.out_h * pw));
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t nc = 0; nc < dm.n * dm.out_c; ++nc)
        for (int64_t oy = 0; oy < dm.out_h; ++oy) {
            float* row = pg.get() + (nc * dm.out_h + oy) * pw;
            std::memset(row, 0, static_cast<size_t>(hp) * sizeof(float));
            std::memcpy(row + hp, gy + (nc * dm.out_h + oy) * dm.out_w,
                        static_cast<size_t>(dm.out_w) * sizeof(float));
            std::memset(row + hp + dm.out_w, 0,
                        static_cast<size_t>(pw - hp - dm.out_w) * sizeof(float));
        }

    const int64_t nblk = (dm.in_c + kChanBlock - 1) / kChanBlock;
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t n = 0; n < dm.n; ++n) {
        for (int64_t blk = 0; blk < nblk; ++blk) {
            const int64_t ic0 = blk * kChanBlock;
            const int64_t bs = std::min(kChanBlock, dm.in_c - ic0);
            const float* pgn = pg.get() + n * dm.out_c * dm.out_h * pw;
            for (int64_t iy = 0; iy < dm.in_h; ++iy) {
                int64_t roff[3] = {-1, -1, -1};
                for (int64_t ky = 0; ky < dm.k; ++ky) {
                    const int64_t oy = iy - ky * dm.d + dm.p;
                    if (oy >= 0 && oy < dm.out_h) roff[ky] = oy * pw;
                }
                float* gxr[4];
                for (int64_t j = 0; j < bs; ++j)
                    gxr[j] = gx + ((n * dm.in_c + ic0 + j) * dm.in_h + iy) * dm.in_w;
                for (int64_t x0 = 0; x0 < dm.in_w; x0 += 2 * kVL) {
                    switch (bs) {
                        case 4: dgrad_tile<4>(gxr, w, pgn, dm, ic0, roff, pw, hp, x0); break;
                        case 3: dgrad_tile<3>(gxr, w, pgn, dm, ic0, roff, pw, hp, x0); break;
                        case 2: dgrad_tile<2>(gxr, w, pgn, dm, ic0, roff, pw, hp, x0); break;
                        default: dgrad_tile<1>(gxr, w, pgn, dm, ic0, roff, pw, hp, x0); break;
                    }
                }
            }
        }
    }
}

// All k*k taps for BS output channels and one input channel, accumulated in
// a single pass over the output planes. Both operands come from zero-padded
// copies, so tap loads are unconditional; padded lanes contribute zero.
template <int BS>
void wgrad_pair(const float* px, float* gw, const float* pgy, const ConvDims& dm, int64_t pxw,
                int64_t pgw, int64_t oc0, int64_t ic) {
    const int64_t ksq = dm.k * dm.k;
    vf acc[BS][9];
    for (int j = 0; j < BS; ++j)
        for (int64_t t = 0; t < ksq; ++t) acc[j][t] = vsplat(0.f);

    for (int64_t n = 0; n < dm.n; ++n) {
        const float* xn = px + (n * dm.in_c + ic) * dm.in_h * pxw;
        const float* gyb = pgy + n * dm.out_c * dm.out_h * pgw;
        for (int64_t oy = 0; oy < dm.out_h; ++oy) {
            const float* gyr[BS];
            for (int j = 0; j < BS; ++j)
                gyr[j] = gyb + (oc0 + j) * dm.out_h * pgw + oy * pgw;
            int64_t roff[3] = {-1, -1, -1};
            for (int64_t ky = 0; ky < dm.k; ++ky) {
                const int64_t iy = oy + ky * dm.d - dm.p;
                if (iy >= 0 && iy < dm.in_h) roff[ky] = iy * pxw;
            }
            for (int64_t x0 = 0; x0 < dm.out_w; x0 += kVL) {
                vf gv[BS];
                for (int j = 0; j < BS; ++j) gv[j] = vload(gyr[j] + x0);
                for (int64_t ky = 0; ky < dm.k; ++ky) {
                    if (roff[ky] < 0) continue;
                    const float* xr = xn + roff[ky] + x0;  // padded by p on the left
                    for (int64_t kx = 0; kx < dm.k; ++kx) {
                        const vf xv = vload(xr + kx * dm.d);
                        for (int j = 0; j < BS; ++j) acc[j][ky * dm.k + kx] += gv[j] * xv;
                    }
                }
            }
        }
    }
    for (int j = 0; j < BS; ++j)
        for (int64_t t = 0; t < ksq; ++t)
            gw[((oc0 + j) * dm.in_c + ic) * ksq + t] += hsum(acc[j][t]);
}

void fast_grad_weight(const float* x, float* gw, const float* gy, const ConvDims& dm) {
    // pad gy on the right so kVL tiles always load, and x by p on the left
    // plus a tile margin on the right
    const int64_t pgw = dm.out_w + kVL;
    auto pgy = std::make_unique_for_overwrite<float[]>(
        static_cast<size_t>(dm.n * dm.out_c * dm.out_h * pgw));
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t nc = 0; nc < dm.n * dm.out_c; ++nc)
        for (int64_t oy = 0; oy < dm.out_h; ++oy) {
            float* row = pgy.get() + (nc * dm.out_h + oy) * pgw;
            std::memcpy(row, gy + (nc * dm.out_h + oy) * dm.out_w,
                        static_cast<size_t>(dm.out_w) * sizeof(float));
            std::memset(row + dm.out_w, 0, static_cast<size_t>(kVL) * sizeof(float));
        }

    const int64_t pxw = dm.p + dm.in_w + dm.p + kVL;
    auto px = std::make_unique_for_overwrite<float[]>(
        static_cast<size_t>(dm.n * dm.in_c * dm.in_h * pxw));
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t nc = 0; nc < dm.n * dm.in_c; ++nc)
        for (int64_t iy = 0; iy < dm.in_h; ++iy) {
            float* row = px.get() + (nc * dm.in_h + iy) * pxw;
            std::memset(row, 0, static_cast<size_t>(dm.p) * sizeof(float));
            std::memcpy(row + dm.p, x + (nc * dm.in_h + iy) * dm.in_w,
                        static_cast<size_t>(dm.in_w) * sizeof(float));
            std::memset(row + dm.p + dm.in_w, 0,
                        static_cast<size_t>(dm.p + kVL) * sizeof(float));
        }

    constexpr int64_t OCB = 4;
    const int64_t nblk = (dm.out_c + OCB - 1) / OCB;
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t blk = 0; blk < nblk; ++blk) {
        for (int64_t ic = 0; ic < dm.in_c; ++ic) {
            const int64_t oc0 = blk * OCB;
            switch (dm.out_c - oc0 >= OCB ? OCB : dm.out_c - oc0) {
                case 4: wgrad_pair<4>(px.get(), gw, pgy.get(), dm, pxw, pgw, oc0, ic); break;
                case 3: wgrad_pair<3>(px.get(), gw, pgy.get(), dm, pxw, pgw, oc0, ic); break;
                case 2: wgrad_pair<2>(px.get(), gw, pgy.get(), dm, pxw, pgw, oc0, ic); break;
                default: wgrad_pair<1>(px.get(), gw, pgy.get(), dm, pxw, pgw, oc0, ic); break;
            }
        }
    }
}

}  // namespace

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, T* y, const ConvDims& dm) {
    if constexpr (std::is_same_v<T, float>) {
        if (dm.k <= 3) {
            fast_forward(x, w, b, y, dm);
            return;
        }
    }
    generic_forward(x, w, b, y, dm);
}

template <typename T>
void conv2d_grad_input(T* gx, const T* w, const T* gy, const ConvDims& dm) {
    if constexpr (std::is_same_v<T, float>) {
        // the padded copy of gy only pays off when many input channels reuse it
        if (dm.k <= 3 && dm.in_c >= 8) {
            fast_grad_input(gx, w, gy, dm);
            return;
        }
    }
    generic_grad_input(gx, w, gy, dm);
}

template <typename T>
void conv2d_grad_weight(const T* x, T* gw, const T* gy, const ConvDims& dm) {
    if constexpr (std::is_same_v<T, float>) {
        if (dm.k <= 3) {
            fast_grad_weight(x, gw, gy, dm);
            return;
        }
    }
    generic_grad_weight(x, gw, gy, dm);
}

template <typename T>
void conv2d_grad_bias(T* gb, const T* gy, const ConvDims& dm) {
#pragma omp parallel for schedule(static)
    for (int64_t oc = 0; oc < dm.out_c; ++oc) {
        T a = 0;
        for (int64_t n = 0; n < dm.n; ++n) {
            const T* gyn = gy + (n * dm.out_c + oc) * dm.out_h * dm.out_w;
            for (int64_t oy = 0; oy < dm.out_h; ++oy) {
                const T* gyrow = gyn + oy * dm.out_w;
                T s = 0;
#pragma omp simd reduction(+ : s)
                for (int64_t ox = 0; ox < dm.out_w; ++ox) s += gyrow[ox];
                a += s;
            }
        }
        gb[oc] += a;
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

}  // namespace uf::kern
