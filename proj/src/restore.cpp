#include "uf/restore.hpp"

#include <algorithm>

namespace uf {

namespace {

int64_t reflect(int64_t i, int64_t n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Smallest total padding whose traced output covers the source extent.
int64_t pad_for(const NetworkConfig& cfg, int64_t extent) {
    for (int64_t t = 0; t <= 512; ++t) {
        const ShapeTrace tr = trace_shapes(cfg, extent + t, extent + t);
        if (tr.ok && tr.output().h >= extent) return t;
    }
    throw DataError("no padding makes a " + std::to_string(extent) +
                    "px image coverable by this config");
}

}  // namespace

GrayImage restore_image(Model& m, const GrayImage& img, bool pad_input) {
    int64_t pad_h = 0, pad_w = 0;
    if (pad_input) {
        pad_h = pad_for(m.config, img.height);
        pad_w = pad_for(m.config, img.width);
    } else {
        const ShapeTrace tr = trace_shapes(m.config, img.height, img.width);
        if (!tr.ok)
            throw DataError("image " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + " is below the minimum input size " +
                            std::to_string(min_input_size(m.config)) + " (fails at " +
                            tr.fail_stage + ")");
    }
    const int64_t top = pad_h / 2, left = pad_w / 2;
    const int64_t ih = img.height + pad_h, iw = img.width + pad_w;

    Tensor<float> x{Shape{1, 1, ih, iw}};
    for (int64_t y = 0; y < ih; ++y)
        for (int64_t xx = 0; xx < iw; ++xx)
            x.at(0, 0, y, xx) = img.at(reflect(y - top, img.height), reflect(xx - left, img.width));

    Tensor<float> out = forward(m, static_cast<Tape<float>*>(nullptr), x, BNMode::eval);

    const int64_t oh = out.shape().h, ow = out.shape().w;
    int64_t keep_h = oh, keep_w = ow, oy = 0, ox = 0;
    if (pad_input) {
        keep_h = img.height;
        keep_w = img.width;
        oy = (oh - keep_h) / 2;
        ox = (ow - keep_w) / 2;
    }
    GrayImage res(keep_w, keep_h);
    for (int64_t y = 0; y < keep_h; ++y)
        for (int64_t xx = 0; xx < keep_w; ++xx)
            res.at(y, xx) = std::clamp(out.at(0, 0, oy + y, ox + xx), 0.f, 1.f);
    return res;
}

}  // namespace uf
