#include "uf/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace uf {

namespace {

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

// Mirror index into [0, n): ...2,1,0 | 0,1,2... (edge repeated)
int64_t reflect(int64_t i, int64_t n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

GrayImage blur(const GrayImage& img, double sigma) {
    if (sigma < 0) throw ConfigError("blur sigma must be >= 0");
    if (sigma == 0) return img;
    const int64_t r = static_cast<int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<size_t>(2 * r + 1));
    double sum = 0;
    for (int64_t i = -r; i <= r; ++i) {
        k[static_cast<size_t>(i + r)] = std::exp(-(double)(i * i) / (2.0 * sigma * sigma));
        sum += k[static_cast<size_t>(i + r)];
    }
    for (double& v : k) v /= sum;

    GrayImage tmp(img.width, img.height);
    for (int64_t y = 0; y < img.height; ++y)
        for (int64_t x = 0; x < img.width; ++x) {
            double acc = 0;
            for (int64_t i = -r; i <= r; ++i)
                acc += k[static_cast<size_t>(i + r)] * img.at(y, reflect(x + i, img.width));
            tmp.at(y, x) = static_cast<float>(acc);
        }
    GrayImage out(img.width, img.height);
    for (int64_t y = 0; y < img.height; ++y)
        for (int64_t x = 0; x < img.width; ++x) {
            double acc = 0;
            for (int64_t i = -r; i <= r; ++i)
                acc += k[static_cast<size_t>(i + r)] * tmp.at(reflect(y + i, img.height), x);
            out.at(y, x) = clamp01(acc);
        }
    return out;
}

GrayImage occlude(const GrayImage& img, const OcclusionStep& st) {
    if (st.count < 0 || st.min_size < 1 || st.max_size < st.min_size)
        throw ConfigError("bad occlusion parameters");
    GrayImage out = img;
    Rng rng(st.seed);
    for (int64_t i = 0; i < st.count; ++i) {
        const int64_t rw = std::min(st.min_size + rng.uniform_index(st.max_size - st.min_size + 1),
                                    img.width);
        const int64_t rh = std::min(st.min_size + rng.uniform_index(st.max_size - st.min_size + 1),
                                    img.height);
        const int64_t x0 = rng.uniform_index(img.width - rw + 1);
        const int64_t y0 = rng.uniform_index(img.height - rh + 1);
        for (int64_t y = y0; y < y0 + rh; ++y)
            for (int64_t x = x0; x < x0 + rw; ++x) out.at(y, x) = clamp01(st.fill);
    }
    return out;
}

GrayImage scratch(const GrayImage& img, const ScratchStep& st) {
    if (st.count < 0 || st.width <= 0) throw ConfigError("bad scratch parameters");
    GrayImage out = img;
    Rng rng(st.seed);
    const double half = st.width / 2.0;
    for (int64_t i = 0; i < st.count; ++i) {
        const double x0 = rng.uniform(0, static_cast<double>(img.width - 1));
        const double y0 = rng.uniform(0, static_cast<double>(img.height - 1));
        const double x1 = rng.uniform(0, static_cast<double>(img.width - 1));
        const double y1 = rng.uniform(0, static_cast<double>(img.height - 1));
        const int64_t bx0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(std::min(x0, x1) - half)));
        const int64_t bx1 = std::min(img.width - 1, static_cast<int64_t>(std::ceil(std::max(x0, x1) + half)));
        const int64_t by0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(std::min(y0, y1) - half)));
        const int64_t by1 = std::min(img.height - 1, static_cast<int64_t>(std::ceil(std::max(y0, y1) + half)));
        const double dx = x1 - x0, dy = y1 - y0;
        const double len2 = dx * dx + dy * dy;
        for (int64_t y = by0; y <= by1; ++y)
            for (int64_t x = bx0; x <= bx1; ++x) {
                double t = len2 > 0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double px = x0 + t * dx - x, py = y0 + t * dy - y;
                if (px * px + py * py <= half * half) out.at(y, x) = clamp01(st.intensity);
            }
    }
    return out;
}

GrayImage downscale_upscale(const GrayImage& img, int64_t factor) {
    if (factor < 1) throw ConfigError("resolution factor must be >= 1");
    if (factor == 1) return img;
    const int64_t dw = (img.width + factor - 1) / factor;
    const int64_t dh = (img.height + factor - 1) / factor;
    GrayImage down(dw, dh);
    for (int64_t by = 0; by < dh; ++by)
        for (int64_t bx = 0; bx < dw; ++bx) {
            double acc = 0;
            int64_t cnt = 0;
            for (int64_t y = by * factor; y < std::min((by + 1) * factor, img.height); ++y)
                for (int64_t x = bx * factor; x < std::min((bx + 1) * factor, img.width); ++x) {
                    acc += img.at(y, x);
                    ++cnt;
                }
            down.at(by, bx) = static_cast<float>(acc / cnt);
        }
    GrayImage out(img.width, img.height);
    for (int64_t y = 0; y < img.height; ++y)
        for (int64_t x = 0; x < img.width; ++x) out.at(y, x) = down.at(y / factor, x / factor);
    return out;
}

GrayImage rotate(const GrayImage& img, double angle_deg) {
    if (angle_deg == 0) return img;
    const double a = angle_deg * M_PI / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    GrayImage out(img.width, img.height);
    auto sample = [&](int64_t y, int64_t x) -> double {
        if (y < 0 || y >= img.height || x < 0 || x >= img.width) return 1.0;  // light background
        return img.at(y, x);
    };
    for (int64_t y = 0; y < img.height; ++y)
        for (int64_t x = 0; x < img.width; ++x) {
            // inverse map: rotate output coordinates back into the source
            const double rx = ca * (x - cx) + sa * (y - cy) + cx;
            const double ry = -sa * (x - cx) + ca * (y - cy) + cy;
            const int64_t fx = static_cast<int64_t>(std::floor(rx));
            const int64_t fy = static_cast<int64_t>(std::floor(ry));
            const double tx = rx - fx, ty = ry - fy;
            const double v = (1 - ty) * ((1 - tx) * sample(fy, fx) + tx * sample(fy, fx + 1)) +
                             ty * ((1 - tx) * sample(fy + 1, fx) + tx * sample(fy + 1, fx + 1));
            out.at(y, x) = clamp01(v);
        }
    return out;
}

}  // namespace

GrayImage apply_degradations(const GrayImage& img, const DegradeSpec& spec) {
    GrayImage out = img;
    for (const DegradeStep& step : spec.steps) {
        out = std::visit(
            [&](const auto& st) -> GrayImage {
                using S = std::decay_t<decltype(st)>;
                if constexpr (std::is_same_v<S, BlurStep>) {
                    return blur(out, st.sigma);
                } else if constexpr (std::is_same_v<S, BrightnessStep>) {
                    GrayImage r = out;
                    for (float& p : r.pixels) p = clamp01(p + st.offset);
                    return r;
                } else if constexpr (std::is_same_v<S, ContrastStep>) {
                    if (st.gain <= 0) throw ConfigError("contrast gain must be > 0");
                    GrayImage r = out;
                    for (float& p : r.pixels) p = clamp01((p - 0.5) * st.gain + 0.5);
                    return r;
                } else if constexpr (std::is_same_v<S, OcclusionStep>) {
                    return occlude(out, st);
                } else if constexpr (std::is_same_v<S, ScratchStep>) {
                    return scratch(out, st);
                } else if constexpr (std::is_same_v<S, ResolutionStep>) {
                    return downscale_upscale(out, st.factor);
                } else {
                    return rotate(out, st.angle_deg);
                }
            },
            step);
    }
    return out;
}

GrayImage synth_fingerprint(int64_t width, int64_t height, uint64_t seed, double ridge_frequency) {
    if (width < 32 || height < 32) throw ConfigError("synth_fingerprint needs extents >= 32");
    Rng rng(seed);
    const double cx = width * rng.uniform(1.0 / 3, 2.0 / 3);
    const double cy = height * rng.uniform(1.0 / 3, 2.0 / 3);
    // low-frequency phase perturbation: a handful of smooth sinusoids
    struct Wave {
        double u, v, phase, amp;
    };
    std::vector<Wave> waves(4);
    for (Wave& wv : waves) {
        wv.u = rng.uniform(-0.01, 0.01);
        wv.v = rng.uniform(-0.01, 0.01);
        wv.phase = rng.uniform(0, 2 * M_PI);
        wv.amp = rng.uniform(0.5, 1.5);
    }
    GrayImage img(width, height);
    for (int64_t y = 0; y < height; ++y)
        for (int64_t x = 0; x < width; ++x) {
            const double rho = std::hypot(x - cx, y - cy);
            double phi = 0;
            for (const Wave& wv : waves)
                phi += wv.amp * std::sin(2 * M_PI * (wv.u * x + wv.v * y) + wv.phase);
            img.at(y, x) =
                static_cast<float>(0.5 + 0.5 * std::cos(2 * M_PI * ridge_frequency * rho + phi));
        }
    return img;
}

std::vector<ManifestRow> build_dataset(int64_t count, int64_t image_size, uint64_t seed,
                                       const DegradeTemplate& tmpl,
                                       const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IOError("cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<ManifestRow> rows;
    for (int64_t i = 0; i < count; ++i) {
        const uint64_t pair_seed = seed + static_cast<uint64_t>(i);
        Rng rng(pair_seed);
        ManifestRow r{};
        r.index = i;
        r.pair_seed = pair_seed;
        r.ridge_freq = rng.uniform(tmpl.ridge_freq_min, tmpl.ridge_freq_max);
        r.sigma = rng.uniform(tmpl.sigma_min, tmpl.sigma_max);
        r.brightness = rng.uniform(tmpl.brightness_min, tmpl.brightness_max);
        r.contrast = rng.uniform(tmpl.contrast_min, tmpl.contrast_max);
        r.occl_count = rng.uniform_int(tmpl.occl_count_min, tmpl.occl_count_max);
        r.occl_size = rng.uniform_int(tmpl.occl_size_min, tmpl.occl_size_max);
        r.scratch_count = rng.uniform_int(tmpl.scratch_count_min, tmpl.scratch_count_max);
        r.res_factor = rng.uniform_int(tmpl.res_factor_min, tmpl.res_factor_max);
        r.rotation = rng.uniform(tmpl.rot_min, tmpl.rot_max);

        const GrayImage clean = synth_fingerprint(image_size, image_size, pair_seed, r.ridge_freq);
        DegradeSpec spec;
        spec.steps = {
            BlurStep{r.sigma},
            BrightnessStep{r.brightness},
            ContrastStep{r.contrast},
            OcclusionStep{r.occl_count, std::min(r.occl_size, image_size),
                          std::min(r.occl_size, image_size), tmpl.occl_fill, pair_seed ^ 0x9e3779b9},
            ScratchStep{r.scratch_count, tmpl.scratch_width, tmpl.scratch_intensity,
                        pair_seed ^ 0x7f4a7c15},
            ResolutionStep{r.res_factor},
            RotationStep{r.rotation},
        };
        const GrayImage degraded = apply_degradations(clean, spec);

        char name[32];
        std::snprintf(name, sizeof name, "clean_%04lld.png", static_cast<long long>(i));
        save_image(clean, out_dir / name);
        std::snprintf(name, sizeof name, "degraded_%04lld.png", static_cast<long long>(i));
        save_image(degraded, out_dir / name);
        rows.push_back(r);
    }

    std::ofstream mf(out_dir / "manifest.csv", std::ios::trunc);
    if (!mf) throw IOError("cannot write manifest.csv");
    mf << "index,pair_seed,ridge_freq,sigma,brightness,contrast,occl_count,occl_size,"
          "scratch_count,res_factor,rotation\n";
    mf.precision(10);
    for (const ManifestRow& r : rows)
        mf << r.index << ',' << r.pair_seed << ',' << r.ridge_freq << ',' << r.sigma << ','
           << r.brightness << ',' << r.contrast << ',' << r.occl_count << ',' << r.occl_size << ','
           << r.scratch_count << ',' << r.res_factor << ',' << r.rotation << '\n';
    return rows;
}

}  // namespace uf
