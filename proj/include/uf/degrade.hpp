#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "uf/image.hpp"
#include "uf/rng.hpp"

namespace uf {

// One degradation step each; applied strictly in list order. Every step maps
// [0,1] images to [0,1] images and is deterministic given its parameters
// (and seed, for the randomized ones).
struct BlurStep {
    double sigma = 1.0;  // Gaussian, radius ceil(3*sigma), reflect borders
};
struct BrightnessStep {
    double offset = 0.0;
};
struct ContrastStep {
    double gain = 1.0;  // (p - 0.5) * gain + 0.5
};
struct OcclusionStep {
    int64_t count = 1;
    int64_t min_size = 8, max_size = 24;  // rectangle edge range, pixels
    double fill = 1.0;
    uint64_t seed = 0;
};
struct ScratchStep {
    int64_t count = 1;
    double width = 1.5;
    double intensity = 1.0;
    uint64_t seed = 0;
};
struct ResolutionStep {
    int64_t factor = 2;  // box downscale, then nearest upscale back
};
struct RotationStep {
    double angle_deg = 0.0;  // about center, bilinear, out-of-frame fills 1.0
};

using DegradeStep = std::variant<BlurStep, BrightnessStep, ContrastStep, OcclusionStep,
                                 ScratchStep, ResolutionStep, RotationStep>;

struct DegradeSpec {
    std::vector<DegradeStep> steps;
};

GrayImage apply_degradations(const GrayImage& img, const DegradeSpec& spec);

// Concentric ridge pattern around a seeded center, with a smooth seeded
// phase perturbation. A stand-in source of fingerprint-like texture.
GrayImage synth_fingerprint(int64_t width, int64_t height, uint64_t seed,
                            double ridge_frequency = 0.1);

// Per-pair parameter ranges for dataset synthesis.
struct DegradeTemplate {
    double ridge_freq_min = 0.08, ridge_freq_max = 0.12;
    double sigma_min = 0.5, sigma_max = 1.5;
    double brightness_min = -0.15, brightness_max = 0.15;
    double contrast_min = 0.7, contrast_max = 1.3;
    int64_t occl_count_min = 1, occl_count_max = 3;
    int64_t occl_size_min = 8, occl_size_max = 24;
    double occl_fill = 1.0;
    int64_t scratch_count_min = 1, scratch_count_max = 4;
    double scratch_width = 1.5;
    double scratch_intensity = 1.0;
    int64_t res_factor_min = 1, res_factor_max = 2;
    double rot_min = -5.0, rot_max = 5.0;
};

struct ManifestRow {
    int64_t index;
    uint64_t pair_seed;
    double ridge_freq, sigma, brightness, contrast;
    int64_t occl_count, occl_size;
    int64_t scratch_count;
    int64_t res_factor;
    double rotation;
};

// Writes clean_%04d.png / degraded_%04d.png pairs plus manifest.csv into
// out_dir. Pair i derives its generator state from seed + i.
std::vector<ManifestRow> build_dataset(int64_t count, int64_t image_size, uint64_t seed,
                                       const DegradeTemplate& tmpl,
                                       const std::filesystem::path& out_dir);

}  // namespace uf
