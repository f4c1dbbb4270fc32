// Compares the OpenMP convolution kernels against the serial reference on
// shapes that dominate a training iteration, and reports GMAC/s.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "uf/kernels.hpp"
#include "uf/ref_kernels.hpp"
#include "uf/rng.hpp"

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Case {
    const char* name;
    uf::ConvSpec spec;
    int64_t n, h, w;
};

double macs(const uf::ConvDims& dm) {
    return static_cast<double>(dm.n) * dm.out_c * dm.out_h * dm.out_w * dm.in_c * dm.k * dm.k;
}

template <typename F>
double time_best(F&& fn, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now();
        fn();
        best = std::min(best, now() - t0);
    }
    return best;
}

void run_case(const Case& c) {
    const uf::ConvDims dm = uf::conv_dims(uf::Shape{c.n, c.spec.in_channels, c.h, c.w}, c.spec);
    uf::Rng rng(1);
    std::vector<float> x(static_cast<size_t>(c.n * dm.in_c * dm.in_h * dm.in_w));
    std::vector<float> w(static_cast<size_t>(dm.out_c * dm.in_c * dm.k * dm.k));
    std::vector<float> b(static_cast<size_t>(dm.out_c));
    std::vector<float> gy(static_cast<size_t>(dm.n * dm.out_c * dm.out_h * dm.out_w));
    for (auto& v : x) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : w) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : gy) v = static_cast<float>(rng.uniform(-1, 1));
    std::vector<float> y_ref(gy.size()), y(gy.size());
    std::vector<float> gx(x.size(), 0.f), gw(w.size(), 0.f), gb(b.size(), 0.f);

    const double g = macs(dm) * 1e-9;
    const int max_threads = omp_get_max_threads();

    const double t_ref = time_best([&] { uf::ref::conv2d_forward(x.data(), w.data(), b.data(),
                                                                 y_ref.data(), dm); }, 2);
    omp_set_num_threads(1);
    const double t_one = time_best([&] { uf::kern::conv2d_forward(x.data(), w.data(), b.data(),
                                                                  y.data(), dm); }, 3);
    omp_set_num_threads(max_threads);
    const double t_par = time_best([&] { uf::kern::conv2d_forward(x.data(), w.data(), b.data(),
                                                                  y.data(), dm); }, 3);

    float max_diff = 0;
    for (size_t i = 0; i < y.size(); ++i)
        max_diff = std::max(max_diff, std::abs(y[i] - y_ref[i]));

    const double t_gx = time_best([&] { uf::kern::conv2d_grad_input(gx.data(), w.data(),
                                                                    gy.data(), dm); }, 3);
    const double t_gw = time_best([&] { uf::kern::conv2d_grad_weight(x.data(), gw.data(),
                                                                     gy.data(), dm); }, 3);

    std::printf("%-28s %7.2f GMAC | ref %6.2f | omp x1 %6.2f | omp x%d %6.2f"
                " | dgrad %6.2f | wgrad %6.2f GMAC/s | max|diff| %.2e\n",
                c.name, g, g / t_ref, g / t_one, max_threads, g / t_par, g / t_gx, g / t_gw,
                static_cast<double>(max_diff));
}

}  // namespace

int main() {
    std::printf("threads available: %d\n", omp_get_max_threads());
    const Case cases[] = {
        {"3x3 d3 valid 128->128 @80", {128, 128, 3, 3, uf::PadMode::valid}, 2, 80, 80},
        {"3x3 d1 same  384->256 @32", {384, 256, 3, 1, uf::PadMode::same}, 2, 32, 32},
        {"1x1 128->32 @160", {128, 32, 1, 1, uf::PadMode::valid}, 2, 160, 160},
        {"3x3 d3 valid 1->128 @172", {1, 128, 3, 3, uf::PadMode::valid}, 2, 172, 172},
    };
    for (const Case& c : cases) run_case(c);
    return 0;
}
