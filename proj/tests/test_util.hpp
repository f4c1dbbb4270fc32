#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "uf/rng.hpp"
#include "uf/tensor.hpp"

namespace tu {

template <typename T>
uf::Tensor<T> randn(uf::Shape shape, uf::Rng& rng, double scale = 1.0) {
    uf::Tensor<T> t{shape};
    for (T& v : t.values()) v = static_cast<T>(rng.normal() * scale);
    return t;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

template <typename T>
bool bit_equal(const uf::Tensor<T>& a, const uf::Tensor<T>& b) {
    return a.numel() == b.numel() &&
           std::memcmp(a.data(), b.data(), sizeof(T) * a.numel()) == 0;
}

// Central finite differences against the analytic gradient already stored in
// leaf.grad(). eval() must recompute the scalar loss from current leaf
// values. Returns the max relative error over every coordinate.
inline double fd_check(const uf::Tensor<double>& leaf, const std::function<double()>& eval,
                       double h = 1e-5) {
    double worst = 0;
    for (int64_t i = 0; i < leaf.numel(); ++i) {
        double& v = leaf.values()[static_cast<size_t>(i)];
        const double orig = v;
        v = orig + h;
        const double up = eval();
        v = orig - h;
        const double dn = eval();
        v = orig;
        const double numeric = (up - dn) / (2 * h);
        const double analytic = leaf.grad()[static_cast<size_t>(i)];
        worst = std::max(worst, rel_err(analytic, numeric));
    }
    return worst;
}

}  // namespace tu
