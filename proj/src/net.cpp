#include "uf/net.hpp"

#include <cmath>

#include "uf/rng.hpp"

namespace uf {

void NetworkConfig::validate() const {
    if (scales < 2) throw ConfigError("scales must be >= 2, got " + std::to_string(scales));
    if (dilation < 1) throw ConfigError("dilation must be >= 1, got " + std::to_string(dilation));
    if (kernel_plan != std::array<int64_t, 4>{3, 1, 3, 1})
        throw ConfigError("kernel plan is fixed to [3,1,3,1]");
    for (int64_t c : enc_channels)
        if (c < 1) throw ConfigError("encoder channel counts must be >= 1");
    for (int64_t c : dec_channels)
        if (c < 1) throw ConfigError("decoder channel counts must be >= 1");
    if (enc_channels[0] != enc_channels[3] || dec_channels[0] != dec_channels[3])
        throw ConfigError("residual blocks need matching first/last widths");
}

NetworkConfig NetworkConfig::preset(std::string_view name) {
    NetworkConfig cfg;
    if (name == "base") {
        cfg.dilation = 1;
        cfg.padding = PadMode::same;
    } else if (name == "nopad") {
        cfg.dilation = 1;
        cfg.padding = PadMode::valid;
    } else if (name == "ufinger") {
        cfg.dilation = 3;
        cfg.padding = PadMode::valid;
    } else {
        throw ConfigError("unknown config preset '" + std::string(name) +
                          "' (expected base, nopad or ufinger)");
    }
    return cfg;
}

std::string NetworkConfig::table_label() const {
    if (padding == PadMode::same && dilation == 1) return "Base-model";
    if (padding == PadMode::valid && dilation == 1) return "Base-model without padding";
    if (padding == PadMode::valid && dilation == 3) return "U-Finger";
    return "custom";
}

namespace {

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ShapeError& e) {
        throw ShapeError(name + ": " + e.what());
    }
}

template <typename T>
class Builder {
public:
    Builder(ModelT<T>& m, uint64_t seed) : m_(m), rng_(seed) {}

    Conv2dLayer<T> conv(const std::string& name, int64_t in_c, int64_t out_c, int64_t k) {
        Conv2dLayer<T> layer;
        layer.spec = ConvSpec{in_c, out_c, k, m_.config.dilation, m_.config.padding};
        layer.weight = Tensor<T>{Shape{out_c, in_c, k, k}};
        const double stddev = std::sqrt(2.0 / static_cast<double>(in_c * k * k));
        for (T& v : layer.weight.values()) v = static_cast<T>(rng_.normal() * stddev);
        layer.bias = Tensor<T>{Shape{1, out_c, 1, 1}};
        reg(name + ".weight", layer.weight, 4, true);
        reg(name + ".bias", layer.bias, 1, true);
        return layer;
    }

    BatchNormLayer<T> bn(const std::string& name, int64_t c) {
        BatchNormLayer<T> layer;
        layer.gamma = Tensor<T>::full(Shape{1, c, 1, 1}, T(1));
        layer.beta = Tensor<T>{Shape{1, c, 1, 1}};
        layer.running_mean = Tensor<T>{Shape{1, c, 1, 1}};
        layer.running_var = Tensor<T>::full(Shape{1, c, 1, 1}, T(1));
        layer.stats_ready = true;
        reg(name + ".gamma", layer.gamma, 1, true);
        reg(name + ".beta", layer.beta, 1, true);
        reg(name + ".running_mean", layer.running_mean, 1, false);
        reg(name + ".running_var", layer.running_var, 1, false);
        return layer;
    }

    FeatureModule<T> module(const std::string& prefix, int64_t in_c,
                            const std::array<int64_t, 4>& widths) {
        const auto& ks = m_.config.kernel_plan;
        FeatureModule<T> mod;
        mod.c1 = {conv(prefix + ".conv1", in_c, widths[0], ks[0]), bn(prefix + ".bn1", widths[0])};
        mod.r1 = {conv(prefix + ".res.conv1", widths[0], widths[1], ks[1]),
                  bn(prefix + ".res.bn1", widths[1])};
        mod.r2 = {conv(prefix + ".res.conv2", widths[1], widths[2], ks[2]),
                  bn(prefix + ".res.bn2", widths[2])};
        mod.r3 = {conv(prefix + ".res.conv3", widths[2], widths[3], ks[3]),
                  bn(prefix + ".res.bn3", widths[3])};
        return mod;
    }

private:
    void reg(std::string name, const Tensor<T>& t, int rank, bool learnable) {
        Tensor<T> handle = t;
        handle.set_requires_grad(learnable);
        m_.params.push_back(ParamEntry<T>{std::move(name), handle, rank, learnable});
    }

    ModelT<T>& m_;
    Rng rng_;
};

}  // namespace

template <typename T>
ModelT<T> build(const NetworkConfig& config, uint64_t seed) {
    config.validate();
    ModelT<T> m;
    m.config = config;
    Builder<T> b(m, seed);
    const int64_t S = config.scales;

    for (int64_t i = 0; i < S; ++i) {
        const int64_t in_c = (i == 0) ? 1 : config.enc_channels[3];
        m.enc.push_back(b.module("enc" + std::to_string(i), in_c, config.enc_channels));
    }

    m.dec.resize(static_cast<size_t>(S));
    if (config.fusion == Fusion::sum) m.proj.resize(static_cast<size_t>(S - 1));
    for (int64_t i = S - 1; i >= 0; --i) {
        const std::string prefix = "dec" + std::to_string(i);
        int64_t in_c;
        if (i == S - 1) {
            in_c = config.enc_channels[3];
        } else if (config.fusion == Fusion::concat) {
            in_c = config.dec_channels[3] + config.enc_channels[3];
        } else {
            in_c = config.dec_channels[3];
            m.proj[static_cast<size_t>(i)] =
                b.conv(prefix + ".proj", config.enc_channels[3], config.dec_channels[3], 1);
        }
        m.dec[static_cast<size_t>(i)] = b.module(prefix, in_c, config.dec_channels);
    }

    m.head = b.conv("head", config.dec_channels[3], 1, 1);
    return m;
}

namespace {

template <typename T>
Tensor<T> conv_bn(ConvBN<T>& blk, const std::string& name, Tape<T>* tape, const Tensor<T>& x,
                  BNMode mode, bool act) {
    Tensor<T> t = stage(name, [&] {
        return conv2d(tape, x, blk.conv.weight, blk.conv.bias, blk.conv.spec);
    });
    t = stage(name + ".bn", [&] {
        return batchnorm2d(tape, t, blk.bn.gamma, blk.bn.beta, blk.bn.running_mean,
                           blk.bn.running_var, blk.bn.stats_ready, mode);
    });
    return act ? relu(tape, t) : t;
}

// conv-BN-ReLU, then the bottleneck residual branch; the branch output is
// summed with a center crop of the post-activation input and re-activated.
template <typename T>
Tensor<T> module_forward(FeatureModule<T>& mod, const std::string& prefix, Tape<T>* tape,
                         const Tensor<T>& x, BNMode mode) {
    Tensor<T> r = conv_bn(mod.c1, prefix + ".conv1", tape, x, mode, true);
    Tensor<T> y = conv_bn(mod.r1, prefix + ".res.conv1", tape, r, mode, true);
    y = conv_bn(mod.r2, prefix + ".res.conv2", tape, y, mode, true);
    y = conv_bn(mod.r3, prefix + ".res.conv3", tape, y, mode, false);
    Tensor<T> rc = stage(prefix + ".res.crop", [&] {
        return center_crop(tape, r, y.shape().h, y.shape().w);
    });
    return relu(tape, add(tape, y, rc));
}

}  // namespace

template <typename T>
Tensor<T> encoding_forward(ModelT<T>& m, int64_t scale, Tape<T>* tape, const Tensor<T>& x,
                           BNMode mode) {
    return module_forward(m.enc.at(static_cast<size_t>(scale)), "enc" + std::to_string(scale),
                          tape, x, mode);
}

template <typename T>
Tensor<T> decoding_forward(ModelT<T>& m, int64_t scale, Tape<T>* tape, const Tensor<T>& deep,
                           const Tensor<T>* skip, BNMode mode) {
    const std::string prefix = "dec" + std::to_string(scale);
    Tensor<T> fused = deep;
    if (skip != nullptr) {
        if (deep.shape().n != skip->shape().n)
            throw ShapeError(prefix + ".fuse: batch mismatch " + deep.shape().str() + " vs " +
                             skip->shape().str());
        if (m.config.fusion == Fusion::concat) {
            const int64_t th = std::min(deep.shape().h, skip->shape().h);
            const int64_t tw = std::min(deep.shape().w, skip->shape().w);
            fused = stage(prefix + ".fuse", [&] {
                Tensor<T> a = center_crop(tape, deep, th, tw);
                Tensor<T> b = center_crop(tape, *skip, th, tw);
                return concat_channels(tape, a, b);
            });
        } else {
            Conv2dLayer<T>& proj = m.proj.at(static_cast<size_t>(scale));
            fused = stage(prefix + ".fuse", [&] {
                Tensor<T> p = conv2d(tape, *skip, proj.weight, proj.bias, proj.spec);
                const int64_t th = std::min(deep.shape().h, p.shape().h);
                const int64_t tw = std::min(deep.shape().w, p.shape().w);
                return add(tape, center_crop(tape, deep, th, tw), center_crop(tape, p, th, tw));
            });
        }
    }
    return module_forward(m.dec.at(static_cast<size_t>(scale)), prefix, tape, fused, mode);
}

template <typename T>
Tensor<T> forward(ModelT<T>& m, Tape<T>* tape, const Tensor<T>& image, BNMode mode) {
    if (image.shape().c != 1)
        throw ShapeError("forward expects a 1-channel image, got " + image.shape().str());
    const int64_t S = m.config.scales;
    std::vector<Tensor<T>> skips;
    skips.reserve(static_cast<size_t>(S));
    Tensor<T> t = image;
    for (int64_t i = 0; i < S; ++i) {
        if (i > 0)
            t = stage("pool" + std::to_string(i - 1), [&] { return maxpool2x2(tape, t); });
        t = encoding_forward(m, i, tape, t, mode);
        skips.push_back(t);
    }
    Tensor<T> d =
        decoding_forward(m, S - 1, tape, skips.back(), static_cast<const Tensor<T>*>(nullptr), mode);
    for (int64_t i = S - 2; i >= 0; --i) {
        d = stage("up" + std::to_string(i), [&] { return upsample_nearest2x(tape, d); });
        d = decoding_forward(m, i, tape, d, &skips[static_cast<size_t>(i)], mode);
    }
    return stage("head", [&] { return conv2d(tape, d, m.head.weight, m.head.bias, m.head.spec); });
}

template <typename T>
int64_t ModelT<T>::parameter_count() const {
    int64_t total = 0;
    for (const auto& p : params) total += p.tensor.numel();
    return total;
}

template <typename T>
int64_t ModelT<T>::learnable_count() const {
    int64_t total = 0;
    for (const auto& p : params)
        if (p.learnable) total += p.tensor.numel();
    return total;
}

template <typename T>
void ModelT<T>::zero_grads() {
    for (auto& p : params)
        if (p.learnable) {
            p.tensor.grad();
            p.tensor.zero_grad();
        }
}

// ---------------------------------------------------------------------------
// Shape tracing

namespace {

class Walker {
public:
    Walker(const NetworkConfig& cfg, int64_t h, int64_t w) : cfg_(cfg), h_(h), w_(w), c_(1) {
        rec("input");
    }

    void conv(const std::string& name, int64_t k, int64_t out_c) {
        if (failed()) return;
        const int64_t shrink = cfg_.padding == PadMode::valid ? cfg_.dilation * (k - 1) : 0;
        if (h_ - shrink < 1 || w_ - shrink < 1) {
            fail(name, "conv with kernel extent " + std::to_string(cfg_.dilation * (k - 1) + 1) +
                           " does not fit " + dims());
            return;
        }
        h_ -= shrink;
        w_ -= shrink;
        c_ = out_c;
        rec(name);
    }

    void pool(const std::string& name) {
        if (failed()) return;
        if (h_ < 2 || w_ < 2) {
            fail(name, "maxpool needs extents >= 2, has " + dims());
            return;
        }
        h_ /= 2;
        w_ /= 2;
        rec(name);
    }

    void up(const std::string& name) {
        if (failed()) return;
        h_ *= 2;
        w_ *= 2;
        rec(name);
    }

    void fuse(const std::string& name, int64_t skip_h, int64_t skip_w, int64_t skip_c) {
        if (failed()) return;
        h_ = std::min(h_, skip_h);
        w_ = std::min(w_, skip_w);
        c_ = cfg_.fusion == Fusion::concat ? c_ + skip_c : cfg_.dec_channels[3];
        rec(name);
    }

    // 4-conv module; the residual crop keeps the branch extents.
    void module(const std::string& prefix, const std::array<int64_t, 4>& widths) {
        const auto& ks = cfg_.kernel_plan;
        conv(prefix + ".conv1", ks[0], widths[0]);
        conv(prefix + ".res.conv1", ks[1], widths[1]);
        conv(prefix + ".res.conv2", ks[2], widths[2]);
        conv(prefix + ".res.conv3", ks[3], widths[3]);
        if (!failed()) rec(prefix + ".out");
    }

    bool failed() const { return failed_; }
    int64_t h() const { return h_; }
    int64_t w() const { return w_; }
    int64_t c() const { return c_; }

    ShapeTrace take() && {
        trace_.ok = !failed_;
        return std::move(trace_);
    }

private:
    void rec(const std::string& name) { trace_.stages.push_back({name, c_, h_, w_}); }

    void fail(const std::string& name, const std::string& reason) {
        failed_ = true;
        trace_.fail_stage = name;
        trace_.fail_reason = reason;
    }

    std::string dims() const { return std::to_string(h_) + "x" + std::to_string(w_); }

    const NetworkConfig& cfg_;
    ShapeTrace trace_;
    bool failed_ = false;
    int64_t h_, w_, c_;
};

}  // namespace

ShapeTrace trace_shapes(const NetworkConfig& config, int64_t h, int64_t w) {
    config.validate();
    if (h < 1 || w < 1) throw ShapeError("trace input extents must be >= 1");
    Walker wk(config, h, w);
    const int64_t S = config.scales;

    struct Saved {
        int64_t h, w, c;
    };
    std::vector<Saved> skips;
    for (int64_t i = 0; i < S; ++i) {
        if (i > 0) wk.pool("pool" + std::to_string(i - 1));
        wk.module("enc" + std::to_string(i), config.enc_channels);
        skips.push_back({wk.h(), wk.w(), wk.c()});
    }
    wk.module("dec" + std::to_string(S - 1), config.dec_channels);
    for (int64_t i = S - 2; i >= 0 && !wk.failed(); --i) {
        wk.up("up" + std::to_string(i));
        const Saved& sk = skips[static_cast<size_t>(i)];
        wk.fuse("dec" + std::to_string(i) + ".fuse", sk.h, sk.w, sk.c);
        wk.module("dec" + std::to_string(i), config.dec_channels);
    }
    wk.conv("head", 1, 1);
    return std::move(wk).take();
}

int64_t min_input_size(const NetworkConfig& config) {
    for (int64_t s = 1; s <= 4096; ++s)
        if (trace_shapes(config, s, s).ok) return s;
    throw ConfigError("no admissible input size up to 4096 for this config");
}

int64_t output_extent(const NetworkConfig& config, int64_t input_extent) {
    ShapeTrace tr = trace_shapes(config, input_extent, input_extent);
    if (!tr.ok)
        throw ShapeError("input " + std::to_string(input_extent) + " fails at " + tr.fail_stage +
                         ": " + tr.fail_reason);
    return tr.output().h;
}

#define UF_INSTANTIATE_NET(T)                                                                     \
    template struct ModelT<T>;                                                                    \
    template ModelT<T> build<T>(const NetworkConfig&, uint64_t);                                  \
    template Tensor<T> encoding_forward<T>(ModelT<T>&, int64_t, Tape<T>*, const Tensor<T>&,      \
                                           BNMode);                                              \
    template Tensor<T> decoding_forward<T>(ModelT<T>&, int64_t, Tape<T>*, const Tensor<T>&,      \
                                           const Tensor<T>*, BNMode);                            \
    template Tensor<T> forward<T>(ModelT<T>&, Tape<T>*, const Tensor<T>&, BNMode);

UF_INSTANTIATE_NET(float)
UF_INSTANTIATE_NET(double)

#undef UF_INSTANTIATE_NET

}  // namespace uf
