#include "uf/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "uf/checkpoint.hpp"

namespace uf {

OptimizerState make_optimizer_state(const Model& m) {
    OptimizerState st;
    for (const auto& p : m.params)
        if (p.learnable)
            st.velocity.emplace_back(static_cast<size_t>(p.tensor.numel()), 0.f);
    return st;
}

void sgd_step(Model& m, OptimizerState& state, float lr, float momentum) {
    size_t vi = 0;
    for (auto& p : m.params) {
        if (!p.learnable) continue;
        if (vi >= state.velocity.size()) throw StateError("optimizer state does not match model");
        if (!p.tensor.grad_allocated())
            throw StateError("gradient missing for parameter '" + p.name + "'");
        std::vector<float>& v = state.velocity[vi++];
        std::vector<float>& g = p.tensor.grad();
        float* w = p.tensor.data();
        const int64_t n = p.tensor.numel();
        for (int64_t i = 0; i < n; ++i) {
            if (!std::isfinite(g[static_cast<size_t>(i)]))
                throw StateError("non-finite gradient in parameter '" + p.name + "'");
            v[static_cast<size_t>(i)] = momentum * v[static_cast<size_t>(i)] + g[static_cast<size_t>(i)];
            w[i] -= lr * v[static_cast<size_t>(i)];
        }
    }
}

PairedDataset PairedDataset::load_dir(const std::filesystem::path& dir, int64_t first,
                                      int64_t last) {
    PairedDataset ds;
    for (int64_t i = first;; ++i) {
        if (last >= 0 && i >= last) break;
        char cn[32], dn[32];
        std::snprintf(cn, sizeof cn, "clean_%04lld.png", static_cast<long long>(i));
        std::snprintf(dn, sizeof dn, "degraded_%04lld.png", static_cast<long long>(i));
        const auto cp = dir / cn;
        const auto dp = dir / dn;
        if (!std::filesystem::exists(cp) || !std::filesystem::exists(dp)) {
            if (last >= 0)
                throw DataError("missing pair " + std::to_string(i) + " in " + dir.string());
            break;
        }
        ds.clean.push_back(load_image(cp));
        ds.degraded.push_back(load_image(dp));
    }
    if (ds.size() == 0) throw DataError("no clean_/degraded_ pairs found in " + dir.string());
    return ds;
}

Batch make_batch(const PairedDataset& data, Rng& rng, int64_t patch_size, int64_t batch_size,
                 const NetworkConfig& config) {
    if (data.size() == 0) throw DataError("dataset is empty");
    for (int64_t i = 0; i < data.size(); ++i)
        if (data.clean[static_cast<size_t>(i)].width < patch_size ||
            data.clean[static_cast<size_t>(i)].height < patch_size)
            throw DataError("image pair " + std::to_string(i) + " is smaller than patch size " +
                            std::to_string(patch_size));

    const int64_t out_size = output_extent(config, patch_size);
    const int64_t off = (patch_size - out_size) / 2;

    Batch b{Tensor<float>{Shape{batch_size, 1, patch_size, patch_size}},
            Tensor<float>{Shape{batch_size, 1, out_size, out_size}}};
    for (int64_t s = 0; s < batch_size; ++s) {
        const int64_t idx = rng.uniform_index(data.size());
        const GrayImage& dg = data.degraded[static_cast<size_t>(idx)];
        const GrayImage& cl = data.clean[static_cast<size_t>(idx)];
        const int64_t y0 = rng.uniform_index(dg.height - patch_size + 1);
        const int64_t x0 = rng.uniform_index(dg.width - patch_size + 1);
        for (int64_t y = 0; y < patch_size; ++y)
            for (int64_t x = 0; x < patch_size; ++x)
                b.input.at(s, 0, y, x) = dg.at(y0 + y, x0 + x);
        for (int64_t y = 0; y < out_size; ++y)
            for (int64_t x = 0; x < out_size; ++x)
                b.target.at(s, 0, y, x) = cl.at(y0 + off + y, x0 + off + x);
    }
    return b;
}

TrainResult train(Model& m, const BatchProvider& next_batch, const TrainConfig& cfg,
                  const std::filesystem::path* out_dir) {
    if (cfg.learning_rate <= 0) throw ConfigError("learning rate must be > 0");
    if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");

    OptimizerState opt = make_optimizer_state(m);
    TrainResult result;
    Tape<float> tape;
    for (int64_t it = 1; it <= cfg.iterations; ++it) {
        Batch batch = next_batch(it);
        m.zero_grads();
        tape.reset();
        Tensor<float> pred = forward(m, &tape, batch.input, BNMode::train);
        Tensor<float> loss = mse_loss(&tape, pred, batch.target);
        const float loss_value = loss.item();
        if (!std::isfinite(loss_value))
            throw StateError("loss became non-finite at iteration " + std::to_string(it));
        backward(loss, tape);
        sgd_step(m, opt, cfg.learning_rate, cfg.momentum);
        result.log.push_back({it, loss_value});
        if (cfg.log_every > 0 && (it % cfg.log_every == 0 || it == cfg.iterations))
            std::fprintf(stderr, "iter %lld loss %.6g\n", static_cast<long long>(it),
                         static_cast<double>(loss_value));
        if (out_dir && cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "ckpt_%06lld.ufgr", static_cast<long long>(it));
            save_checkpoint(m, *out_dir / name);
        }
    }
    if (out_dir) write_loss_csv(result.log, *out_dir / "loss.csv");
    return result;
}

TrainResult train(Model& m, const PairedDataset& data, const TrainConfig& cfg,
                  const std::filesystem::path* out_dir) {
    if (cfg.patch_size < min_input_size(m.config))
        throw ConfigError("patch size " + std::to_string(cfg.patch_size) +
                          " is below the minimum input size " +
                          std::to_string(min_input_size(m.config)) + " for this config");
    auto rng = std::make_shared<Rng>(cfg.seed);
    BatchProvider provider = [&data, rng, &cfg, &m](int64_t) {
        return make_batch(data, *rng, cfg.patch_size, cfg.batch_size, m.config);
    };
    return train(m, provider, cfg, out_dir);
}

void write_loss_csv(const std::vector<LossRecord>& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IOError("cannot write " + path.string());
    out << "iteration,loss\n";
    char line[64];
    for (const LossRecord& r : log) {
        std::snprintf(line, sizeof line, "%lld,%.9g\n", static_cast<long long>(r.iteration),
                      static_cast<double>(r.loss));
        out << line;
    }
}

}  // namespace uf
