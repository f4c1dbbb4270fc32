#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <vector>

#include "uf/checkpoint.hpp"
#include "uf/degrade.hpp"
#include "uf/metrics.hpp"
#include "uf/net.hpp"
#include "uf/restore.hpp"
#include "uf/trainer.hpp"

namespace fs = std::filesystem;

namespace {

void echo_config(const CLI::App& sub, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream f(out_dir / "run_config.txt", std::ios::trunc);
    f << sub.config_to_str(true, false);
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw uf::DataError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

// Smallest admissible training patch for a config, floored at 16 so the
// shallow-shrink configs still see a useful neighborhood.
int64_t default_patch(const uf::NetworkConfig& cfg) {
    int64_t s = std::max<int64_t>(uf::min_input_size(cfg), 16);
    while (!uf::trace_shapes(cfg, s, s).ok) ++s;
    return s;
}

struct TrainFlags {
    std::string config;
    std::string data;
    std::string out;
    int64_t iters = 1000;
    uint64_t seed = 0;
    int64_t patch = 200;
    double lr = 1e-3;
    double momentum = 0.9;
    int64_t batch = 8;
    int64_t checkpoint_every = 0;
    int64_t log_every = 100;
};

void add_optim_flags(CLI::App* sub, TrainFlags& f) {
    sub->add_option("--iters", f.iters, "training iterations");
    sub->add_option("--seed", f.seed, "RNG seed");
    sub->add_option("--lr", f.lr, "SGD learning rate");
    sub->add_option("--momentum", f.momentum, "SGD momentum");
    sub->add_option("--batch", f.batch, "batch size");
}

int run(int argc, char** argv) {
    CLI::App app{"U-Finger fingerprint restoration pipeline"};
    app.require_subcommand(1);

    // generate ---------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "synthesize a paired clean/degraded dataset");
    gen->set_config("--params");
    gen->allow_config_extras(false);
    int64_t gen_count = 0;
    int64_t gen_size = 256;
    uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--count", gen_count, "number of image pairs")->required();
    gen->add_option("--size", gen_size, "square image size");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->callback([&] {
        echo_config(*gen, gen_out);
        uf::build_dataset(gen_count, gen_size, gen_seed, uf::DegradeTemplate{}, gen_out);
        std::fprintf(stderr, "wrote %lld pairs to %s\n", static_cast<long long>(gen_count),
                     gen_out.c_str());
    });

    // train ------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "train one configuration");
    tr->set_config("--params");
    tr->allow_config_extras(false);
    TrainFlags tf;
    tr->add_option("--config", tf.config, "network preset")
        ->required()
        ->check(CLI::IsMember({"base", "nopad", "ufinger"}));
    tr->add_option("--data", tf.data, "dataset directory")->required();
    tr->add_option("--out", tf.out, "run output directory")->required();
    tr->add_option("--patch", tf.patch, "training patch size");
    tr->add_option("--checkpoint-every", tf.checkpoint_every, "intermediate checkpoint cadence");
    tr->add_option("--log-every", tf.log_every, "stderr progress cadence");
    add_optim_flags(tr, tf);
    tr->callback([&] {
        echo_config(*tr, tf.out);
        const uf::NetworkConfig cfg = uf::NetworkConfig::preset(tf.config);
        uf::Model model = uf::build<float>(cfg, tf.seed);
        const uf::PairedDataset data = uf::PairedDataset::load_dir(tf.data);
        uf::TrainConfig tc;
        tc.learning_rate = static_cast<float>(tf.lr);
        tc.momentum = static_cast<float>(tf.momentum);
        tc.batch_size = tf.batch;
        tc.iterations = tf.iters;
        tc.seed = tf.seed;
        tc.patch_size = tf.patch;
        tc.checkpoint_every = tf.checkpoint_every;
        tc.log_every = tf.log_every;
        const fs::path out_dir = tf.out;
        uf::train(model, data, tc, &out_dir);
        uf::save_checkpoint(model, out_dir / "model.ufgr");
    });

    // denoise ----------------------------------------------------------
    auto* dn = app.add_subcommand("denoise", "restore a directory of images");
    dn->set_config("--params");
    dn->allow_config_extras(false);
    std::string dn_model, dn_in, dn_out;
    bool dn_nopad = false;
    dn->add_option("--model", dn_model, "checkpoint file")->required();
    dn->add_option("--in", dn_in, "input image directory")->required();
    dn->add_option("--out", dn_out, "output directory")->required();
    dn->add_flag("--no-pad-input", dn_nopad, "feed raw inputs and emit shrunken outputs");
    dn->callback([&] {
        echo_config(*dn, dn_out);
        const auto files = list_images(dn_in);
        if (files.empty()) {
            std::fprintf(stderr, "warning: no images found in %s\n", dn_in.c_str());
            return;
        }
        uf::Model model = uf::load_checkpoint(dn_model);
        for (const fs::path& f : files) {
            const uf::GrayImage img = uf::load_image(f);
            const uf::GrayImage out = uf::restore_image(model, img, !dn_nopad);
            uf::save_image(out, fs::path(dn_out) / f.filename());
        }
        std::fprintf(stderr, "restored %zu images\n", files.size());
    });

    // eval -------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "score restored images against ground truth");
    ev->set_config("--params");
    ev->allow_config_extras(false);
    std::string ev_restored, ev_truth, ev_out, ev_label = "unlabeled";
    ev->add_option("--restored", ev_restored, "restored image directory")->required();
    ev->add_option("--truth", ev_truth, "ground-truth image directory")->required();
    ev->add_option("--out", ev_out, "report output directory")->required();
    ev->add_option("--label", ev_label, "config label for the report");
    ev->callback([&] {
        echo_config(*ev, ev_out);
        const uf::MetricsReport rep = uf::evaluate_pairs(ev_restored, ev_truth, ev_label);
        uf::write_report_csv(rep, fs::path(ev_out) / "report.csv");
        std::ofstream txt(fs::path(ev_out) / "report.txt", std::ios::trunc);
        txt << uf::format_report_table({rep});
    });

    // ablate -----------------------------------------------------------
    auto* ab = app.add_subcommand("ablate", "train and score all three configurations");
    ab->set_config("--params");
    ab->allow_config_extras(false);
    TrainFlags af;
    af.iters = 2000;
    af.patch = 0;  // per-config default
    ab->add_option("--data", af.data, "dataset directory")->required();
    ab->add_option("--out", af.out, "output directory")->required();
    ab->add_option("--patch", af.patch, "patch size for every config (0: per-config minimum)");
    ab->add_option("--log-every", af.log_every, "stderr progress cadence");
    add_optim_flags(ab, af);
    ab->callback([&] {
        const fs::path out_dir = af.out;
        echo_config(*ab, out_dir);

        const uf::PairedDataset all = uf::PairedDataset::load_dir(af.data);
        const int64_t held_out = std::max<int64_t>(1, all.size() / 4);
        const int64_t val_first = all.size() - held_out;
        if (val_first < 1) throw uf::DataError("dataset too small to split");

        // stage the held-out split under shared filenames
        const fs::path val_in = out_dir / "val_input";
        const fs::path val_truth = out_dir / "val_truth";
        fs::create_directories(val_in);
        fs::create_directories(val_truth);
        for (int64_t i = val_first; i < all.size(); ++i) {
            char a[32], b[32], c[32];
            std::snprintf(a, sizeof a, "clean_%04lld.png", static_cast<long long>(i));
            std::snprintf(b, sizeof b, "degraded_%04lld.png", static_cast<long long>(i));
            std::snprintf(c, sizeof c, "pair_%04lld.png", static_cast<long long>(i));
            fs::copy_file(fs::path(af.data) / a, val_truth / c, fs::copy_options::overwrite_existing);
            fs::copy_file(fs::path(af.data) / b, val_in / c, fs::copy_options::overwrite_existing);
        }
        const uf::PairedDataset train_split = uf::PairedDataset::load_dir(af.data, 0, val_first);

        const char* names[3] = {"base", "nopad", "ufinger"};
        std::vector<uf::MetricsReport> reports;
        std::vector<int64_t> patches;
        for (const char* name : names) {
            const uf::NetworkConfig cfg = uf::NetworkConfig::preset(name);
            const int64_t patch = af.patch > 0 ? af.patch : default_patch(cfg);
            patches.push_back(patch);
            std::fprintf(stderr, "[%s] training %lld iterations at patch %lld\n", name,
                         static_cast<long long>(af.iters), static_cast<long long>(patch));
            const fs::path run_dir = out_dir / name;
            fs::create_directories(run_dir);
            uf::Model model = uf::build<float>(cfg, af.seed);
            uf::TrainConfig tc;
            tc.learning_rate = static_cast<float>(af.lr);
            tc.momentum = static_cast<float>(af.momentum);
            tc.batch_size = af.batch;
            tc.iterations = af.iters;
            tc.seed = af.seed;
            tc.patch_size = patch;
            tc.log_every = af.log_every;
            uf::train(model, train_split, tc, &run_dir);
            uf::save_checkpoint(model, run_dir / "model.ufgr");

            const fs::path restored = run_dir / "restored";
            fs::create_directories(restored);
            for (const fs::path& f : list_images(val_in)) {
                const uf::GrayImage img = uf::load_image(f);
                uf::save_image(uf::restore_image(model, img, true), restored / f.filename());
            }
            uf::MetricsReport rep = uf::evaluate_pairs(restored, val_truth, cfg.table_label());
            uf::write_report_csv(rep, run_dir / "report.csv");
            reports.push_back(std::move(rep));
        }

        std::ofstream txt(out_dir / "ablation.txt", std::ios::trunc);
        txt << "seed=" << af.seed << " iterations=" << af.iters << " batch=" << af.batch
            << " lr=" << af.lr << " momentum=" << af.momentum << " patches=" << patches[0] << "/"
            << patches[1] << "/" << patches[2] << " train_pairs=" << val_first
            << " val_pairs=" << held_out << "\n\n";
        txt << uf::format_report_table(reports);
        std::ofstream csv(out_dir / "ablation.csv", std::ios::trunc);
        csv << "config,mse,psnr_db,ssim\n";
        csv.precision(6);
        csv << std::fixed;
        for (const auto& r : reports)
            csv << r.label << ',' << r.mean_mse << ',' << r.mean_psnr << ',' << r.mean_ssim << '\n';
        std::fprintf(stderr, "ablation table written to %s\n",
                     (out_dir / "ablation.txt").c_str());
    });

    // info ---------------------------------------------------------------
    auto* in = app.add_subcommand("info", "print the shape trace for a config");
    int64_t in_size = 0;
    std::string in_config;
    in->add_option("--config", in_config, "network preset")
        ->required()
        ->check(CLI::IsMember({"base", "nopad", "ufinger"}));
    in->add_option("--size", in_size, "square input size (0: minimum input size)");
    in->callback([&] {
        const uf::NetworkConfig cfg = uf::NetworkConfig::preset(in_config);
        const int64_t min_size = uf::min_input_size(cfg);
        const uf::Model model = uf::build<float>(cfg, 0);
        const int64_t size = in_size > 0 ? in_size : min_size;
        std::printf("config: %s (%s)\n", in_config.c_str(), cfg.table_label().c_str());
        std::printf("min input size: %lld\n", static_cast<long long>(min_size));
        std::printf("parameters: %lld scalars (%lld learnable)\n",
                    static_cast<long long>(model.parameter_count()),
                    static_cast<long long>(model.learnable_count()));
        const uf::ShapeTrace trace = uf::trace_shapes(cfg, size, size);
        std::printf("trace for %lldx%lld:\n", static_cast<long long>(size),
                    static_cast<long long>(size));
        for (const auto& st : trace.stages)
            std::printf("  %-18s %5lld x %lldx%lld\n", st.name.c_str(),
                        static_cast<long long>(st.channels), static_cast<long long>(st.h),
                        static_cast<long long>(st.w));
        if (!trace.ok)
            std::printf("  fails at %s: %s\n", trace.fail_stage.c_str(),
                        trace.fail_reason.c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const uf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
