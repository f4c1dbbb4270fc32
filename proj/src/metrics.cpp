#include "uf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace uf {

namespace {

GrayImage crop_center(const GrayImage& img, int64_t th, int64_t tw) {
    const int64_t top = (img.height - th) / 2;
    const int64_t left = (img.width - tw) / 2;
    GrayImage out(tw, th);
    for (int64_t y = 0; y < th; ++y)
        for (int64_t x = 0; x < tw; ++x) out.at(y, x) = img.at(top + y, left + x);
    return out;
}

std::string fmt(double v, int prec = 6) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(prec);
    os << std::fixed << v;
    return os.str();
}

}  // namespace

double mse(const GrayImage& a, const GrayImage& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("mse needs matching extents, got " + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height));
    double acc = 0;
    for (int64_t i = 0; i < a.count(); ++i) {
        const double d = static_cast<double>(a.pixels[static_cast<size_t>(i)]) -
                         static_cast<double>(b.pixels[static_cast<size_t>(i)]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.count());
}

double psnr(double mse_value) {
    if (mse_value < 0) throw DomainError("psnr needs a non-negative MSE");
    if (mse_value == 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse_value);
}

std::array<double, 121> ssim_window() {
    constexpr double sigma = 1.5;
    std::array<double, 121> w{};
    double sum = 0;
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x) {
            const double dy = y - 5, dx = x - 5;
            w[static_cast<size_t>(y * 11 + x)] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            sum += w[static_cast<size_t>(y * 11 + x)];
        }
    for (double& v : w) v /= sum;
    return w;
}

double ssim(const GrayImage& a, const GrayImage& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("ssim needs matching extents");
    if (a.width < 11 || a.height < 11)
        throw ShapeError("ssim needs extents >= 11, got " + std::to_string(a.width) + "x" +
                         std::to_string(a.height));
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    static const std::array<double, 121> win = ssim_window();

    const int64_t oh = a.height - 10;
    const int64_t ow = a.width - 10;
    std::vector<double> local(static_cast<size_t>(oh * ow));
#pragma omp parallel for schedule(static)
    for (int64_t y = 0; y < oh; ++y)
        for (int64_t x = 0; x < ow; ++x) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int wy = 0; wy < 11; ++wy)
                for (int wx = 0; wx < 11; ++wx) {
                    const double wv = win[static_cast<size_t>(wy * 11 + wx)];
                    const double pa = a.at(y + wy, x + wx);
                    const double pb = b.at(y + wy, x + wx);
                    ma += wv * pa;
                    mb += wv * pb;
                    saa += wv * pa * pa;
                    sbb += wv * pb * pb;
                    sab += wv * pa * pb;
                }
            const double va = saa - ma * ma;
            const double vb = sbb - mb * mb;
            const double cab = sab - ma * mb;
            local[static_cast<size_t>(y * ow + x)] =
                ((2 * ma * mb + c1) * (2 * cab + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    double acc = 0;
    for (double v : local) acc += v;
    return acc / static_cast<double>(oh * ow);
}

MetricsReport evaluate_pairs(const std::filesystem::path& restored_dir,
                             const std::filesystem::path& truth_dir, const std::string& label) {
    auto list = [](const std::filesystem::path& dir) {
        if (!std::filesystem::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
        std::map<std::string, std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            const std::string ext = e.path().extension().string();
            if (e.is_regular_file() && (ext == ".png" || ext == ".pgm"))
                files[e.path().filename().string()] = e.path();
        }
        return files;
    };
    const auto restored = list(restored_dir);
    const auto truth = list(truth_dir);

    std::string offenders;
    for (const auto& [name, p] : restored)
        if (!truth.count(name)) offenders += " " + name + " (no ground truth)";
    for (const auto& [name, p] : truth)
        if (!restored.count(name)) offenders += " " + name + " (no restored image)";
    if (!offenders.empty()) throw DataError("unmatched files:" + offenders);
    if (restored.empty()) throw DataError("no image pairs found");

    MetricsReport rep;
    rep.label = label;
    for (const auto& [name, rpath] : restored) {
        GrayImage r = load_image(rpath);
        GrayImage t = load_image(truth.at(name));
        const int64_t th = std::min(r.height, t.height);
        const int64_t tw = std::min(r.width, t.width);
        if (r.height != th || r.width != tw) r = crop_center(r, th, tw);
        if (t.height != th || t.width != tw) t = crop_center(t, th, tw);
        MetricRow row;
        row.id = name;
        row.mse = mse(r, t);
        row.psnr_db = psnr(row.mse);
        row.ssim = ssim(r, t);
        rep.rows.push_back(std::move(row));
    }
    for (const MetricRow& row : rep.rows) {
        rep.mean_mse += row.mse;
        rep.mean_psnr += row.psnr_db;
        rep.mean_ssim += row.ssim;
    }
    const double n = static_cast<double>(rep.rows.size());
    rep.mean_mse /= n;
    rep.mean_psnr /= n;
    rep.mean_ssim /= n;
    return rep;
}

void write_report_csv(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IOError("cannot write " + path.string());
    out << "id,mse,psnr_db,ssim\n";
    for (const MetricRow& r : report.rows)
        out << r.id << ',' << fmt(r.mse) << ',' << fmt(r.psnr_db, 4) << ',' << fmt(r.ssim, 5)
            << '\n';
    out << "AGGREGATE," << fmt(report.mean_mse) << ',' << fmt(report.mean_psnr, 4) << ','
        << fmt(report.mean_ssim, 5) << '\n';
}

std::string format_report_table(const std::vector<MetricsReport>& reports) {
    std::ostringstream os;
    os << "MSE, PSNR and SSIM Results\n";
    os << "----------------------------------------------------------------\n";
    auto pad = [](const std::string& s, size_t width) {
        return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
    };
    os << pad("Config", 30) << pad("MSE", 12) << pad("PSNR", 12) << "SSIM\n";
    for (const MetricsReport& r : reports)
        os << pad(r.label, 30) << pad(fmt(r.mean_mse), 12) << pad(fmt(r.mean_psnr, 4), 12)
           << fmt(r.mean_ssim, 5) << '\n';
    return os.str();
}

}  // namespace uf
