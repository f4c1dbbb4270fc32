#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "uf/image.hpp"

namespace uf {

double mse(const GrayImage& a, const GrayImage& b);

// 10*log10(1/mse) with peak 1; mse 0 maps to +infinity (serialized "inf").
double psnr(double mse_value);

// Mean of the local SSIM map over an 11x11 Gaussian window (sigma 1.5,
// normalized to sum 1), C1 = 0.01^2, C2 = 0.03^2, windows at valid
// positions only (no border padding). Needs extents >= 11.
double ssim(const GrayImage& a, const GrayImage& b);

// The window above, row-major, for inspection.
std::array<double, 121> ssim_window();

struct MetricRow {
    std::string id;
    double mse, psnr_db, ssim;
};

struct MetricsReport {
    std::string label;
    std::vector<MetricRow> rows;
    double mean_mse = 0, mean_psnr = 0, mean_ssim = 0;
};

// Pairs files by name across the two directories (extensions .png/.pgm,
// sorted). Images of unequal extents are center-crop aligned to the smaller
// one before scoring.
MetricsReport evaluate_pairs(const std::filesystem::path& restored_dir,
                             const std::filesystem::path& truth_dir, const std::string& label);

// CSV with header id,mse,psnr_db,ssim plus a final AGGREGATE row.
void write_report_csv(const MetricsReport& report, const std::filesystem::path& path);

// Plain-text comparison block, one row per report.
std::string format_report_table(const std::vector<MetricsReport>& reports);

}  // namespace uf
