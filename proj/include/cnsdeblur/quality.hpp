#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "image.hpp"

namespace cnsdeblur {

struct AiConfig {
    int window = 8;
    // Unit steps (drow, dcol) per direction: 0, 45, 90, 135 degrees.
    std::vector<std::pair<int, int>> directions{{0, 1}, {-1, 1}, {1, 0}, {1, 1}};
    int fragment = 100;
};

// Renyi order-3 entropy of the normalized pseudo-Wigner spectrum of one window line.
inline double wigner_renyi_entropy(const std::vector<double>& z) {
    const int N = static_cast<int>(z.size());
    const int h = N / 2;
    // z is indexed by m + h for m in [-h, h-1]; products z(m) z(-m) with z(h) missing for m=-h.
    std::vector<double> prod(static_cast<std::size_t>(N));
    for (int m = -h; m < h; ++m) {
        const int mirror = -m;
        prod[m + h] = mirror < h ? z[m + h] * z[mirror + h] : 0.0;
    }
    std::vector<double> p(static_cast<std::size_t>(N));
    double total = 0.0;
    for (int k = 0; k < N; ++k) {
        double w = 0.0;
        for (int m = -h; m < h; ++m) w += prod[m + h] * std::cos(4.0 * std::numbers::pi * m * k / N);
        p[k] = w * w;
        total += p[k];
    }
    if (!(total > 0.0)) return 0.0;
    double s3 = 0.0;
    for (double v : p) {
        const double q = v / total;
        s3 += q * q * q;
    }
    return -0.5 * std::log2(s3);
}

inline double anisotropy_index(const ImageGrid& image, const AiConfig& cfg = {}) {
    if (cfg.window < 2 || cfg.window % 2) throw ContractError("AI window must be even and >= 2");
    if (cfg.fragment > image.rows || cfg.fragment > image.cols || cfg.fragment < 1)
        throw DimensionError("AI fragment exceeds image");
    if (cfg.directions.size() < 2) throw ContractError("AI needs at least two directions");
    const int top = (image.rows - cfg.fragment) / 2, left = (image.cols - cfg.fragment) / 2;
    const int h = cfg.window / 2;
    std::vector<double> means;
    std::vector<double> line(static_cast<std::size_t>(cfg.window));
    for (const auto& [dr, dc] : cfg.directions) {
        double acc = 0.0;
        for (int i = top; i < top + cfg.fragment; ++i)
            for (int k = left; k < left + cfg.fragment; ++k) {
                for (int m = -h; m < h; ++m) {
                    const int r = std::clamp(i + m * dr, 0, image.rows - 1);
                    const int c = std::clamp(k + m * dc, 0, image.cols - 1);
                    line[m + h] = image(r, c);
                }
                acc += wigner_renyi_entropy(line);
            }
        means.push_back(acc / (static_cast<double>(cfg.fragment) * cfg.fragment));
    }
    double mu = 0.0;
    for (double v : means) mu += v;
    mu /= static_cast<double>(means.size());
    double var = 0.0;
    for (double v : means) var += (v - mu) * (v - mu);
    return std::sqrt(var / static_cast<double>(means.size()));
}

// Returns +infinity for identical images.
inline double psnr(const ImageGrid& a, const ImageGrid& b, double peak = 1.0) {
    if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("PSNR of images with different sizes");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mse += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

} // namespace cnsdeblur
