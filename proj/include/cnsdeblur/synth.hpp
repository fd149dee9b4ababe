#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "errors.hpp"
#include "image.hpp"

namespace cnsdeblur {

// Sampled Gaussian, side 2*ceil(3 sigma)+1 unless given; sigma 0 gives the 1x1 delta.
inline Kernel gaussian_kernel(double sigma, int size = 0) {
    if (!(sigma >= 0.0)) throw InputError("gaussian sigma must be >= 0");
    if (sigma == 0.0) return delta_kernel(size > 0 ? size : 1, size > 0 ? size : 1);
    if (size <= 0) size = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
    if (size % 2 == 0) throw InputError("gaussian kernel size must be odd");
    Kernel k(size, size);
    const int c = size / 2;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
            k(i, j) = std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) / (2.0 * sigma * sigma));
    return normalize(k);
}

// Uniform line blur. Axis-aligned odd integer lengths give exact 1xN / Nx1 boxes; other cases
// rasterize a supersampled segment.
inline Kernel motion_kernel(double length, double angle_deg = 0.0) {
    if (!(length >= 1.0)) throw InputError("motion length must be >= 1");
    const double a = std::fmod(std::fmod(angle_deg, 180.0) + 180.0, 180.0);
    const double rounded = std::round(length);
    const bool odd_int = std::abs(length - rounded) < 1e-12 && static_cast<long>(rounded) % 2 == 1;
    if (odd_int && (a == 0.0 || a == 90.0)) {
        const int n = static_cast<int>(rounded);
        Kernel k = a == 0.0 ? Kernel(1, n, 1.0 / n) : Kernel(n, 1, 1.0 / n);
        return k;
    }
    const int half = static_cast<int>(std::ceil(length / 2.0));
    const int size = 2 * half + 1;
    Kernel k(size, size);
    const double th = a * std::numbers::pi / 180.0;
    const int samples = 4001;
    for (int s = 0; s < samples; ++s) {
        const double t = -length / 2.0 + length * (s + 0.5) / samples;
        const double x = t * std::cos(th), y = -t * std::sin(th);
        const int c = std::clamp(static_cast<int>(std::lround(x)) + half, 0, size - 1);
        const int r = std::clamp(static_cast<int>(std::lround(y)) + half, 0, size - 1);
        k(r, c) += 1.0;
    }
    return normalize(k);
}

// Pillbox with 16x16 supersampled pixel coverage.
inline Kernel disk_kernel(double radius) {
    if (!(radius > 0.0)) throw InputError("disk radius must be > 0");
    const int half = static_cast<int>(std::ceil(radius));
    const int size = 2 * half + 1, ss = 16;
    Kernel k(size, size);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            int inside = 0;
            for (int a = 0; a < ss; ++a)
                for (int b = 0; b < ss; ++b) {
                    const double y = i - half - 0.5 + (a + 0.5) / ss, x = j - half - 0.5 + (b + 0.5) / ss;
                    if (x * x + y * y <= radius * radius) ++inside;
                }
            k(i, j) = static_cast<double>(inside) / (ss * ss);
        }
    return normalize(k);
}

// Replaces a `density` fraction of pixels (in expectation) by 0 or 1 with equal odds.
inline ImageGrid salt_and_pepper(const ImageGrid& image, double density, std::uint64_t seed) {
    if (!(density >= 0.0 && density <= 1.0)) throw InputError("noise density must lie in [0,1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageGrid out = image;
    for (double& v : out.data) {
        const double r = u(rng);
        const double pick = u(rng);
        if (r < density) v = pick < 0.5 ? 0.0 : 1.0;
    }
    return out;
}

namespace detail {

inline void fft2(std::vector<std::complex<double>>& a, int rows, int cols, bool inverse) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> in, out;
    in.resize(static_cast<std::size_t>(cols));
    for (int i = 0; i < rows; ++i) {
        std::copy(a.begin() + static_cast<long>(i) * cols, a.begin() + static_cast<long>(i + 1) * cols, in.begin());
        if (inverse) fft.inv(out, in);
        else fft.fwd(out, in);
        std::copy(out.begin(), out.end(), a.begin() + static_cast<long>(i) * cols);
    }
    in.resize(static_cast<std::size_t>(rows));
    for (int k = 0; k < cols; ++k) {
        for (int i = 0; i < rows; ++i) in[i] = a[static_cast<std::size_t>(i) * cols + k];
        if (inverse) fft.inv(out, in);
        else fft.fwd(out, in);
        for (int i = 0; i < rows; ++i) a[static_cast<std::size_t>(i) * cols + k] = out[i];
    }
}

} // namespace detail

// Periodic field s with sum_{i,k} a(i,k) s(n+i-ci, m+k-ck) = white noise of the given std.
inline ImageGrid ar_synthesize(const Grid& stencil, int rows, int cols, double noise_std, std::uint64_t seed) {
    check_kernel(stencil);
    if (stencil.rows > rows || stencil.cols > cols) throw DimensionError("stencil larger than output");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, noise_std);
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    std::vector<std::complex<double>> e(n), a(n);
    for (auto& v : e) v = nd(rng);
    const int ci = stencil.rows / 2, ck = stencil.cols / 2;
    // Correlation-style stencil: a(i,k) multiplies s(n + i - ci); its transfer function uses the
    // mirrored placement.
    for (int i = 0; i < stencil.rows; ++i)
        for (int k = 0; k < stencil.cols; ++k) {
            const int r = ((ci - i) % rows + rows) % rows, c = ((ck - k) % cols + cols) % cols;
            a[static_cast<std::size_t>(r) * cols + c] += stencil(i, k);
        }
    detail::fft2(e, rows, cols, false);
    detail::fft2(a, rows, cols, false);
    for (std::size_t i = 0; i < n; ++i) e[i] = std::abs(a[i]) > 1e-12 ? e[i] / a[i] : 0.0;
    detail::fft2(e, rows, cols, true);
    ImageGrid out(rows, cols);
    for (std::size_t i = 0; i < n; ++i) out.data[i] = e[i].real();
    return out;
}

} // namespace cnsdeblur
