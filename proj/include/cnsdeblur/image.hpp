#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace cnsdeblur {

// Row-major 2D grid of reals. Images and kernels share this representation.
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Grid() = default;
    Grid(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw DimensionError("grid dimensions must be nonnegative");
    }
    Grid(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
        if (r < 0 || c < 0 || data.size() != static_cast<std::size_t>(r) * c)
            throw DimensionError("grid data length does not match " + std::to_string(r) + "x" + std::to_string(c));
    }

    double& operator()(int i, int k) { return data[static_cast<std::size_t>(i) * cols + k]; }
    double operator()(int i, int k) const { return data[static_cast<std::size_t>(i) * cols + k]; }

    int width() const { return cols; }
    int height() const { return rows; }
    int taps_l() const { return rows; }
    int taps_m() const { return cols; }
    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    bool operator==(const Grid&) const = default;
};

using ImageGrid = Grid;
using Kernel = Grid;

enum class BoundaryPolicy { replicate, zero };

inline bool all_finite(const Grid& g) {
    return std::all_of(g.data.begin(), g.data.end(), [](double v) { return std::isfinite(v); });
}

inline double grid_sum(const Grid& g) {
    double s = 0.0;
    for (double v : g.data) s += v;
    return s;
}

inline double inner(const Grid& a, const Grid& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("inner product of grids with different shapes");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline double frobenius(const Grid& a) { return std::sqrt(inner(a, a)); }

inline void check_kernel(const Kernel& k) {
    if (k.rows < 1 || k.cols < 1 || k.rows % 2 == 0 || k.cols % 2 == 0)
        throw DimensionError("kernel dimensions must be odd and >= 1, got " + std::to_string(k.rows) + "x" +
                             std::to_string(k.cols));
}

inline Kernel delta_kernel(int l, int m) {
    Kernel k(l, m);
    check_kernel(k);
    k((l - 1) / 2, (m - 1) / 2) = 1.0;
    return k;
}

// Scales taps to unit sum.
inline Kernel normalize(const Kernel& k) {
    double s = grid_sum(k);
    if (!(std::abs(s) > 1e-12)) throw DegenerateError("kernel sums to ~0; cannot normalize");
    Kernel out = k;
    for (double& v : out.data) v /= s;
    return out;
}

inline Kernel rotate180(const Kernel& k) {
    Kernel out(k.rows, k.cols);
    for (int i = 0; i < k.rows; ++i)
        for (int j = 0; j < k.cols; ++j) out(i, j) = k(k.rows - 1 - i, k.cols - 1 - j);
    return out;
}

namespace detail {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

} // namespace detail

// out(i,k) = sum_{l,m} K(l,m) * img(i + l - cl, k + m - cm), cl = (L-1)/2.
inline ImageGrid convolve(const ImageGrid& image, const Kernel& kernel,
                          BoundaryPolicy boundary = BoundaryPolicy::replicate) {
    check_kernel(kernel);
    if (kernel.rows > image.rows || kernel.cols > image.cols)
        throw DimensionError("kernel " + std::to_string(kernel.rows) + "x" + std::to_string(kernel.cols) +
                             " larger than image " + std::to_string(image.rows) + "x" + std::to_string(image.cols));
    const int H = image.rows, W = image.cols, L = kernel.rows, M = kernel.cols;
    const int cl = (L - 1) / 2, cm = (M - 1) / 2;
    ImageGrid out(H, W);
    std::vector<int> colidx(static_cast<std::size_t>(W + M - 1));
    for (int c = 0; c < W + M - 1; ++c) colidx[c] = detail::clampi(c - cm, 0, W - 1);
    for (int i = 0; i < H; ++i) {
        double* orow = &out.data[static_cast<std::size_t>(i) * W];
        for (int l = 0; l < L; ++l) {
            int r = i + l - cl;
            if (r < 0 || r >= H) {
                if (boundary == BoundaryPolicy::zero) continue;
                r = detail::clampi(r, 0, H - 1);
            }
            const double* irow = &image.data[static_cast<std::size_t>(r) * W];
            for (int m = 0; m < M; ++m) {
                const double w = kernel(l, m);
                if (w == 0.0) continue;
                if (boundary == BoundaryPolicy::zero) {
                    const int k0 = std::max(0, cm - m), k1 = std::min(W, W + cm - m);
                    for (int k = k0; k < k1; ++k) orow[k] += w * irow[k + m - cm];
                } else {
                    const int* ci = &colidx[m];
                    for (int k = 0; k < W; ++k) orow[k] += w * irow[ci[k]];
                }
            }
        }
    }
    return out;
}

// Adjoint of convolve: convolution with the kernel rotated by 180 degrees.
inline ImageGrid correlate(const ImageGrid& image, const Kernel& kernel,
                           BoundaryPolicy boundary = BoundaryPolicy::replicate) {
    return convolve(image, rotate180(kernel), boundary);
}

// Full 2D convolution; the kernel equivalent to applying a then b with convolve().
inline Kernel compose(const Kernel& a, const Kernel& b) {
    Kernel out(a.rows + b.rows - 1, a.cols + b.cols - 1);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) {
            const double w = a(i, j);
            if (w == 0.0) continue;
            for (int p = 0; p < b.rows; ++p)
                for (int q = 0; q < b.cols; ++q) out(i + p, j + q) += w * b(p, q);
        }
    return out;
}

// Share of total absolute mass carried by the central tap.
inline double center_share(const Kernel& k) {
    check_kernel(k);
    double total = 0.0;
    for (double v : k.data) total += std::abs(v);
    if (total == 0.0) return 0.0;
    return std::abs(k((k.rows - 1) / 2, (k.cols - 1) / 2)) / total;
}

inline ImageGrid gradient(const ImageGrid& image) {
    if (image.rows < 3 || image.cols < 3) throw DimensionError("gradient needs an image of at least 3x3");
    const int H = image.rows, W = image.cols;
    ImageGrid out(H, W);
    for (int i = 0; i < H; ++i) {
        const int up = std::max(i - 1, 0), dn = std::min(i + 1, H - 1);
        for (int k = 0; k < W; ++k) {
            const int lf = std::max(k - 1, 0), rt = std::min(k + 1, W - 1);
            out(i, k) = 0.5 * (image(dn, k) - image(up, k) + image(i, rt) - image(i, lf));
        }
    }
    return out;
}

inline std::vector<double> lex_window(const ImageGrid& image, int top, int left, int rows, int cols) {
    if (rows < 0 || cols < 0 || top < 0 || left < 0 || top + rows > image.rows || left + cols > image.cols)
        throw DimensionError("window outside image");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k < cols; ++k) out.push_back(image(top + i, left + k));
    return out;
}

// Centered sub-block of size rows x cols.
inline Grid center_crop(const Grid& g, int rows, int cols) {
    if (rows > g.rows || cols > g.cols || (g.rows - rows) % 2 || (g.cols - cols) % 2)
        throw DimensionError("center crop must remove an even number of rows/cols");
    const int t = (g.rows - rows) / 2, l = (g.cols - cols) / 2;
    Grid out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k < cols; ++k) out(i, k) = g(t + i, l + k);
    return out;
}

// Zero-pads symmetrically to rows x cols.
inline Grid center_pad(const Grid& g, int rows, int cols) {
    if (rows < g.rows || cols < g.cols || (rows - g.rows) % 2 || (cols - g.cols) % 2)
        throw DimensionError("center pad must add an even number of rows/cols");
    const int t = (rows - g.rows) / 2, l = (cols - g.cols) / 2;
    Grid out(rows, cols);
    for (int i = 0; i < g.rows; ++i)
        for (int k = 0; k < g.cols; ++k) out(t + i, l + k) = g(i, k);
    return out;
}

} // namespace cnsdeblur
